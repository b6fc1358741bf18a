"""
Core Errors - 예외 계층 정의

모든 예외는 기계 파싱용 code를 가지며, CLI는 이를
`error code=<CODE> message=<...>` 한 줄로 출력합니다.
"""


class UniDocError(Exception):
    """프로젝트 공통 예외"""

    code = "ERROR"

    def one_line(self) -> str:
        """CLI 출력용 한 줄 메시지"""
        message = " ".join(str(self).split())
        return f"error code={self.code} message={message}"


class ShapeError(UniDocError, ValueError):
    """텐서 shape/extent 불일치"""

    code = "SHAPE"


class ConfigError(UniDocError, ValueError):
    """잘못된 설정 값"""

    code = "CONFIG"


class TaskError(UniDocError, KeyError):
    """등록되지 않은 태스크 또는 빈 슬롯 부족"""

    code = "TASK"

    def __str__(self) -> str:
        # KeyError는 메시지를 repr로 감싸므로 원문 그대로 반환
        return str(self.args[0]) if self.args else ""


class CheckpointError(UniDocError):
    """체크포인트 읽기/쓰기 오류"""

    code = "CHECKPOINT"


class CheckpointMagicError(CheckpointError):
    code = "CKPT_MAGIC"


class CheckpointVersionError(CheckpointError):
    code = "CKPT_VERSION"


class CheckpointCRCError(CheckpointError):
    code = "CKPT_CRC"


class CheckpointContentError(CheckpointError):
    """필요한 파라미터 그룹이 체크포인트에 없음"""

    code = "CKPT_CONTENT"


class TrainingDivergedError(UniDocError):
    """학습 중 NaN/Inf 손실 발생"""

    code = "NAN_LOSS"


class GradcheckError(UniDocError):
    code = "GRADCHECK"


class SynthesisError(UniDocError):
    """합성 데이터 생성 실패 (재시도 한도 초과 등)"""

    code = "SYNTH"


class ImageFormatError(UniDocError):
    """읽을 수 없는 이미지 파일/바이트"""

    code = "IMAGE"
