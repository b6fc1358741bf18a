"""
API Routes - FastAPI 추론 엔드포인트 정의
"""
import logging
import os
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.responses import JSONResponse, Response

from app.api.schemas import ErrorResponse, HealthResponse, PriorsResponse
from core.config import CHECKPOINT_PATH
from core.errors import CheckpointError, UniDocError
from core.imageio import decode_image, encode_image
from pipeline.checkpoint import read_checkpoint
from pipeline.inference import Restorer
from priors.pool import build_prior_pool

logger = logging.getLogger(__name__)

MEDIA_TYPES = {"ppm": "image/x-portable-pixmap", "png": "image/png"}


class ModelHolder:
    """체크포인트에서 지연 로드한 Restorer (서버 프로세스당 하나)"""

    def __init__(self, path: str):
        self.path = path
        self.restorer: Optional[Restorer] = None
        self.stage: Optional[str] = None

    def load(self) -> Restorer:
        if self.restorer is None:
            if not os.path.exists(self.path):
                raise CheckpointError(f"체크포인트 파일이 없습니다: {self.path}")
            self.stage = read_checkpoint(self.path).stage
            self.restorer = Restorer.from_checkpoint(self.path)
        return self.restorer


def _image_response(image, fmt: str) -> Response:
    fmt = fmt.lower()
    if fmt not in MEDIA_TYPES:
        fmt = "ppm"
    return Response(content=encode_image(image, fmt), media_type=MEDIA_TYPES[fmt])


def create_app(checkpoint_path: Optional[str] = None) -> FastAPI:
    """FastAPI 앱 생성

    Args:
        checkpoint_path: 서빙할 UDDF 경로 (기본: CHECKPOINT_PATH)
    """
    holder = ModelHolder(checkpoint_path or CHECKPOINT_PATH)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        """앱 시작 시 체크포인트 로드 시도 (없어도 서버는 뜸)"""
        logger.info(f"UniDoc 추론 서버 시작 (checkpoint={holder.path})")
        try:
            holder.load()
        except UniDocError as e:
            logger.warning(f"체크포인트 로드 실패: {e.one_line()}")
        yield
        logger.info("UniDoc 추론 서버 종료")

    app = FastAPI(
        title="UniDoc",
        description="문서 이미지 복원/dewarp 추론 API",
        version="1.0.0",
        lifespan=lifespan
    )
    app.state.holder = holder

    @app.exception_handler(UniDocError)
    async def unidoc_error_handler(request: Request, exc: UniDocError):
        message = " ".join(str(exc).split())
        return JSONResponse(status_code=400, content=ErrorResponse(code=exc.code, detail=message).model_dump())

    # 라우트 등록
    @app.get("/health", response_model=HealthResponse)
    async def health_check():
        """헬스 체크 (체크포인트 상태와 파라미터 그룹 크기)"""
        restorer = holder.restorer
        if restorer is None:
            return HealthResponse(status="no_checkpoint", checkpoint=holder.path, loaded=False)
        return HealthResponse(
            status="healthy",
            checkpoint=holder.path,
            loaded=True,
            stage=holder.stage,
            tasks=restorer.model.tasks.names,
            has_cpb=restorer.model.cpb is not None,
            group_sizes=restorer.model.group_sizes(),
        )

    @app.post("/restore")
    async def restore(
        image: UploadFile = File(...),
        task: str = Form(...),
        steps: Optional[int] = Form(None),
        seed: int = Form(0),
        fmt: str = Form("ppm", alias="format"),
    ):
        """열화 이미지 복원 → 이미지 바이트"""
        restorer = holder.load()
        array = decode_image(await image.read())
        restored = restorer.restore(array, task, steps, seed)
        return _image_response(restored, fmt)

    @app.post("/dewarp")
    async def dewarp(image: UploadFile = File(...), fmt: str = Form("ppm", alias="format")):
        """왜곡 이미지 평탄화 → 이미지 바이트"""
        restorer = holder.load()
        flat, bm = restorer.dewarp(decode_image(await image.read()))
        response = _image_response(flat, fmt)
        response.headers["X-Backward-Map-Grid"] = str(bm.G)
        return response

    @app.post("/priors", response_model=PriorsResponse)
    async def priors(image: UploadFile = File(...)):
        """Prior Pool 채널 이름과 채널별 평균 (체크포인트 불필요)"""
        array = decode_image(await image.read())
        settings = holder.restorer.settings if holder.restorer is not None else None
        pool = build_prior_pool(array, settings)
        return PriorsResponse(
            width=int(array.shape[2]),
            height=int(array.shape[1]),
            channels=list(pool.channels),
            means=pool.channel_means(),
        )

    return app
