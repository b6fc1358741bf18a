"""
Task Registry - 태스크 one-hot 슬롯과 주파수 대역 할당

슬롯 인덱스는 등록 순서로 고정되며 체크포인트 config JSON에 함께 저장됩니다.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from core.errors import TaskError

DEFAULT_TASKS = ["deblur", "deshadow", "illuminate", "binarize", "hw_remove"]

# 태스크별 손실 대역: low → L1 + β1·L_lowfreq, high → L1 + β2·L_highfreq
KNOWN_BANDS: Dict[str, str] = {
    "deblur": "high",
    "deshadow": "low",
    "illuminate": "low",
    "binarize": "high",
    "hw_remove": "high",
    "denoise": "high",
}

DEWARP_TASK = "dewarp"


@dataclass(frozen=True)
class TaskVector:
    """등록된 태스크 하나의 one-hot 인코딩"""

    name: str
    index: int
    slots: int
    band: str

    @property
    def one_hot(self) -> np.ndarray:
        vec = np.zeros(self.slots, dtype=np.float32)
        vec[self.index] = 1.0
        return vec


class TaskRegistry:
    """task_slots 길이의 one-hot 슬롯 관리 (빈 슬롯은 extend_task용)"""

    def __init__(self, slots: int = 8, tasks: Optional[List[str]] = None, bands: Optional[Dict[str, str]] = None):
        self.slots = slots
        self._names: List[str] = []
        self._bands: Dict[str, str] = {}
        for name in tasks if tasks is not None else DEFAULT_TASKS:
            self.register(name, (bands or {}).get(name))

    # ==================== 등록/조회 ====================

    def register(self, name: str, band: Optional[str] = None) -> TaskVector:
        """
        빈 슬롯에 태스크 등록

        Raises:
            TaskError: 슬롯이 모두 찼거나 대역을 알 수 없을 때
        """
        if name in self._names:
            return self.get(name)
        if name == DEWARP_TASK:
            raise TaskError("dewarp는 픽셀 태스크가 아니므로 슬롯을 쓰지 않습니다 (dewarp 명령 사용)")
        if len(self._names) >= self.slots:
            raise TaskError(
                f"빈 태스크 슬롯이 없습니다 (task_slots={self.slots}, 등록됨={self._names}). "
                f"더 큰 task_slots로 Stage 1을 다시 학습하세요"
            )
        band = band or KNOWN_BANDS.get(name)
        if band not in ("low", "high"):
            raise TaskError(f"태스크 {name}의 주파수 대역(low/high)을 지정해야 합니다")
        self._names.append(name)
        self._bands[name] = band
        return self.get(name)

    def get(self, name: str) -> TaskVector:
        if name not in self._names:
            raise TaskError(f"등록되지 않은 태스크: {name} (등록된 태스크: {', '.join(self._names)})")
        return TaskVector(name=name, index=self._names.index(name), slots=self.slots, band=self._bands[name])

    def __contains__(self, name: str) -> bool:
        return name in self._names

    def __len__(self) -> int:
        return len(self._names)

    @property
    def names(self) -> List[str]:
        return list(self._names)

    @property
    def spare_slots(self) -> int:
        return self.slots - len(self._names)

    def one_hot_batch(self, names: List[str]) -> np.ndarray:
        return np.stack([self.get(n).one_hot for n in names])

    # ==================== 직렬화 ====================

    def to_dict(self) -> Dict:
        return {"slots": self.slots, "tasks": list(self._names), "bands": dict(self._bands)}

    @classmethod
    def from_dict(cls, data: Dict) -> "TaskRegistry":
        return cls(slots=int(data["slots"]), tasks=list(data["tasks"]), bands=dict(data.get("bands", {})))
