"""
Param Store - 이름 기반 파라미터 저장소

이름은 점으로 구분된 경로(예: "encoder.stage1.res1.conv1.weight")이며,
첫 번째 세그먼트가 파라미터 그룹(encoder, mid, decoder, pfm, cpb)입니다.
"""
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

from autograd.tensor import Tensor
from core.errors import ShapeError

PARAM_GROUPS = ("encoder", "mid", "decoder", "pfm", "cpb")


class ParamStore:
    """정렬된 (이름 → Tensor) 맵과 학습 가능 여부 플래그"""

    def __init__(self):
        self._tensors: Dict[str, Tensor] = {}
        self._trainable: Dict[str, bool] = {}

    # ==================== 등록/조회 ====================

    def add(self, name: str, value: Tensor, trainable: bool = True) -> Tensor:
        """파라미터 등록 (중복 이름은 오류)"""
        if name in self._tensors:
            raise KeyError(f"이미 등록된 파라미터: {name}")
        value.requires_grad = trainable
        self._tensors[name] = value
        self._trainable[name] = trainable
        return value

    def get(self, name: str, default: Optional[Tensor] = None) -> Optional[Tensor]:
        return self._tensors.get(name, default)

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> List[str]:
        """사전순 이름 목록 (반복 순서 고정)"""
        return sorted(self._tensors)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        for name in self.names():
            yield name, self._tensors[name]

    def is_trainable(self, name: str) -> bool:
        return self._trainable[name]

    def trainable_items(self) -> Iterator[Tuple[str, Tensor]]:
        for name, value in self.items():
            if self._trainable[name]:
                yield name, value

    # ==================== 동결 ====================

    def set_trainable(self, predicate, trainable: bool) -> int:
        """predicate(name)이 참인 파라미터의 학습 여부 변경, 변경 개수 반환"""
        count = 0
        for name, value in self._tensors.items():
            if predicate(name):
                self._trainable[name] = trainable
                value.requires_grad = trainable
                if not trainable:
                    value.grad = None
                count += 1
        return count

    def freeze(self, prefixes: Iterable[str]) -> int:
        """이름이 prefixes 중 하나로 시작하는 파라미터 동결"""
        prefixes = tuple(prefixes)
        return self.set_trainable(lambda n: _matches(n, prefixes), False)

    def freeze_all_except(self, prefixes: Iterable[str]) -> int:
        """prefixes 그룹만 학습 가능 상태로 두고 나머지는 모두 동결"""
        prefixes = tuple(prefixes)
        self.set_trainable(lambda n: _matches(n, prefixes), True)
        return self.set_trainable(lambda n: not _matches(n, prefixes), False)

    def unfreeze(self, prefixes: Iterable[str] = ("",)) -> int:
        prefixes = tuple(prefixes)
        return self.set_trainable(lambda n: _matches(n, prefixes), True)

    # ==================== 유틸리티 ====================

    def zero_grad(self) -> None:
        for value in self._tensors.values():
            value.grad = None

    def group_of(self, name: str) -> str:
        return name.split(".", 1)[0]

    def group_sizes(self) -> Dict[str, int]:
        """그룹별 파라미터 원소 수"""
        sizes: Dict[str, int] = {}
        for name, value in self.items():
            group = self.group_of(name)
            sizes[group] = sizes.get(group, 0) + int(value.data.size)
        return sizes

    def has_group(self, group: str) -> bool:
        return any(self.group_of(name) == group for name in self._tensors)

    def snapshot(self) -> Dict[str, np.ndarray]:
        """모든 파라미터의 numpy 복사본"""
        return {name: value.data.copy() for name, value in self.items()}

    def load_arrays(self, arrays: Dict[str, np.ndarray], strict: bool = False) -> List[str]:
        """
        배열 값을 기존 파라미터에 덮어쓰기

        Returns:
            store에 있으나 arrays에 없어서 초기값을 유지한 이름 목록
        """
        missing = []
        for name, value in self._tensors.items():
            if name not in arrays:
                missing.append(name)
                continue
            array = arrays[name]
            if array.shape != value.shape:
                raise ShapeError(f"파라미터 {name} shape 불일치: {array.shape} vs {value.shape}")
            value.data = np.array(array, dtype=value.dtype, copy=True)
        if strict and missing:
            raise KeyError(f"체크포인트에 없는 파라미터: {missing[:5]}")
        return sorted(missing)


def _matches(name: str, prefixes: Tuple[str, ...]) -> bool:
    return any(name == p or name.startswith(p + ".") or p == "" for p in prefixes)
