"""Named trainable parameters with gradient slots."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .numeric import as_matrix


@dataclass
class Param:
    value: np.ndarray
    grad: np.ndarray
    trainable: bool = True


class ParamStore:
    """Flat name -> Param map.  Names are unique; grad shape tracks value shape."""

    def __init__(self) -> None:
        self._params: dict[str, Param] = {}

    def add(self, name: str, value, trainable: bool = True) -> Param:
        if name in self._params:
            raise ShapeError(f"parameter {name!r} already exists")
        v = as_matrix(value, name)
        p = Param(value=v, grad=np.zeros_like(v), trainable=trainable)
        self._params[name] = p
        return p

    def remove(self, name: str) -> None:
        del self._params[name]

    def __getitem__(self, name: str) -> Param:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.grad.fill(0.0)

    def set_trainable(self, name: str, flag: bool) -> None:
        self._params[name].trainable = flag

    def n_trainable_coords(self) -> int:
        return sum(p.value.size for p in self._params.values() if p.trainable)

    def save_npz(self, path) -> None:
        arrays = {}
        flags = {}
        for name, p in self._params.items():
            arrays[name] = p.value
            flags[name] = p.trainable
        np.savez(path, __trainable__=np.array(
            [f"{n}={int(t)}" for n, t in flags.items()]), **arrays)

    @classmethod
    def load_npz(cls, path) -> "ParamStore":
        store = cls()
        with np.load(path, allow_pickle=False) as z:
            flags = {}
            for entry in z["__trainable__"]:
                name, val = str(entry).rsplit("=", 1)
                flags[name] = bool(int(val))
            for name in z.files:
                if name == "__trainable__":
                    continue
                store.add(name, z[name], trainable=flags.get(name, True))
        return store


def init_uniform(rng: np.random.Generator, rows: int, cols: int,
                 fan_in: int | None = None) -> np.ndarray:
    """Fan-in scaled uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    if fan_in is None:
        fan_in = cols
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=(rows, cols))
