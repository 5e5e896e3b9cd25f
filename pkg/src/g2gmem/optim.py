"""Adam optimizer over a ParamStore."""

from __future__ import annotations

import numpy as np

from .params import ParamStore


class Adam:
    """Standard Adam; skips non-trainable parameters, lazily creates state for
    parameters added after construction (new-session prototypes)."""

    def __init__(self, store: ParamStore, lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t: dict[str, int] = {}

    def step(self) -> None:
        for name, p in self.store.items():
            if not p.trainable:
                continue
            if name not in self._m:
                self._m[name] = np.zeros_like(p.value)
                self._v[name] = np.zeros_like(p.value)
                self._t[name] = 0
            self._t[name] += 1
            t = self._t[name]
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(p.grad)
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
