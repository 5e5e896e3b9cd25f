"""Central-difference verification of analytic gradients."""

from __future__ import annotations

import math

from .errors import GradientCheckError
from .params import ParamStore

DEFAULT_STEP = 1e-5


def check_gradient(fn, store: ParamStore, step: float = DEFAULT_STEP,
                   fn_value=None) -> float:
    """Max relative error of analytic vs central-difference gradients.

    ``fn(store)`` must return the scalar loss and (re)populate every
    trainable parameter's grad slot; grads are zeroed here before the call.
    ``fn_value``, when given, is a cheaper value-only evaluation used for the
    perturbed points.  Relative error per coordinate is
    ``|analytic - fd| / max(1, |fd|)``.
    """
    if step <= 0:
        raise GradientCheckError("step must be positive")
    evaluate = fn_value if fn_value is not None else fn

    store.zero_grads()
    base = float(fn(store))
    if not math.isfinite(base):
        raise GradientCheckError("non-finite loss at the evaluation point")
    analytic = {name: p.grad.copy() for name, p in store.items() if p.trainable}

    worst = 0.0
    for name, p in store.items():
        if not p.trainable:
            continue
        flat = p.value.reshape(-1)
        grad = analytic[name].reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + step
            f_plus = float(evaluate(store))
            flat[j] = old - step
            f_minus = float(evaluate(store))
            flat[j] = old
            if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                raise GradientCheckError(
                    f"non-finite loss perturbing {name}[{j}]")
            fd = (f_plus - f_minus) / (2.0 * step)
            err = abs(grad[j] - fd) / max(1.0, abs(fd))
            if err > worst:
                worst = err
    return worst
