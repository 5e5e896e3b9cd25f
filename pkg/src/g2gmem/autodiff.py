"""Reverse-mode differentiation over a fixed vocabulary of matrix operations.

Every operation takes and returns :class:`Var` nodes wrapping 2-D float64
arrays.  Each op carries its own hand-written backward rule; calling
:func:`backward` on a scalar (1x1) node accumulates gradients into every
reachable node's ``grad`` slot.  There is no broadcasting: shapes must match
exactly, vectors are (n, 1) columns, scalars are (1, 1).
"""

from __future__ import annotations

import numpy as np

from . import numeric
from .errors import ShapeError

EPS = 1e-12


class Var:
    __slots__ = ("value", "grad", "parents", "backward_fn")

    def __init__(self, value: np.ndarray, parents=(), backward_fn=None):
        self.value = value
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.backward_fn = backward_fn

    @property
    def shape(self):
        return self.value.shape


def leaf(value) -> Var:
    """Wrap an array as an independent tape input."""
    return Var(np.asarray(value, dtype=np.float64))


def constant(value) -> Var:
    return leaf(value)


def _acc(v: Var, g: np.ndarray) -> None:
    if v.grad is None:
        v.grad = np.zeros_like(v.value)
    v.grad += g


def backward(out: Var) -> None:
    """Backpropagate from a scalar node through the tape."""
    if out.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar (1,1) node, got {out.shape}")
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(out, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    out.grad = np.ones((1, 1))
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


def _need(a: Var, shape, op: str) -> None:
    if a.shape != shape:
        raise ShapeError(f"{op}: expected shape {shape}, got {a.shape}")


# -- arithmetic ---------------------------------------------------------------

def add(a: Var, b: Var) -> Var:
    _need(b, a.shape, "add")
    out = Var(a.value + b.value, (a, b))
    out.backward_fn = lambda g: (_acc(a, g), _acc(b, g))
    return out


def sub(a: Var, b: Var) -> Var:
    _need(b, a.shape, "sub")
    out = Var(a.value - b.value, (a, b))
    out.backward_fn = lambda g: (_acc(a, g), _acc(b, -g))
    return out


def neg(a: Var) -> Var:
    out = Var(-a.value, (a,))
    out.backward_fn = lambda g: _acc(a, -g)
    return out


def hadamard(a: Var, b: Var) -> Var:
    _need(b, a.shape, "hadamard")
    out = Var(a.value * b.value, (a, b))
    out.backward_fn = lambda g: (_acc(a, g * b.value), _acc(b, g * a.value))
    return out


def cmul(a: Var, c: float) -> Var:
    out = Var(a.value * c, (a,))
    out.backward_fn = lambda g: _acc(a, g * c)
    return out


def cadd(a: Var, c: float) -> Var:
    out = Var(a.value + c, (a,))
    out.backward_fn = lambda g: _acc(a, g)
    return out


def smul(a: Var, s: Var) -> Var:
    """Matrix times (1,1) scalar node."""
    _need(s, (1, 1), "smul scalar")
    sv = s.value[0, 0]
    out = Var(a.value * sv, (a, s))

    def bw(g):
        _acc(a, g * sv)
        _acc(s, np.array([[np.sum(g * a.value)]]))
    out.backward_fn = bw
    return out


def matmul(a: Var, b: Var) -> Var:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    out = Var(a.value @ b.value, (a, b))
    out.backward_fn = lambda g: (_acc(a, g @ b.value.T), _acc(b, a.value.T @ g))
    return out


def transpose(a: Var) -> Var:
    out = Var(np.ascontiguousarray(a.value.T), (a,))
    out.backward_fn = lambda g: _acc(a, g.T)
    return out


def reshape(a: Var, rows: int, cols: int) -> Var:
    if a.value.size != rows * cols:
        raise ShapeError(f"reshape: {a.shape} -> ({rows},{cols})")
    out = Var(a.value.reshape(rows, cols), (a,))
    out.backward_fn = lambda g: _acc(a, g.reshape(a.shape))
    return out


def concat_rows(parts: list[Var]) -> Var:
    cols = parts[0].shape[1]
    for p in parts:
        _need(p, (p.shape[0], cols), "concat_rows")
    out = Var(np.vstack([p.value for p in parts]), tuple(parts))
    offsets = np.cumsum([0] + [p.shape[0] for p in parts])

    def bw(g):
        for p, i0, i1 in zip(parts, offsets[:-1], offsets[1:]):
            _acc(p, g[i0:i1, :])
    out.backward_fn = bw
    return out


def concat_cols(parts: list[Var]) -> Var:
    rows = parts[0].shape[0]
    for p in parts:
        _need(p, (rows, p.shape[1]), "concat_cols")
    out = Var(np.hstack([p.value for p in parts]), tuple(parts))
    offsets = np.cumsum([0] + [p.shape[1] for p in parts])

    def bw(g):
        for p, j0, j1 in zip(parts, offsets[:-1], offsets[1:]):
            _acc(p, g[:, j0:j1])
    out.backward_fn = bw
    return out


def slice_rows(a: Var, i0: int, i1: int) -> Var:
    out = Var(a.value[i0:i1, :].copy(), (a,))

    def bw(g):
        full = np.zeros_like(a.value)
        full[i0:i1, :] = g
        _acc(a, full)
    out.backward_fn = bw
    return out


def slice_cols(a: Var, j0: int, j1: int) -> Var:
    out = Var(a.value[:, j0:j1].copy(), (a,))

    def bw(g):
        full = np.zeros_like(a.value)
        full[:, j0:j1] = g
        _acc(a, full)
    out.backward_fn = bw
    return out


# -- elementwise nonlinearities -----------------------------------------------

def relu(a: Var) -> Var:
    mask = a.value > 0.0
    out = Var(np.where(mask, a.value, 0.0), (a,))
    out.backward_fn = lambda g: _acc(a, g * mask)
    return out


def leaky_relu(a: Var, slope: float = numeric.LEAKY_SLOPE) -> Var:
    mask = a.value > 0.0
    out = Var(np.where(mask, a.value, slope * a.value), (a,))
    out.backward_fn = lambda g: _acc(a, g * np.where(mask, 1.0, slope))
    return out


def elu(a: Var, alpha: float = numeric.ELU_ALPHA) -> Var:
    val = numeric.elu(a.value, alpha)
    mask = a.value > 0.0
    out = Var(val, (a,))
    # d/dx alpha*(e^x - 1) = alpha*e^x = value + alpha on the negative branch
    out.backward_fn = lambda g: _acc(a, g * np.where(mask, 1.0, val + alpha))
    return out


def exp(a: Var) -> Var:
    val = np.exp(a.value)
    out = Var(val, (a,))
    out.backward_fn = lambda g: _acc(a, g * val)
    return out


def log(a: Var) -> Var:
    out = Var(np.log(a.value), (a,))
    out.backward_fn = lambda g: _acc(a, g / a.value)
    return out


def reciprocal(a: Var) -> Var:
    val = 1.0 / a.value
    out = Var(val, (a,))
    out.backward_fn = lambda g: _acc(a, -g * val * val)
    return out


def sqrt_guarded(a: Var) -> Var:
    """Elementwise sqrt with the derivative clamped near zero."""
    val = np.sqrt(np.maximum(a.value, 0.0))
    out = Var(val, (a,))
    out.backward_fn = lambda g: _acc(a, g * 0.5 / np.maximum(val, EPS))
    return out


def rsqrt_guarded(a: Var, eps: float = EPS) -> Var:
    """1/sqrt(max(x, eps)); gradient is zero on the clamped branch."""
    clamped = np.maximum(a.value, eps)
    val = 1.0 / np.sqrt(clamped)
    mask = a.value > eps
    out = Var(val, (a,))
    out.backward_fn = lambda g: _acc(a, g * np.where(mask, -0.5 * val / clamped, 0.0))
    return out


# -- reductions ---------------------------------------------------------------

def sum_all(a: Var) -> Var:
    out = Var(np.array([[np.sum(a.value)]]), (a,))
    out.backward_fn = lambda g: _acc(a, np.full_like(a.value, g[0, 0]))
    return out


def mean_cols(a: Var) -> Var:
    """Average over columns; (r, c) -> (r, 1)."""
    c = a.shape[1]
    out = Var(a.value.mean(axis=1, keepdims=True), (a,))
    out.backward_fn = lambda g: _acc(a, np.repeat(g / c, c, axis=1))
    return out


# -- structured ops -----------------------------------------------------------

def softmax_rows(a: Var) -> Var:
    y = numeric.softmax_rows(a.value)
    out = Var(y, (a,))

    def bw(g):
        dot = np.sum(g * y, axis=1, keepdims=True)
        _acc(a, y * (g - dot))
    out.backward_fn = bw
    return out


def pairwise_euclidean(a: Var) -> Var:
    """Row-pair distance matrix; gradient of the zero diagonal is zero."""
    d = numeric.pairwise_euclidean(a.value)
    out = Var(d, (a,))

    def bw(g):
        w = (g + g.T) / np.maximum(d, EPS)
        np.fill_diagonal(w, 0.0)
        _acc(a, w.sum(axis=1, keepdims=True) * a.value - w @ a.value)
    out.backward_fn = bw
    return out


def cosine_matrix(a: Var) -> Var:
    """All-pairs cosine similarity of rows; zero-norm rows score 0 everywhere."""
    x = a.value
    n = np.sqrt(np.sum(x * x, axis=1))
    ok = n > EPS
    ninv = np.where(ok, 1.0 / np.maximum(n, EPS), 0.0)
    y = x * ninv[:, None]
    c = y @ y.T
    c[~ok, :] = 0.0
    c[:, ~ok] = 0.0
    out = Var(c, (a,))

    def bw(g):
        h = g + g.T
        grad = (h @ y - np.sum(h * c, axis=1, keepdims=True) * y) * ninv[:, None]
        _acc(a, grad)
    out.backward_fn = bw
    return out


# -- composites ---------------------------------------------------------------

def fro_norm(a: Var) -> Var:
    """Frobenius norm (L2 norm for column vectors) as a (1,1) node."""
    return sqrt_guarded(sum_all(hadamard(a, a)))


def sum_sq(a: Var) -> Var:
    return sum_all(hadamard(a, a))


def logsumexp_col(a: Var) -> Var:
    """log(sum(exp(x))) of a column vector, max-stabilized."""
    m = float(np.max(a.value))
    return cadd(log(sum_all(exp(cadd(a, -m)))), m)


def ones(rows: int, cols: int) -> Var:
    return constant(np.ones((rows, cols)))


def zeros(rows: int, cols: int) -> Var:
    return constant(np.zeros((rows, cols)))


class TapeParams:
    """One leaf node per named parameter per tape.

    Reusing the same leaf across a batch makes per-sample gradients accumulate
    on it; :meth:`flush` then adds the result into the store's grad slots for
    trainable parameters only.
    """

    def __init__(self, store):
        self.store = store
        self._vars: dict[str, Var] = {}

    def var(self, name: str) -> Var:
        v = self._vars.get(name)
        if v is None:
            v = leaf(self.store[name].value)
            self._vars[name] = v
        return v

    def flush(self) -> None:
        for name, v in self._vars.items():
            p = self.store[name]
            if p.trainable and v.grad is not None:
                p.grad += v.grad
