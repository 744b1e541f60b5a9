"""Minimal reverse-mode autodiff over float64 numpy arrays.

Only the operations the models and losses need are implemented: elementwise
arithmetic with broadcasting, dense and sparse-constant matmul, relu, exp,
log, sqrt, clip, axis sums, row gathers and segment sums for pooling.
Every op result is checked for NaN/Inf (raising NumericsError) unless
``strict_checks`` is turned off.

Gradients accumulate into ``Tensor.grad``; callers zero them between steps.
``no_grad()`` disables graph recording for inference passes.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import DimensionError, NumericsError

strict_checks = True
_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _check_finite(data: np.ndarray, op: str):
    if strict_checks and not np.isfinite(data).all():
        raise NumericsError(f"non-finite values produced by op '{op}'")


class Tensor:
    """Array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    # operator sugar; non-Tensor operands become constants
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _ensure(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, op: str, parents: tuple[Tensor, ...], vjp) -> Tensor:
    _check_finite(data, op)
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    return _make(
        a.data + b.data, "add", (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    return _make(
        a.data - b.data, "sub", (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)),
    )


def neg(a) -> Tensor:
    a = _ensure(a)
    return _make(-a.data, "neg", (a,), lambda g: (-g,))


def mul(a, b) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    return _make(
        a.data * b.data, "mul", (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def div(a, b) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    return _make(
        a.data / b.data, "div", (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        ),
    )


def matmul(a, b) -> Tensor:
    a, b = _ensure(a), _ensure(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError("matmul expects 2-d operands")
    return _make(
        a.data @ b.data, "matmul", (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def spmm(sp, b) -> Tensor:
    """Constant sparse matrix times tensor. ``sp`` is scipy CSR/CSC and is
    treated as data, never differentiated."""
    b = _ensure(b)
    sp_t = sp.T.tocsr()
    return _make(
        np.asarray(sp @ b.data), "spmm", (b,),
        lambda g: (np.asarray(sp_t @ g),),
    )


def relu(a) -> Tensor:
    a = _ensure(a)
    data = np.maximum(a.data, 0.0)
    mask = data > 0.0
    return _make(data, "relu", (a,), lambda g: (g * mask,))


def exp(a) -> Tensor:
    a = _ensure(a)
    data = np.exp(a.data)
    return _make(data, "exp", (a,), lambda g: (g * data,))


def log(a) -> Tensor:
    a = _ensure(a)
    return _make(np.log(a.data), "log", (a,), lambda g: (g / a.data,))


def sqrt(a) -> Tensor:
    a = _ensure(a)
    data = np.sqrt(a.data)
    return _make(data, "sqrt", (a,), lambda g: (g * 0.5 / data,))


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient passes only where unclamped."""
    a = _ensure(a)
    data = np.clip(a.data, lo, hi)
    mask = (a.data >= lo) & (a.data <= hi)
    return _make(data, "clip", (a,), lambda g: (g * mask,))


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _ensure(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.data.shape).copy(),)

    return _make(data, "sum", (a,), vjp)


def tmean(a) -> Tensor:
    a = _ensure(a)
    size = a.data.size
    return _make(
        np.asarray(a.data.mean()), "mean", (a,),
        lambda g: (np.broadcast_to(g / size, a.data.shape).copy(),),
    )


def gather_rows(a, idx) -> Tensor:
    """Pick one column per row: out[i] = a[i, idx[i]]."""
    a = _ensure(a)
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(a.data.shape[0])
    data = a.data[rows, idx]

    def vjp(g):
        z = np.zeros_like(a.data)
        np.add.at(z, (rows, idx), g)
        return (z,)

    return _make(data, "gather_rows", (a,), vjp)


def segment_sum(a, sizes) -> Tensor:
    """Sum consecutive row blocks: block i has ``sizes[i]`` rows."""
    a = _ensure(a)
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.sum() != a.data.shape[0]:
        raise DimensionError("segment sizes must cover all rows")
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    data = np.add.reduceat(a.data, starts, axis=0)

    def vjp(g):
        return (np.repeat(g, sizes, axis=0),)

    return _make(data, "segment_sum", (a,), vjp)


def log_softmax(logits) -> Tensor:
    """Row-wise log softmax with max subtraction for stability."""
    logits = _ensure(logits)
    shift = Tensor(logits.data.max(axis=-1, keepdims=True))  # constant; grad exact
    z = sub(logits, shift)
    return sub(z, log(tsum(exp(z), axis=-1, keepdims=True)))


def backward(loss: Tensor):
    """Reverse-mode sweep from a scalar loss; accumulates into .grad."""
    if loss.data.size != 1:
        raise DimensionError("backward needs a scalar loss")
    if not loss.requires_grad:
        raise NumericsError("backward called on a tensor with no recorded graph")

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._vjp is not None:
            parent_grads = node._vjp(g)
            for p, pg in zip(node._parents, parent_grads):
                if not p.requires_grad:
                    continue
                _check_finite(pg, "backward")
                if p._vjp is None:  # leaf: accumulate into .grad
                    if p.grad is None:
                        p.grad = np.zeros_like(p.data)
                    p.grad = p.grad + pg.reshape(p.data.shape)
                else:
                    key = id(p)
                    if key in grads:
                        grads[key] = grads[key] + pg
                    else:
                        grads[key] = pg
        else:
            # loss itself may be a leaf in degenerate cases; nothing to do
            if node is not loss and node.grad is None:
                node.grad = g
    # a leaf passed directly as loss
    if loss._vjp is None and loss.requires_grad:
        if loss.grad is None:
            loss.grad = np.zeros_like(loss.data)
        loss.grad = loss.grad + np.ones_like(loss.data)
