"""Dense float64 tensors with a reverse-mode autodiff tape.

Every tensor produced by an operation remembers its parents and a closure
that pushes its gradient back to them.  Tensors are numbered at creation,
so creation order is a topological order of the graph and ``backward``
simply walks the reachable nodes by decreasing id.
"""
from __future__ import annotations

import itertools
from typing import Callable, Iterable, Sequence

import numpy as np

_ids = itertools.count()


class ShapeError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward", "_id")

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = (), op: str = "leaf"):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self.op = op
        self._parents = _parents
        self._backward: Callable[[np.ndarray], None] | None = None
        self._id = next(_ids)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self) -> dict[Tensor, np.ndarray]:
        """Back-propagate from this scalar, accumulating into each leaf's ``grad``.

        Returns a map from every reached ``requires_grad`` leaf to its gradient.
        """
        if self.data.size != 1:
            raise ValueError(f"backward needs a scalar root, got shape {self.shape}")
        nodes = _reachable(self)
        # interior nodes keep their gradient only for the duration of the sweep
        grads: dict[int, np.ndarray] = {self._id: np.ones_like(self.data)}
        leaves = {}
        for node in sorted(nodes, key=lambda t: t._id, reverse=True):
            g = grads.pop(node._id, None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node._accumulate(g)
                    leaves[node] = node.grad
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if parent._id in grads:
                    grads[parent._id] = grads[parent._id] + pg
                else:
                    grads[parent._id] = pg
        return leaves

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)


def _reachable(root: Tensor) -> list[Tensor]:
    seen = {root._id: root}
    stack = [root]
    while stack:
        node = stack.pop()
        for p in node._parents:
            if p._id not in seen and p.requires_grad:
                seen[p._id] = p
                stack.append(p)
    return list(seen.values())


def _node(data, parents: tuple, op: str, backward) -> Tensor:
    _check_finite(np.asarray(data), op)
    out = Tensor(data, _parents=parents, op=op)
    if out.requires_grad:
        out._backward = backward
    else:
        out._parents = ()
    return out


def _check_finite(arr: np.ndarray, op: str):
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"{op} produced non-finite values")


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    out = a.data @ b.data

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return _node(out, (a, b), "matmul", backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum.  ``b`` may be a ``(1, n)`` or ``(n,)`` bias row added to every row of ``a``."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape == b.shape:
        def backward(g):
            return g, g
    elif a.data.ndim == 2 and b.shape in ((a.shape[1],), (1, a.shape[1])):
        bshape = b.shape

        def backward(g):
            return g, g.sum(axis=0).reshape(bshape)
    else:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} differ")
    return _node(a.data + b.data, (a, b), "add", backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape} differ")

    def backward(g):
        return g * b.data, g * a.data

    return _node(a.data * b.data, (a, b), "mul", backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward(g):
        return (g * c,)

    return _node(a.data * c, (a,), "scale", backward)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def backward(g):
        return (g * (1.0 - out * out),)

    return _node(out, (a,), "tanh", backward)


def relu(a: Tensor) -> Tensor:
    pos = a.data > 0

    def backward(g):
        return (g * pos,)

    return _node(np.where(pos, a.data, 0.0), (a,), "relu", backward)


def identity(a: Tensor) -> Tensor:
    return a


def elementwise(a: Tensor, kind: str, other=None) -> Tensor:
    """Dispatch by name: ``add``, ``mul``, ``tanh``, ``relu`` or ``scale``."""
    if kind == "add":
        return add(a, other)
    if kind == "mul":
        return mul(a, other)
    if kind == "scale":
        return scale(a, other)
    if kind == "tanh":
        return tanh(a)
    if kind == "relu":
        return relu(a)
    raise ValueError(f"unknown elementwise kind {kind!r}")


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got {a.shape}")

    def backward(g):
        return (g.T,)

    return _node(a.data.T.copy(), (a,), "transpose", backward)


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape

    def backward(g):
        return (np.full(shape, float(g)),)

    return _node(a.data.sum(), (a,), "sum", backward)


def gather_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Row lookup ``table[ids]``; the backward pass scatter-adds into the table."""
    ids = np.asarray(list(ids), dtype=np.int64)
    v = table.shape[0]
    for i in ids:
        if i < 0 or i >= v:
            raise IndexError(f"gather_rows: id {int(i)} outside [0, {v})")

    def backward(g):
        out = np.zeros_like(table.data)
        np.add.at(out, ids, g)
        return (out,)

    return _node(table.data[ids], (table,), "gather", backward)


def concat_rows(parts: Iterable[Tensor]) -> Tensor:
    parts = tuple(parts)
    widths = {p.shape[1] for p in parts}
    if len(widths) != 1:
        raise ShapeError(f"concat_rows: widths differ {[p.shape for p in parts]}")
    bounds = np.cumsum([0] + [p.shape[0] for p in parts])

    def backward(g):
        return tuple(g[bounds[i]:bounds[i + 1]] for i in range(len(parts)))

    return _node(np.concatenate([p.data for p in parts], axis=0), parts, "concat", backward)


def softmax_rows(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _node(s, (a,), "softmax", backward)


def softmax_cross_entropy(logits: Tensor, targets: Sequence[int], mask: Sequence[bool] | None = None) -> Tensor:
    """Mean of ``-log softmax(logits[i])[targets[i]]`` over positions with ``mask[i]`` true."""
    n, c = logits.shape
    mask = np.ones(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if len(targets) != n or mask.shape != (n,):
        raise ShapeError(f"softmax_cross_entropy: {n} rows but {len(targets)} targets, {mask.shape} mask")
    count = int(mask.sum())
    if count == 0:
        raise DegenerateInputError("softmax_cross_entropy: every position is masked")
    tgt = np.asarray(targets, dtype=np.int64)
    for i in np.flatnonzero(mask):
        if not 0 <= tgt[i] < c:
            raise IndexError(f"softmax_cross_entropy: target {int(tgt[i])} outside [0, {c})")
    tgt = np.where(mask, tgt, 0)
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    logp = z[np.arange(n), tgt] - logsumexp
    loss = -(logp * mask).sum() / count

    def backward(g):
        p = np.exp(z - logsumexp[:, None])
        p[np.arange(n), tgt] -= 1.0
        p *= mask[:, None] / count
        return (p * float(g),)

    return _node(loss, (logits,), "xent", backward)


def custom_scalar(a: Tensor, value: float, grad: np.ndarray, op: str) -> Tensor:
    """Scalar node whose gradient with respect to ``a`` is supplied in closed form."""
    if grad.shape != a.shape:
        raise ShapeError(f"{op}: gradient shape {grad.shape} != input shape {a.shape}")

    def backward(g):
        return (grad * float(g),)

    return _node(value, (a,), op, backward)
