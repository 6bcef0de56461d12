"""Minimal reverse-mode autodiff over dense 2-D float64 arrays.

Vectors are (1, d) arrays; scalars are (1, 1). Parameters are leaf nodes whose
values persist across steps; a fresh graph is built per forward pass.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class ShapeError(Exception):
    pass


class ContractError(Exception):
    pass


def _as_value(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"expected at most 2 dimensions, got {arr.ndim}")
    return arr


class Node:
    __slots__ = ("value", "parents", "grad", "_backward", "is_param")

    def __init__(self, value, parents=(), backward=None, is_param=False):
        self.value = _as_value(value)
        self.parents = tuple(parents)
        self.grad: np.ndarray | None = None
        self._backward = backward
        self.is_param = is_param

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g


def constant(x) -> Node:
    return Node(x)


def parameter(x) -> Node:
    return Node(x, is_param=True)


def _same_shape(a: Node, b: Node, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a: Node, b: Node) -> Node:
    """Elementwise sum; a (1, d) operand broadcasts over (n, d) rows."""
    if a.shape != b.shape:
        if not (a.shape[1] == b.shape[1] and 1 in (a.shape[0], b.shape[0])):
            raise ShapeError(f"add: shape mismatch {a.shape} vs {b.shape}")
    out = Node(a.value + b.value, (a, b))

    def backward(g):
        ga = g.sum(axis=0, keepdims=True) if a.shape[0] == 1 and g.shape[0] > 1 else g
        gb = g.sum(axis=0, keepdims=True) if b.shape[0] == 1 and g.shape[0] > 1 else g
        a.accumulate(ga)
        b.accumulate(gb)

    out._backward = backward
    return out


def sub(a: Node, b: Node) -> Node:
    _same_shape(a, b, "sub")
    out = Node(a.value - b.value, (a, b))

    def backward(g):
        a.accumulate(g)
        b.accumulate(-g)

    out._backward = backward
    return out


def mul(a: Node, b: Node) -> Node:
    _same_shape(a, b, "mul")
    out = Node(a.value * b.value, (a, b))

    def backward(g):
        a.accumulate(g * b.value)
        b.accumulate(g * a.value)

    out._backward = backward
    return out


def matmul(a: Node, b: Node) -> Node:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims differ {a.shape} vs {b.shape}")
    out = Node(a.value @ b.value, (a, b))

    def backward(g):
        a.accumulate(g @ b.value.T)
        b.accumulate(a.value.T @ g)

    out._backward = backward
    return out


def transpose(a: Node) -> Node:
    out = Node(a.value.T.copy(), (a,))
    out._backward = lambda g: a.accumulate(g.T)
    return out


def scale(a: Node, c: float) -> Node:
    out = Node(a.value * c, (a,))
    out._backward = lambda g: a.accumulate(g * c)
    return out


def sum_all(a: Node) -> Node:
    out = Node(a.value.sum(), (a,))
    out._backward = lambda g: a.accumulate(np.full_like(a.value, g[0, 0]))
    return out


def mean_rows(a: Node) -> Node:
    """(n, d) -> (1, d) column means."""
    n = a.shape[0]
    out = Node(a.value.mean(axis=0, keepdims=True), (a,))
    out._backward = lambda g: a.accumulate(np.repeat(g, n, axis=0) / n)
    return out


def softmax(a: Node) -> Node:
    """Row-wise max-shifted softmax."""
    y = kernels.softmax_rows(a.value)
    out = Node(y, (a,))
    out._backward = lambda g: a.accumulate(kernels.softmax_rows_backward(y, g))
    return out


def log(a: Node) -> Node:
    out = Node(np.log(a.value), (a,))
    out._backward = lambda g: a.accumulate(g / a.value)
    return out


def relu(a: Node) -> Node:
    mask = a.value > 0
    out = Node(a.value * mask, (a,))
    out._backward = lambda g: a.accumulate(g * mask)
    return out


def sigmoid(a: Node) -> Node:
    y = 1.0 / (1.0 + np.exp(-a.value))
    out = Node(y, (a,))
    out._backward = lambda g: a.accumulate(g * y * (1.0 - y))
    return out


def logsigmoid(a: Node) -> Node:
    """log(sigmoid(x)), computed stably as min(x, 0) - log1p(exp(-|x|))."""
    x = a.value
    y = np.minimum(x, 0.0) - np.log1p(np.exp(-np.abs(x)))
    out = Node(y, (a,))
    out._backward = lambda g: a.accumulate(g / (1.0 + np.exp(x)))
    return out


def cos(a: Node) -> Node:
    out = Node(np.cos(a.value), (a,))
    out._backward = lambda g: a.accumulate(-g * np.sin(a.value))
    return out


def sin(a: Node) -> Node:
    out = Node(np.sin(a.value), (a,))
    out._backward = lambda g: a.accumulate(g * np.cos(a.value))
    return out


def l2norm(a: Node) -> Node:
    """Euclidean norm of the whole array, as a (1, 1) scalar."""
    norm = float(np.sqrt((a.value**2).sum()))
    out = Node(norm, (a,))

    def backward(g):
        if norm > 0.0:
            a.accumulate(g[0, 0] * a.value / norm)
        # zero-norm subgradient: 0

    out._backward = backward
    return out


def euclid(a: Node, b: Node) -> Node:
    """Euclidean distance ||a - b||, zero-distance gradient defined as 0."""
    _same_shape(a, b, "euclid")
    diff = a.value - b.value
    dist = float(np.sqrt((diff**2).sum()))
    out = Node(dist, (a, b))

    def backward(g):
        if dist > 0.0:
            d = g[0, 0] * diff / dist
            a.accumulate(d)
            b.accumulate(-d)

    out._backward = backward
    return out


def rownorm(a: Node) -> Node:
    """(n, d) -> (n, 1) per-row Euclidean norms (zero rows get zero gradient)."""
    norms = np.sqrt((a.value**2).sum(axis=1, keepdims=True))
    out = Node(norms, (a,))

    def backward(g):
        safe = np.where(norms > 0.0, norms, 1.0)
        a.accumulate(np.where(norms > 0.0, g / safe, 0.0) * a.value)

    out._backward = backward
    return out


def rowsum(a: Node) -> Node:
    """(n, d) -> (n, 1) row sums."""
    out = Node(a.value.sum(axis=1, keepdims=True), (a,))
    out._backward = lambda g: a.accumulate(np.repeat(g, a.shape[1], axis=1))
    return out


def _check_even(a: Node, op: str) -> int:
    if a.shape[1] % 2 != 0:
        raise ShapeError(f"{op}: column count must be even, got {a.shape[1]}")
    return a.shape[1] // 2


def split_halves(a: Node) -> tuple[Node, Node]:
    """x -> (lower-half columns, higher-half columns)."""
    h = _check_even(a, "split_halves")
    lo = Node(a.value[:, :h].copy(), (a,))
    hi = Node(a.value[:, h:].copy(), (a,))

    def back_lo(g):
        full = np.zeros_like(a.value)
        full[:, :h] = g
        a.accumulate(full)

    def back_hi(g):
        full = np.zeros_like(a.value)
        full[:, h:] = g
        a.accumulate(full)

    lo._backward = back_lo
    hi._backward = back_hi
    return lo, hi


def concat_halves(lo: Node, hi: Node) -> Node:
    _same_shape(lo, hi, "concat_halves")
    return concat_cols(lo, hi)


def concat_cols(a: Node, b: Node) -> Node:
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: row counts differ {a.shape} vs {b.shape}")
    ca = a.shape[1]
    out = Node(np.concatenate([a.value, b.value], axis=1), (a, b))

    def backward(g):
        a.accumulate(g[:, :ca])
        b.accumulate(g[:, ca:])

    out._backward = backward
    return out


def complex_mul(a: Node, b: Node) -> Node:
    """Elementwise complex product of half-split vectors.

    Columns [0, d/2) hold real parts, [d/2, d) imaginary parts:
    (a_lh*b_lh - a_hh*b_hh, a_hh*b_lh + a_lh*b_hh).
    """
    _same_shape(a, b, "complex_mul")
    h = _check_even(a, "complex_mul")
    out = Node(kernels.complex_mul_packed(a.value, b.value), (a, b))

    def backward(g):
        gr, gi = g[:, :h], g[:, h:]
        ar, ai = a.value[:, :h], a.value[:, h:]
        br, bi = b.value[:, :h], b.value[:, h:]
        # grad wrt a = "conj(b) * g" in the packed layout, and symmetrically
        a.accumulate(
            np.concatenate([gr * br + gi * bi, gi * br - gr * bi], axis=1)
        )
        b.accumulate(
            np.concatenate([gr * ar + gi * ai, gi * ar - gr * ai], axis=1)
        )

    out._backward = backward
    return out


def rows(matrix: Node, indices) -> Node:
    """Gather rows by index; the gradient scatter-adds into the matrix."""
    idx = np.asarray(indices, dtype=np.int64)
    out = Node(matrix.value[idx], (matrix,))

    def backward(g):
        full = np.zeros_like(matrix.value)
        np.add.at(full, idx, g)
        matrix.accumulate(full)

    out._backward = backward
    return out


def dropout(a: Node, p: float, rng: np.random.Generator, training: bool) -> Node:
    """Inverted-scaling dropout; identity when not training or p == 0."""
    if not training or p <= 0.0:
        return a
    mask = (rng.random(a.shape) >= p) / (1.0 - p)
    out = Node(a.value * mask, (a,))
    out._backward = lambda g: a.accumulate(g * mask)
    return out


def backward(loss: Node) -> None:
    """Accumulate d(loss)/d(node) for every node reachable from loss."""
    if loss.shape != (1, 1):
        raise ContractError(f"loss must be a (1, 1) scalar, got {loss.shape}")
    topo: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    loss.accumulate(np.ones((1, 1)))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
