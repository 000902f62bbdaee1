"""Minimal reverse-mode autodiff over float64 numpy arrays.

Every operation builds a node recording its parents and a closure that
accumulates gradients into them.  Graphs are per-sentence and small, so
clarity and determinism win over batching: one op call = one node.
The LSTM cell is the only fused composite (analytic backward) because it
dominates node counts in the encoders.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Reverse-mode sweep from a scalar loss."""
        if self.data.shape != ():
            raise DataError(f"backward requires a scalar, got shape {self.data.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self._accumulate(np.ones(()))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)
        # free intermediate grads/graph references; parameters keep theirs
        for node in topo:
            if not isinstance(node, Parameter):
                node._parents = ()
                node._backward = None
                if node is not self:
                    node.grad = None


class Parameter(Tensor):
    __slots__ = ("name",)

    def __init__(self, name: str, data):
        super().__init__(data)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.data.shape})"

    def zero_grad(self):
        self.grad[...] = 0.0


def constant(values) -> Tensor:
    return Tensor(np.asarray(values, dtype=np.float64))


def _node(data, parents, backward) -> Tensor:
    return Tensor(data, parents=tuple(parents), backward=backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise DataError(f"add shape mismatch {a.data.shape} vs {b.data.shape}")

    def backward(g):
        a._accumulate(g)
        b._accumulate(g)

    return _node(a.data + b.data, (a, b), backward)


def add_rowvec(m: Tensor, v: Tensor) -> Tensor:
    """Broadcast-add a vector to every row of a matrix."""
    if m.data.ndim != 2 or m.data.shape[1] != v.data.shape[0]:
        raise DataError(f"add_rowvec shape mismatch {m.data.shape} vs {v.data.shape}")

    def backward(g):
        m._accumulate(g)
        v._accumulate(g.sum(axis=0))

    return _node(m.data + v.data[None, :], (m, v), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise DataError(f"mul shape mismatch {a.data.shape} vs {b.data.shape}")

    def backward(g):
        a._accumulate(g * b.data)
        b._accumulate(g * a.data)

    return _node(a.data * b.data, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    def backward(g):
        a._accumulate(g * factor)

    return _node(a.data * factor, (a,), backward)


def matvec(m: Tensor, v: Tensor) -> Tensor:
    if m.data.ndim != 2 or m.data.shape[1] != v.data.shape[0]:
        raise DataError(f"matvec shape mismatch {m.data.shape} @ {v.data.shape}")

    def backward(g):
        m._accumulate(np.outer(g, v.data))
        v._accumulate(m.data.T @ g)

    return _node(m.data @ v.data, (m, v), backward)


def vecmat(v: Tensor, m: Tensor) -> Tensor:
    if m.data.ndim != 2 or v.data.shape[0] != m.data.shape[0]:
        raise DataError(f"vecmat shape mismatch {v.data.shape} @ {m.data.shape}")

    def backward(g):
        v._accumulate(m.data @ g)
        m._accumulate(np.outer(v.data, g))

    return _node(v.data @ m.data, (v, m), backward)


def matmat(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DataError(f"matmat shape mismatch {a.data.shape} @ {b.data.shape}")

    def backward(g):
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    return _node(a.data @ b.data, (a, b), backward)


def dot(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape or a.data.ndim != 1:
        raise DataError(f"dot shape mismatch {a.data.shape} vs {b.data.shape}")

    def backward(g):
        a._accumulate(g * b.data)
        b._accumulate(g * a.data)

    return _node(a.data @ b.data, (a, b), backward)


def concat(parts: list[Tensor]) -> Tensor:
    if not parts:
        raise DataError("concat of zero tensors")
    sizes = [p.data.shape[0] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            part._accumulate(g[lo:hi])

    return _node(np.concatenate([p.data for p in parts]), parts, backward)


def narrow(t: Tensor, start: int, length: int) -> Tensor:
    def backward(g):
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad[start : start + length] += g

    return _node(t.data[start : start + length].copy(), (t,), backward)


def tanh(t: Tensor) -> Tensor:
    out = np.tanh(t.data)

    def backward(g):
        t._accumulate(g * (1.0 - out * out))

    return _node(out, (t,), backward)


def sigmoid(t: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-t.data))

    def backward(g):
        t._accumulate(g * out * (1.0 - out))

    return _node(out, (t,), backward)


def relu(t: Tensor) -> Tensor:
    mask = t.data > 0

    def backward(g):
        t._accumulate(g * mask)

    return _node(t.data * mask, (t,), backward)


def vsum(t: Tensor) -> Tensor:
    def backward(g):
        t._accumulate(np.full_like(t.data, float(g)))

    return _node(t.data.sum(), (t,), backward)


def pick(t: Tensor, index: int) -> Tensor:
    """Select one element of a vector as a scalar."""

    def backward(g):
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad[index] += g

    return _node(t.data[index], (t,), backward)


def masked_max(t: Tensor, indices: list[int]) -> Tensor:
    """Max over a subset of a score vector; subgradient to the first argmax."""
    if not indices:
        raise DataError("masked_max over empty index set")
    best = max(indices, key=lambda i: (t.data[i], -i))

    def backward(g):
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad[best] += g

    return _node(t.data[best], (t,), backward)


def softmax(t: Tensor) -> Tensor:
    shifted = t.data - t.data.max()
    e = np.exp(shifted)
    p = e / e.sum()

    def backward(g):
        t._accumulate(p * (g - float(p @ g)))

    return _node(p, (t,), backward)


def cross_entropy(logits: Tensor, target: int) -> Tensor:
    """Softmax cross-entropy against a single target index."""
    z = logits.data
    if not 0 <= target < z.shape[0]:
        raise DataError(f"cross_entropy target {target} out of range {z.shape[0]}")
    zmax = z.max()
    lse = zmax + np.log(np.exp(z - zmax).sum())

    def backward(g):
        p = np.exp(z - lse)
        p[target] -= 1.0
        logits._accumulate(g * p)

    return _node(lse - z[target], (logits,), backward)


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, w: Tensor, u: Tensor, b: Tensor) -> Tensor:
    """One LSTM step, fused; returns [h'; c'] stacked (see split_state).

    Gate layout along the 4H axis: input, forget, output, candidate.
    """
    hidden = h.data.shape[0]
    z = w.data @ x.data + u.data @ h.data + b.data
    i = 1.0 / (1.0 + np.exp(-z[:hidden]))
    f = 1.0 / (1.0 + np.exp(-z[hidden : 2 * hidden]))
    o = 1.0 / (1.0 + np.exp(-z[2 * hidden : 3 * hidden]))
    g_cand = np.tanh(z[3 * hidden :])
    c_new = f * c.data + i * g_cand
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c

    def backward(grad):
        gh, gc_out = grad[:hidden], grad[hidden:]
        gc = gc_out + gh * o * (1.0 - tanh_c * tanh_c)
        gz = np.concatenate(
            [
                gc * g_cand * i * (1.0 - i),
                gc * c.data * f * (1.0 - f),
                gh * tanh_c * o * (1.0 - o),
                gc * i * (1.0 - g_cand * g_cand),
            ]
        )
        w._accumulate(np.outer(gz, x.data))
        u._accumulate(np.outer(gz, h.data))
        b._accumulate(gz)
        x._accumulate(w.data.T @ gz)
        h._accumulate(u.data.T @ gz)
        c._accumulate(gc * f)

    return _node(np.concatenate([h_new, c_new]), (x, h, c, w, u, b), backward)


def split_state(hc: Tensor, hidden: int) -> tuple[Tensor, Tensor]:
    """Split a stacked [h; c] state back into (h, c) views."""
    return narrow(hc, 0, hidden), narrow(hc, hidden, hidden)


def transpose(t: Tensor) -> Tensor:
    """Differentiable transpose of a 2-D tensor."""

    def backward(g):
        t._accumulate(g.T)

    return _node(t.data.T.copy(), (t,), backward)
