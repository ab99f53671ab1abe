"""A small reverse-mode differentiation engine over dense 2-D float64 arrays.

Every :class:`Tensor` holds a ``(rows, cols)`` array. Operations build a
graph of parent links with a local backward closure; :func:`backward` orders
that graph topologically and walks it once in reverse. Binary operations
broadcast numpy-style over size-1 axes (scalars are ``(1, 1)``, column
vectors ``(n, 1)``, bias rows ``(1, d)``).

There is no global tape, so independent graphs can be built and
differentiated from different threads.
"""

import numpy as np

from . import _kernels
from .errors import (
    EmptyMaskError,
    InvalidProbabilityError,
    NotScalarError,
    ShapeMismatchError,
)

SELU_ALPHA = 1.6732632423543772848170429916717
SELU_SCALE = 1.0507009873554804934193349852946
CE_EPS = 1e-12


def _as2d(data):
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeMismatchError(f"tensors are 2-D, got shape {arr.shape}")
    return arr


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "name")

    def __init__(self, data, requires_grad=False, name=None, _parents=(), _op=""):
        self.data = _as2d(data)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward = None
        self.op = _op
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, op={self.op or 'leaf'}, requires_grad={self.requires_grad})"

    def item(self):
        if self.data.size != 1:
            raise NotScalarError(f"item() on tensor of shape {self.shape}")
        return float(self.data[0, 0])

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data.copy())

    def backward(self):
        backward(self)

    # operator sugar
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
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def tensor(data, requires_grad=False, name=None):
    return Tensor(data, requires_grad=requires_grad, name=name)


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, op):
    needs = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs, _parents=parents if needs else (), _op=op)
    return out


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    return grad.sum(axis=axes, keepdims=True).reshape(shape)


def _accum(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad = t.grad + g


def _broadcast_shape(a, b, op):
    try:
        shape = np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None
    return shape


# -- linear algebra -----------------------------------------------------------

def matmul(a, b):
    a, b = _lift(a), _lift(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: {a.shape} @ {b.shape}")
    out = _result(a.data @ b.data, (a, b), "matmul")

    def _bw(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    out._backward = _bw
    return out


def add(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "add")
    out = _result(a.data + b.data, (a, b), "add")

    def _bw(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    out._backward = _bw
    return out


def sub(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "sub")
    out = _result(a.data - b.data, (a, b), "sub")

    def _bw(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, -_unbroadcast(g, b.shape))

    out._backward = _bw
    return out


def mul(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "mul")
    out = _result(a.data * b.data, (a, b), "mul")

    def _bw(g):
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    out._backward = _bw
    return out


def div(a, b):
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "div")
    out = _result(a.data / b.data, (a, b), "div")

    def _bw(g):
        _accum(a, _unbroadcast(g / b.data, a.shape))
        _accum(b, _unbroadcast(-g * a.data / b.data**2, b.shape))

    out._backward = _bw
    return out


def scale(a, c):
    """Multiply by a Python constant ``c`` (not differentiated)."""
    a = _lift(a)
    c = float(c)
    out = _result(a.data * c, (a,), "scale")

    def _bw(g):
        _accum(a, g * c)

    out._backward = _bw
    return out


def power(a, p):
    a = _lift(a)
    p = float(p)
    out = _result(a.data**p, (a,), "power")

    def _bw(g):
        _accum(a, g * p * a.data ** (p - 1.0))

    out._backward = _bw
    return out


def sum(a):  # noqa: A001 - mirrors numpy naming
    a = _lift(a)
    out = _result(np.array([[a.data.sum()]]), (a,), "sum")

    def _bw(g):
        _accum(a, np.full(a.shape, g[0, 0]))

    out._backward = _bw
    return out


def mean(a):
    return scale(sum(a), 1.0 / a.data.size)


# -- elementwise nonlinearities -------------------------------------------------

def _unary(a, f, df, op):
    """``df(x, y)`` returns dy/dx given input ``x`` and output ``y``."""
    a = _lift(a)
    y = f(a.data)
    out = _result(y, (a,), op)

    def _bw(g):
        _accum(a, g * df(a.data, y))

    out._backward = _bw
    return out


def sigmoid(a):
    def f(x):
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out

    return _unary(a, f, lambda x, y: y * (1.0 - y), "sigmoid")


def selu(a):
    def f(x):
        return SELU_SCALE * np.where(x > 0, x, SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))

    def df(x, y):
        return np.where(x > 0, SELU_SCALE, SELU_SCALE * SELU_ALPHA * np.exp(np.minimum(x, 0.0)))

    return _unary(a, f, df, "selu")


def tanh(a):
    return _unary(a, np.tanh, lambda x, y: 1.0 - y * y, "tanh")


def arctanh(a):
    return _unary(a, np.arctanh, lambda x, y: 1.0 / (1.0 - x * x), "arctanh")


def tan(a):
    return _unary(a, np.tan, lambda x, y: 1.0 + y * y, "tan")


def arctan(a):
    return _unary(a, np.arctan, lambda x, y: 1.0 / (1.0 + x * x), "arctan")


def sqrt(a):
    return _unary(a, np.sqrt, lambda x, y: 0.5 / y, "sqrt")


def log(a):
    return _unary(a, np.log, lambda x, y: 1.0 / x, "log")


# -- row-wise operations ----------------------------------------------------------

def softmax_rows(a):
    a = _lift(a)
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)
    out = _result(y, (a,), "softmax_rows")

    def _bw(g):
        _accum(a, y * (g - np.sum(g * y, axis=1, keepdims=True)))

    out._backward = _bw
    return out


def concat_cols(tensors):
    tensors = [_lift(t) for t in tensors]
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1:
        raise ShapeMismatchError(f"concat_cols: row counts differ {sorted(rows)}")
    out = _result(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors), "concat_cols")
    widths = np.cumsum([0] + [t.shape[1] for t in tensors])

    def _bw(g):
        for t, lo, hi in zip(tensors, widths[:-1], widths[1:]):
            _accum(t, g[:, lo:hi])

    out._backward = _bw
    return out


def row_norm(a, floor=0.0):
    """Euclidean norm of each row as an ``(n, 1)`` column, plus ``floor``.

    The gradient at a zero row is taken as zero.
    """
    a = _lift(a)
    raw = np.sqrt(np.sum(a.data * a.data, axis=1, keepdims=True))
    out = _result(raw + floor, (a,), "row_norm")

    def _bw(g):
        safe = np.where(raw > 0, raw, 1.0)
        _accum(a, g * np.where(raw > 0, a.data / safe, 0.0))

    out._backward = _bw
    return out


def row_dot(a, b):
    a, b = _lift(a), _lift(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"row_dot: {a.shape} vs {b.shape}")
    out = _result(np.sum(a.data * b.data, axis=1, keepdims=True), (a, b), "row_dot")

    def _bw(g):
        _accum(a, g * b.data)
        _accum(b, g * a.data)

    out._backward = _bw
    return out


def dropout(a, p, rng, training=True):
    """Inverted dropout; identity when ``training`` is false or ``p == 0``."""
    if not 0.0 <= p < 1.0:
        raise InvalidProbabilityError(f"dropout probability {p} not in [0, 1)")
    a = _lift(a)
    if not training or p == 0.0:
        return a
    keep = (rng.random(a.shape) >= p) / (1.0 - p)
    out = _result(a.data * keep, (a,), "dropout")

    def _bw(g):
        _accum(a, g * keep)

    out._backward = _bw
    return out


# -- graph gather / scatter ---------------------------------------------------------

def gather_rows(a, index):
    """Select rows ``a[index]``; repeated indices accumulate in backward."""
    a = _lift(a)
    index = np.asarray(index, dtype=np.int64)
    out = _result(a.data[index], (a,), "gather_rows")
    n = a.shape[0]

    def _bw(g):
        _accum(a, _kernels.scatter_add_rows(g, index, n))

    out._backward = _bw
    return out


def segment_sum(a, offsets):
    """Sum consecutive row blocks delimited by CSR ``offsets``."""
    a = _lift(a)
    offsets = np.asarray(offsets, dtype=np.int64)
    if offsets[-1] != a.shape[0]:
        raise ShapeMismatchError(f"segment_sum: offsets end at {offsets[-1]}, tensor has {a.shape[0]} rows")
    out = _result(_kernels.segment_sum(a.data, offsets), (a,), "segment_sum")
    counts = np.diff(offsets)

    def _bw(g):
        _accum(a, np.repeat(g, counts, axis=0))

    out._backward = _bw
    return out


def where_rows(cond, a, b):
    """Row selection by a fixed boolean ``(n, 1)`` mask (mask not differentiated)."""
    a, b = _lift(a), _lift(b)
    cond = np.asarray(cond, dtype=bool)
    _broadcast_shape(a, b, "where_rows")
    out = _result(np.where(cond, a.data, b.data), (a, b), "where_rows")

    def _bw(g):
        _accum(a, _unbroadcast(np.where(cond, g, 0.0), a.shape))
        _accum(b, _unbroadcast(np.where(cond, 0.0, g), b.shape))

    out._backward = _bw
    return out


# -- loss -------------------------------------------------------------------------------

def cross_entropy(Z, Y, mask):
    """Mean cross-entropy of probability rows ``Z`` against one-hot ``Y`` on ``mask``."""
    Z = _lift(Z)
    Y = np.asarray(Y, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.int64).reshape(-1)
    if mask.size == 0:
        raise EmptyMaskError("cross_entropy needs a non-empty mask")
    if Y.shape != Z.shape:
        raise ShapeMismatchError(f"cross_entropy: Z {Z.shape} vs Y {Y.shape}")
    m = mask.size
    Zm = Z.data[mask]
    Ym = Y[mask]
    value = -np.sum(Ym * np.log(Zm + CE_EPS)) / m
    out = _result(np.array([[value]]), (Z,), "cross_entropy")

    def _bw(g):
        grad = np.zeros_like(Z.data)
        # mask may repeat indices
        np.add.at(grad, mask, -Ym / (Zm + CE_EPS) / m)
        _accum(Z, g[0, 0] * grad)

    out._backward = _bw
    return out


# -- driver -----------------------------------------------------------------------------

def _topo_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss):
    """Populate ``.grad`` of every differentiable tensor reachable from ``loss``.

    Leaf gradients accumulate across calls; interior gradients are recomputed.
    """
    if loss.data.size != 1:
        raise NotScalarError(f"backward() needs a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = _topo_order(loss)
    for node in order:
        if node._parents:
            node.grad = None
    if loss._parents:
        loss.grad = np.ones_like(loss.data)
    else:
        _accum(loss, np.ones_like(loss.data))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# -- finite-difference checks -----------------------------------------------------------

def grad_check(f, theta, h=1e-5):
    """Max relative error between reverse-mode and central-difference gradients.

    ``f`` maps a ``(1, p)`` :class:`Tensor` to a scalar :class:`Tensor`.
    The error of each coordinate is ``|a - n| / max(1, |a|, |n|)``.
    """
    theta = _as2d(theta)
    x = Tensor(theta.copy(), requires_grad=True)
    backward(f(x))
    analytic = x.grad if x.grad is not None else np.zeros_like(theta)
    numeric = np.zeros_like(theta)
    flat = theta.reshape(-1)
    for k in range(flat.size):
        plus, minus = flat.copy(), flat.copy()
        plus[k] += h
        minus[k] -= h
        fp = f(Tensor(plus.reshape(theta.shape))).item()
        fm = f(Tensor(minus.reshape(theta.shape))).item()
        numeric.reshape(-1)[k] = (fp - fm) / (2.0 * h)
    return _max_rel_err(analytic, numeric)


def grad_check_params(loss_fn, params, h=1e-5):
    """Like :func:`grad_check` for a closure over existing leaf tensors.

    ``loss_fn()`` rebuilds the graph from ``params`` each call. Entries are
    perturbed in place and restored. Returns ``(max_rel_err, per_param)``.
    """
    for p in params:
        p.grad = None
    backward(loss_fn())
    per_param = []
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            fp = loss_fn().item()
            flat[k] = orig - h
            fm = loss_fn().item()
            flat[k] = orig
            numeric.reshape(-1)[k] = (fp - fm) / (2.0 * h)
        per_param.append(_max_rel_err(analytic, numeric))
    return (max(per_param) if per_param else 0.0), per_param


def _max_rel_err(analytic, numeric):
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0
