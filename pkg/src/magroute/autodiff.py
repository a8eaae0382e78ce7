"""Dense double-precision tensors with reverse-mode differentiation.

A Tensor is a thin wrapper over a float64 ndarray. Primitives record
backward closures on the active Tape (set with ``with tape:``); outside a
tape everything runs as plain evaluation, which is the inference path.
Every primitive verifies its output is finite: NaN/Inf anywhere is an
error state, raised as NumericError with the op name.

The engine is deliberately small: only the shapes and broadcasts the
model needs (row-major 1-D/2-D, bias-style broadcasting), no views, no
in-place ops. Gradient correctness is backed by ``grad_check`` (central
finite differences).
"""
import numpy as np

from . import gammafn
from ._kernels import scatter_add_rows
from ._kernels import segment_sum as _kern_segment_sum
from .errors import ConfigurationError, NumericError

EPS_LN = 1e-5  # layer_norm variance stabilizer
EPS_COS = 1e-12  # cosine denominator stabilizer

_ACTIVE_TAPE = None


class Tensor:
    """Immutable value holder; ``node_id`` ties it to at most one tape."""

    __slots__ = ("data", "node_id", "tape")

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.node_id = None
        self.tape = None

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        return float(self.data)

    def __repr__(self):
        tracked = "" if self.node_id is None else f", node={self.node_id}"
        return f"Tensor(shape={self.data.shape}{tracked})"


class Tape:
    """Ordered record of primitive applications for one training step."""

    def __init__(self):
        self._records = []  # (out_node_id, backward_fn) in forward order
        self._next_id = 0
        self.grads = {}

    def __enter__(self):
        global _ACTIVE_TAPE
        if _ACTIVE_TAPE is not None:
            raise ConfigurationError("a tape is already active; tapes do not nest")
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = None
        return False

    def watch(self, tensor):
        """Register a leaf (parameter) so gradients accumulate for it."""
        tensor.tape = self
        tensor.node_id = self._new_id()
        return tensor

    def _new_id(self):
        nid = self._next_id
        self._next_id += 1
        return nid

    def clear(self):
        self._records.clear()
        self.grads.clear()


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracked(t):
    return t.node_id is not None and t.tape is _ACTIVE_TAPE


def _check_finite(arr, op):
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite value produced by op '{op}'")


def _emit(op, out_data, inputs, backward):
    """Create the output tensor and record ``backward`` if anything is tracked.

    ``backward(grad_out, acc)`` must call ``acc(inp, grad)`` for each
    differentiable input.
    """
    _check_finite(out_data, op)
    out = Tensor(out_data)
    tape = _ACTIVE_TAPE
    if tape is not None and any(_tracked(t) for t in inputs):
        out.tape = tape
        out.node_id = tape._new_id()
        tape._records.append((out.node_id, backward))
    return out


def backward(loss, tape):
    """Populate ``tape.grads`` for every tensor reachable from ``loss``.

    Returns the grads dict keyed by node_id. The record list is cleared so
    the tape can be reused for the next step (watched leaves keep their
    slots until ``clear``).
    """
    if loss.data.ndim != 0:
        raise ConfigurationError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss.tape is not tape or loss.node_id is None:
        raise ConfigurationError("loss is not recorded on this tape")
    grads = tape.grads
    grads.clear()
    grads[loss.node_id] = np.ones(())

    def acc(tensor, grad):
        if tensor.node_id is None or tensor.tape is not tape:
            return
        slot = grads.get(tensor.node_id)
        grads[tensor.node_id] = grad if slot is None else slot + grad

    for nid, bwd in reversed(tape._records):
        g = grads.get(nid)
        if g is not None:
            bwd(g, acc)
    tape._records.clear()
    return grads


# ---------------------------------------------------------------------------
# elementwise arithmetic (numpy broadcasting, gradient un-broadcast)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g, acc):
        acc(a, _unbroadcast(g, a.data.shape))
        acc(b, _unbroadcast(g, b.data.shape))

    return _emit("add", a.data + b.data, (a, b), bwd)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def bwd(g, acc):
        acc(a, _unbroadcast(g, a.data.shape))
        acc(b, -_unbroadcast(g, b.data.shape))

    return _emit("sub", a.data - b.data, (a, b), bwd)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    def bwd(g, acc):
        acc(a, _unbroadcast(g * bd, ad.shape))
        acc(b, _unbroadcast(g * ad, bd.shape))

    return _emit("mul", ad * bd, (a, b), bwd)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    def bwd(g, acc):
        acc(a, _unbroadcast(g / bd, ad.shape))
        acc(b, _unbroadcast(-g * ad / (bd * bd), bd.shape))

    return _emit("div", ad / bd, (a, b), bwd)


def neg(a):
    a = as_tensor(a)
    return _emit("neg", -a.data, (a,), lambda g, acc: acc(a, -g))


def scale(a, s):
    """Multiply by a python constant."""
    a = as_tensor(a)
    s = float(s)
    return _emit("scale", a.data * s, (a,), lambda g, acc: acc(a, g * s))


def detach(a):
    """Cut the tensor out of the differentiation graph."""
    return Tensor(as_tensor(a).data)


# ---------------------------------------------------------------------------
# linear algebra and shape ops


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ConfigurationError(
            f"matmul shape mismatch: {a.data.shape} x {b.data.shape}"
        )
    ad, bd = a.data, b.data

    def bwd(g, acc):
        acc(a, g @ bd.T)
        acc(b, ad.T @ g)

    return _emit("matmul", ad @ bd, (a, b), bwd)


def transpose(a):
    a = as_tensor(a)
    return _emit("transpose", a.data.T.copy(), (a,), lambda g, acc: acc(a, g.T))


def reshape(a, shape):
    a = as_tensor(a)
    old = a.data.shape
    return _emit(
        "reshape", a.data.reshape(shape).copy(), (a,), lambda g, acc: acc(a, g.reshape(old))
    )


def concat_cols(parts):
    parts = [as_tensor(p) for p in parts]
    widths = [p.data.shape[1] for p in parts]
    offs = np.cumsum([0] + widths)

    def bwd(g, acc):
        for p, lo, hi in zip(parts, offs[:-1], offs[1:]):
            acc(p, g[:, lo:hi])

    return _emit("concat_cols", np.concatenate([p.data for p in parts], axis=1), parts, bwd)


def slice_cols(a, start, stop):
    a = as_tensor(a)
    shape = a.data.shape

    def bwd(g, acc):
        full = np.zeros(shape)
        full[:, start:stop] = g
        acc(a, full)

    return _emit("slice_cols", a.data[:, start:stop].copy(), (a,), bwd)


def gather_rows(a, idx):
    """Select rows ``a[idx]``; backward scatter-adds into the source rows."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    n, flat = a.data.shape[0], a.data.ndim == 1
    src = a.data.reshape(n, -1)

    def bwd(g, acc):
        out = np.zeros_like(src)
        scatter_add_rows(out, idx, np.ascontiguousarray(g.reshape(len(idx), -1)))
        acc(a, out.reshape(a.data.shape))

    out_data = src[idx]
    if flat:
        out_data = out_data.reshape(-1)
    return _emit("gather_rows", out_data.copy(), (a,), bwd)


def take_rows_cols(a, rows, cols):
    """Pick entries a[rows[k], cols[k]] into a 1-D tensor."""
    a = as_tensor(a)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    shape = a.data.shape

    def bwd(g, acc):
        full = np.zeros(shape)
        np.add.at(full, (rows, cols), g)
        acc(a, full)

    return _emit("take_rows_cols", a.data[rows, cols].copy(), (a,), bwd)


def segment_sum(values, seg, n_segments):
    """Sum rows of ``values`` into buckets given by non-decreasing ``seg``."""
    v = as_tensor(values)
    seg = np.ascontiguousarray(seg, dtype=np.int64)
    if seg.size and (np.any(seg[1:] < seg[:-1]) or seg[0] < 0 or seg[-1] >= n_segments):
        raise ConfigurationError("segment ids must be sorted and within range")
    vd = np.ascontiguousarray(v.data.reshape(v.data.shape[0], -1) if v.data.ndim == 1 else v.data)
    flat = v.data.ndim == 1

    def bwd(g, acc):
        g2 = g.reshape(n_segments, -1)[seg]
        acc(v, g2.reshape(v.data.shape))

    out = _kern_segment_sum(vd, seg, int(n_segments))
    if flat:
        out = out.reshape(-1)
    return _emit("segment_sum", out, (v,), bwd)


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    shape = a.data.shape

    def bwd(g, acc):
        if axis is None:
            acc(a, np.broadcast_to(g, shape).copy())
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            acc(a, np.broadcast_to(gg, shape).copy())

    return _emit("sum", a.data.sum(axis=axis, keepdims=keepdims), (a,), bwd)


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return scale(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


# ---------------------------------------------------------------------------
# pointwise nonlinearities


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return _emit("exp", out, (a,), lambda g, acc: acc(a, g * out))


def log(a):
    a = as_tensor(a)
    _domain_check(a.data, "log")
    return _emit("log", np.log(a.data), (a,), lambda g, acc: acc(a, g / a.data))


def sqrt(a):
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return _emit("sqrt", out, (a,), lambda g, acc: acc(a, g * 0.5 / out))


def sigmoid(a):
    a = as_tensor(a)
    out = np.empty_like(a.data)
    pos = a.data >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
    ez = np.exp(a.data[~pos])
    out[~pos] = ez / (1.0 + ez)
    return _emit("sigmoid", out, (a,), lambda g, acc: acc(a, g * out * (1.0 - out)))


def softplus(a):
    a = as_tensor(a)
    out = np.logaddexp(0.0, a.data)

    def bwd(g, acc):
        s = np.empty_like(a.data)
        pos = a.data >= 0
        s[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
        ez = np.exp(a.data[~pos])
        s[~pos] = ez / (1.0 + ez)
        acc(a, g * s)

    return _emit("softplus", out, (a,), bwd)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0
    return _emit("relu", a.data * mask, (a,), lambda g, acc: acc(a, g * mask))


def lgamma(a):
    a = as_tensor(a)
    _domain_check(a.data, "lgamma")
    out = gammafn.lgamma(a.data)
    return _emit("lgamma", out, (a,), lambda g, acc: acc(a, g * gammafn.digamma(a.data)))


def digamma(a):
    a = as_tensor(a)
    _domain_check(a.data, "digamma")
    out = gammafn.digamma(a.data)
    return _emit("digamma", out, (a,), lambda g, acc: acc(a, g * gammafn.trigamma(a.data)))


def clip(a, lo, hi):
    """Clamp values; gradient passes only where no clamping happened."""
    a = as_tensor(a)
    mask = (a.data >= lo) & (a.data <= hi)
    return _emit("clip", np.clip(a.data, lo, hi), (a,), lambda g, acc: acc(a, g * mask))


def rsqrt_or_zero(a):
    """x ** -0.5 where x > 0, exactly 0 elsewhere (zero-degree convention)."""
    a = as_tensor(a)
    pos = a.data > 0
    out = np.zeros_like(a.data)
    out[pos] = a.data[pos] ** -0.5

    def bwd(g, acc):
        grad = np.zeros_like(a.data)
        grad[pos] = -0.5 * a.data[pos] ** -1.5
        acc(a, g * grad)

    return _emit("rsqrt_or_zero", out, (a,), bwd)


def _domain_check(arr, op):
    bad = arr <= 0.0
    if bad.any():
        idx = np.argwhere(bad)[0]
        raise NumericError(f"op '{op}' requires positive input; offending index {tuple(idx)}")


_POINTWISE = {
    "sigmoid": sigmoid,
    "softplus": softplus,
    "log": log,
    "exp": exp,
    "lgamma": lgamma,
    "digamma": digamma,
}


def pointwise(a, kind):
    try:
        fn = _POINTWISE[kind]
    except KeyError:
        raise ConfigurationError(f"unknown pointwise kind {kind!r}") from None
    return fn(a)


# ---------------------------------------------------------------------------
# row-structured ops


def row_softmax(x):
    """Numerically stabilized softmax over the last axis of a 2-D tensor."""
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)

    def bwd(g, acc):
        dot = (g * out).sum(axis=1, keepdims=True)
        acc(x, out * (g - dot))

    return _emit("row_softmax", out, (x,), bwd)


def layer_norm(x, eps=EPS_LN):
    """Zero-mean unit-variance normalization over the last axis, no affine."""
    x = as_tensor(x)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    out = xc * inv

    def bwd(g, acc):
        d = x.data.shape[-1]
        gm = g.mean(axis=-1, keepdims=True)
        gy = (g * out).mean(axis=-1, keepdims=True)
        acc(x, inv * (g - gm - out * gy))

    return _emit("layer_norm", out, (x,), bwd)


def row_cosine(u, v, eps=EPS_COS):
    """Cosine similarity of matching rows: (m, d) x (m, d) -> (m,)."""
    u, v = as_tensor(u), as_tensor(v)
    ud, vd = u.data, v.data
    dot = (ud * vd).sum(axis=-1)
    nu = np.sqrt((ud * ud).sum(axis=-1))
    nv = np.sqrt((vd * vd).sum(axis=-1))
    denom = nu * nv + eps
    out = dot / denom

    def bwd(g, acc):
        # derivative of dot / (|u||v| + eps); guard the unit-vector division
        safe_u = np.maximum(nu, 1e-300)[..., None]
        safe_v = np.maximum(nv, 1e-300)[..., None]
        gd = (g / denom)[..., None]
        co = (g * out / denom)[..., None]
        acc(u, gd * vd - co * nv[..., None] * ud / safe_u)
        acc(v, gd * ud - co * nu[..., None] * vd / safe_v)

    return _emit("row_cosine", out, (u, v), bwd)


def cosine(u, v, eps=EPS_COS):
    """Cosine of two 1-D tensors as a scalar tensor."""
    u, v = as_tensor(u), as_tensor(v)
    return reshape(row_cosine(reshape(u, (1, -1)), reshape(v, (1, -1)), eps=eps), ())


# ---------------------------------------------------------------------------
# parameters


class ParamStore:
    """Named parameter tensors plus Adam moment slots."""

    def __init__(self):
        self._params = {}
        self.m = {}
        self.v = {}
        self.step_count = 0

    def register(self, name, array):
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(array, dtype=np.float64))
        self._params[name] = t
        self.m[name] = np.zeros_like(t.data)
        self.v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def n_params(self):
        return sum(t.data.size for t in self._params.values())

    def watch_all(self, tape):
        for t in self._params.values():
            tape.watch(t)

    def grads(self, tape):
        """Per-parameter gradients after backward; zeros for unreached ones."""
        out = {}
        for name, t in self._params.items():
            g = tape.grads.get(t.node_id)
            out[name] = np.zeros_like(t.data) if g is None else np.asarray(g)
        return out

    def state_dict(self):
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_state_dict(self, state):
        for name, arr in state.items():
            t = self._params[name]
            if t.data.shape != arr.shape:
                raise ConfigurationError(
                    f"shape mismatch loading {name!r}: {arr.shape} vs {t.data.shape}"
                )
            t.data = np.array(arr, dtype=np.float64)


# ---------------------------------------------------------------------------
# finite-difference verification


class GradCheckReport:
    def __init__(self):
        self.per_param = {}  # name -> max relative error
        self.failures = []

    @property
    def max_rel_err(self):
        return max(self.per_param.values()) if self.per_param else 0.0

    def passed(self, tol):
        return self.max_rel_err <= tol

    def __repr__(self):
        worst = sorted(self.per_param.items(), key=lambda kv: -kv[1])[:5]
        lines = [f"grad_check max_rel_err={self.max_rel_err:.3e}"]
        lines += [f"  {n}: {e:.3e}" for n, e in worst]
        return "\n".join(lines)


def grad_check(f, store, h=1e-5, tol=1e-4, atol=1e-7):
    """Compare tape gradients of ``f()`` against central finite differences.

    ``f`` must be deterministic and must build its graph on the active
    tape (it is also called without a tape for the FD probes). Relative
    error per entry is |a - fd| / max(|a|, |fd|, atol); a parameter the
    function ignores yields zeros on both sides and passes.
    """
    tape = Tape()
    with tape:
        store.watch_all(tape)
        loss = f()
    backward(loss, tape)
    analytic = store.grads(tape)

    report = GradCheckReport()
    for name, t in store.items():
        flat = t.data.ravel()
        a_flat = analytic[name].ravel()
        worst = 0.0
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            lp = float(f().data)
            flat[k] = orig - h
            lm = float(f().data)
            flat[k] = orig
            fd = (lp - lm) / (2.0 * h)
            err = abs(a_flat[k] - fd) / max(abs(a_flat[k]), abs(fd), atol)
            if err > worst:
                worst = err
            if err > tol:
                report.failures.append((name, k, a_flat[k], fd, err))
        report.per_param[name] = worst
    return report
