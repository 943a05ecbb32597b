"""Pointwise and filtering kernels shared by the transforms, energies and FWT.

Every kernel has a numba ``@njit`` body and a pure-numpy twin with identical
semantics.  The numba path is used when numba imports cleanly and the
environment variable ``SCATDEN_DISABLE_NUMBA`` is unset or ``0``.  Call
:func:`use_numba` to switch at runtime (the benchmark does this).
"""
import os

import numpy as np


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    njit = _noop_jit
    HAVE_NUMBA = False

_ENV_FLAG = "SCATDEN_DISABLE_NUMBA"
_USE_NUMBA = HAVE_NUMBA and os.environ.get(_ENV_FLAG, "0") in ("", "0")


def use_numba(flag=None):
    """Return whether numba kernels are active; optionally set it first."""
    global _USE_NUMBA
    if flag is not None:
        _USE_NUMBA = bool(flag) and HAVE_NUMBA
    return _USE_NUMBA


# ---------------------------------------------------------------------------
# smoothed modulus  m(z) = sqrt(|z|^2 + eps^2) - eps,  dm = z / sqrt(|z|^2+eps^2)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _smooth_modulus_nb(z, eps, want_grad):
    n = z.size
    m = np.empty(n, dtype=np.float64)
    g = np.empty(n if want_grad else 0, dtype=np.complex128)
    e2 = eps * eps
    for i in range(n):
        re = z[i].real
        im = z[i].imag
        r = np.sqrt(re * re + im * im + e2)
        m[i] = r - eps
        if want_grad:
            if r > 0.0:
                g[i] = complex(re / r, im / r)
            else:
                g[i] = 0.0
    return m, g


def _smooth_modulus_np(z, eps, want_grad):
    r = np.sqrt(z.real * z.real + z.imag * z.imag + eps * eps)
    m = r - eps
    if not want_grad:
        return m, None
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(r > 0, z / np.where(r > 0, r, 1.0), 0.0)
    return m, g.astype(np.complex128)


def smooth_modulus(z, eps=0.0, want_grad=False):
    """Pointwise ``sqrt(|z|^2 + eps^2) - eps`` and optionally ``z / sqrt(...)``.

    The second output is the (Re, Im) gradient packed as a complex number;
    at ``z = 0`` with ``eps = 0`` it is set to 0 (a valid subgradient).
    """
    z = np.asarray(z)
    shape = z.shape
    if _USE_NUMBA:
        flat = np.ascontiguousarray(z, dtype=np.complex128).reshape(-1)
        m, g = _smooth_modulus_nb(flat, float(eps), bool(want_grad))
        m = m.reshape(shape)
        g = g.reshape(shape) if want_grad else None
        return m, g
    return _smooth_modulus_np(z.astype(np.complex128, copy=False), float(eps), want_grad)


# ---------------------------------------------------------------------------
# smoothed rectifier applied separately to real and imaginary parts
# r(x) = (x + sqrt(x^2 + eps^2) - eps) / 2 ; eps = 0 gives max(x, 0)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _smooth_relu_nb(z, eps, want_grad):
    n = z.size
    out = np.empty(n, dtype=np.complex128)
    dre = np.empty(n if want_grad else 0, dtype=np.float64)
    dim = np.empty(n if want_grad else 0, dtype=np.float64)
    e2 = eps * eps
    for i in range(n):
        x = z[i].real
        y = z[i].imag
        if eps > 0.0:
            rx = np.sqrt(x * x + e2)
            ry = np.sqrt(y * y + e2)
            out[i] = complex(0.5 * (x + rx - eps), 0.5 * (y + ry - eps))
            if want_grad:
                dre[i] = 0.5 * (1.0 + x / rx)
                dim[i] = 0.5 * (1.0 + y / ry)
        else:
            out[i] = complex(max(x, 0.0), max(y, 0.0))
            if want_grad:
                dre[i] = 1.0 if x > 0.0 else 0.0
                dim[i] = 1.0 if y > 0.0 else 0.0
    return out, dre, dim


def _smooth_relu_np(z, eps, want_grad):
    x, y = z.real, z.imag
    if eps > 0:
        rx = np.sqrt(x * x + eps * eps)
        ry = np.sqrt(y * y + eps * eps)
        out = 0.5 * (x + rx - eps) + 0.5j * (y + ry - eps)
        if want_grad:
            return out, 0.5 * (1.0 + x / rx), 0.5 * (1.0 + y / ry)
        return out, None, None
    out = np.maximum(x, 0.0) + 1j * np.maximum(y, 0.0)
    if want_grad:
        return out, (x > 0).astype(np.float64), (y > 0).astype(np.float64)
    return out, None, None


def smooth_relu(z, eps=0.0, want_grad=False):
    """Rectify real and imaginary parts; returns ``(out, d_re, d_im)``."""
    z = np.asarray(z)
    shape = z.shape
    if _USE_NUMBA:
        flat = np.ascontiguousarray(z, dtype=np.complex128).reshape(-1)
        out, dre, dim = _smooth_relu_nb(flat, float(eps), bool(want_grad))
        if want_grad:
            return out.reshape(shape), dre.reshape(shape), dim.reshape(shape)
        return out.reshape(shape), None, None
    return _smooth_relu_np(z.astype(np.complex128, copy=False), float(eps), want_grad)


# ---------------------------------------------------------------------------
# soft thresholding
# ---------------------------------------------------------------------------

@njit(cache=True)
def _soft_threshold_nb(a, t):
    out = np.empty_like(a)
    for i in range(a.size):
        v = a[i]
        if v > t:
            out[i] = v - t
        elif v < -t:
            out[i] = v + t
        else:
            out[i] = 0.0
    return out


def soft_threshold(a, t):
    """``sign(a) * max(|a| - t, 0)`` elementwise; scalars in, scalar out."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    arr = np.asarray(a, dtype=np.float64)
    if _USE_NUMBA and arr.ndim > 0:
        out = _soft_threshold_nb(np.ascontiguousarray(arr).reshape(-1), float(t))
        return out.reshape(arr.shape)
    out = np.sign(arr) * np.maximum(np.abs(arr) - t, 0.0)
    return out if arr.ndim else float(out)


# ---------------------------------------------------------------------------
# periodic two-channel filter bank along the last axis
# analysis:   lo[n] = sum_k h[k] x[(2n + k) mod L],  hi likewise with g
# synthesis:  exact adjoint of the analysis map
# ---------------------------------------------------------------------------

@njit(cache=True)
def _analysis_nb(x, h, g):
    rows, n = x.shape
    half = n // 2
    taps = h.size
    lo = np.zeros((rows, half))
    hi = np.zeros((rows, half))
    for r in range(rows):
        for i in range(half):
            a = 0.0
            b = 0.0
            for k in range(taps):
                v = x[r, (2 * i + k) % n]
                a += h[k] * v
                b += g[k] * v
            lo[r, i] = a
            hi[r, i] = b
    return lo, hi


@njit(cache=True)
def _synthesis_nb(lo, hi, h, g):
    rows, half = lo.shape
    n = 2 * half
    taps = h.size
    x = np.zeros((rows, n))
    for r in range(rows):
        for i in range(half):
            a = lo[r, i]
            b = hi[r, i]
            for k in range(taps):
                x[r, (2 * i + k) % n] += h[k] * a + g[k] * b
    return x


def _index_table(n, taps):
    return (2 * np.arange(n // 2)[:, None] + np.arange(taps)[None, :]) % n


def _analysis_np(x, h, g):
    idx = _index_table(x.shape[-1], h.size)
    gathered = x[..., idx]
    return gathered @ h, gathered @ g


def _synthesis_np(lo, hi, h, g):
    n = 2 * lo.shape[-1]
    idx = _index_table(n, h.size)
    contrib = lo[..., :, None] * h + hi[..., :, None] * g
    x = np.zeros(lo.shape[:-1] + (n,))
    flat_x = x.reshape(-1, n)
    flat_c = contrib.reshape(flat_x.shape[0], -1)
    cols = idx.reshape(-1)
    for r in range(flat_x.shape[0]):
        flat_x[r] = np.bincount(cols, weights=flat_c[r], minlength=n)
    return x


def periodic_analysis(x, h, g):
    """Downsampling two-channel analysis along the last axis of a 2-D array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[-1] % 2:
        raise ValueError("length along the filtered axis must be even")
    if _USE_NUMBA:
        return _analysis_nb(x, np.asarray(h, np.float64), np.asarray(g, np.float64))
    return _analysis_np(x, np.asarray(h, np.float64), np.asarray(g, np.float64))


def periodic_synthesis(lo, hi, h, g):
    """Adjoint of :func:`periodic_analysis`."""
    lo = np.ascontiguousarray(lo, dtype=np.float64)
    hi = np.ascontiguousarray(hi, dtype=np.float64)
    if _USE_NUMBA:
        return _synthesis_nb(lo, hi, np.asarray(h, np.float64), np.asarray(g, np.float64))
    return _synthesis_np(lo, hi, np.asarray(h, np.float64), np.asarray(g, np.float64))
