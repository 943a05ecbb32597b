"""Non-subsampled dyadic wavelet and second-order scattering transforms.

DFT convention: ``fft2`` unnormalized forward, ``ifft2`` with 1/d inverse, so
``conv(h, filt) = ifft2(fft2(h) * filt)`` and Parseval reads
``mean(|h * psi|^2) = sum(|fft2(h) psi|^2) / d^2``.  The L1 norm of a field
is ``mean(|field|)``.
"""
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from ._kernels import smooth_modulus, smooth_relu

RHO_MODULUS = "modulus"
RHO_RECTIFIER = "rectifier"
_RHOS = (RHO_MODULUS, RHO_RECTIFIER)


def fft_workers():
    return int(os.environ.get("SCATDEN_FFT_WORKERS", "1"))


def fft2(x):
    return sfft.fft2(x, axes=(-2, -1), workers=fft_workers())


def ifft2(x):
    return sfft.ifft2(x, axes=(-2, -1), workers=fft_workers())


def l1(field):
    """Mean-of-abs norm (approximates the continuous integral on [0,1]^2)."""
    return float(np.mean(np.abs(field)))


def _check_image(image, bank):
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2 or x.shape != (bank.N, bank.N):
        raise ValueError(f"image shape {x.shape} does not match bank size {bank.N}")
    if not np.all(np.isfinite(x)):
        raise ValueError("image has non-finite values")
    return x


@dataclass
class WaveletCoeffs:
    low: np.ndarray
    detail: dict  # (j, k) -> complex field


@dataclass
class ScatteringCoeffs:
    first: dict  # (j, k) -> complex field
    second: dict  # (j, k, j2, k2) -> complex field, only j2 > j
    rho: str = RHO_MODULUS
    eps: float = 0.0


@dataclass
class NormTable:
    first_l1: dict = field(default_factory=dict)
    second_l1: dict = field(default_factory=dict)


def dwt_forward(image, bank, keys=None):
    x = _check_image(image, bank)
    keys = bank.keys if keys is None else list(keys)
    X = fft2(x)
    detail = dict(zip(keys, ifft2(X[None] * bank.stack(keys))))
    low = ifft2(X * bank.lowpass.values)
    return WaveletCoeffs(low, detail)


def apply_rho(z, rho=RHO_MODULUS, eps=0.0):
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if rho == RHO_MODULUS:
        return smooth_modulus(z, eps)[0]
    if rho == RHO_RECTIFIER:
        return smooth_relu(z, eps)[0]
    raise ValueError(f"unknown nonlinearity {rho!r}; expected one of {_RHOS}")


def second_order_keys(bank, j, jprime_max=None):
    top = bank.j_max if jprime_max is None else min(jprime_max, bank.j_max)
    return [(j2, k2) for j2 in range(j + 1, top + 1) for k2 in range(4)]


def scattering_forward(image, bank, rho=RHO_MODULUS, eps=0.0, jprime_max=None,
                       first_scales=None):
    """First-order fields and ``rho(first) * psi_{j2,k2}`` for every ``j2 > j``.

    ``first_scales`` restricts the first convolution (default: all bank
    scales); ``jprime_max`` caps the second one (default: the bank's top).
    """
    scales = bank.scales if first_scales is None else list(first_scales)
    keys = [(j, k) for j in scales for k in range(4)]
    first = dwt_forward(image, bank, keys).detail
    second = {}
    for (j, k) in keys:
        keys2 = second_order_keys(bank, j, jprime_max)
        if not keys2:
            continue
        U = fft2(apply_rho(first[(j, k)], rho, eps))
        for key2, fld in zip(keys2, ifft2(U[None] * bank.stack(keys2))):
            second[(j, k) + key2] = fld
    return ScatteringCoeffs(first, second, rho, eps)


def norms(coeffs):
    return NormTable({key: l1(v) for key, v in coeffs.first.items()},
                     {key: l1(v) for key, v in coeffs.second.items()})


def perp(k):
    return (k + 2) % 4


def decay_profile(image, bank, rho=RHO_MODULUS, eps=0.0, per_orientation=False):
    """Diagonal profile ``sum_k || |f * psi_j^k| * psi_j^{k+2} ||_1`` for every scale.

    Returns a list of ``(j, value)``; with ``per_orientation`` the value is
    the length-4 array of the individual terms instead of their sum.
    """
    if len(bank.scales) < 5:
        raise ValueError("decay profile needs a bank spanning at least 5 scales")
    x = _check_image(image, bank)
    X = fft2(x)
    out = []
    for j in bank.scales:
        first = ifft2(X[None] * bank.stack([(j, k) for k in range(4)]))
        U = fft2(apply_rho(first, rho, eps))
        second = ifft2(U * bank.stack([(j, perp(k)) for k in range(4)]))
        vals = np.mean(np.abs(second), axis=(-2, -1))
        out.append((j, vals if per_orientation else float(vals.sum())))
    return out


def is_degenerate(profile, rtol=1e-12, scale=1.0):
    """True when every profile entry is negligible (e.g. a flat image)."""
    vals = np.array([np.sum(v) for _, v in profile])
    return bool(np.all(vals <= rtol * max(scale, 1e-300)))


# ---------------------------------------------------------------------------
# debug dump: one flat complex128 binary plus a JSON manifest of offsets
# ---------------------------------------------------------------------------

def dump_coeffs(coeffs, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    blobs = []
    offset = 0
    for group in ("first", "second"):
        for key, fld in getattr(coeffs, group).items():
            arr = np.ascontiguousarray(fld, dtype=np.complex128)
            entries.append({"group": group, "key": list(key), "shape": list(arr.shape),
                            "offset": offset})
            offset += arr.size
            blobs.append(arr.ravel())
    data = np.concatenate(blobs) if blobs else np.zeros(0, np.complex128)
    data.tofile(directory / "coeffs.bin")
    manifest = {"dtype": "complex128", "byte_order": "little" if np.little_endian else "big",
                "rho": coeffs.rho, "eps": coeffs.eps, "entries": entries}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return directory


def load_coeffs(directory):
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    data = np.fromfile(directory / "coeffs.bin", dtype=np.complex128)
    out = {"first": {}, "second": {}}
    for e in manifest["entries"]:
        n = int(np.prod(e["shape"]))
        out[e["group"]][tuple(e["key"])] = data[e["offset"]:e["offset"] + n].reshape(e["shape"])
    return ScatteringCoeffs(out["first"], out["second"], manifest["rho"], manifest["eps"])
