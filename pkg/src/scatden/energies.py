"""Wavelet L1 and mixed min/max scattering energies with exact gradients.

With ``w_jk = h * psi_jk`` and ``u_jk = rho(w_jk)`` the scattering energy is

    lam   * sum_{j,k} 2^-j  |w_jk|_1
  + gamma * sum_{j,k} sum_{j2>j} 2^-j2 |u_jk * psi_{j2,k+2}|_1
  - eta0  * sum_{j,k} sum_{j2>j} 2^-j  |u_jk * psi_{j2,k}|_1
  - eta1  * sum_{j,k} sum_{j2>j} 2^-j  (|u_jk * psi_{j2,k+1}|_1 + |u_jk * psi_{j2,k-1}|_1)

where ``|.|_1`` is the mean-of-abs norm and the second-order terms with
``j = j_m`` are multiplied by ``fine_scale_factor``.  Every modulus,
including the one inside ``rho``, is smoothed as ``sqrt(|z|^2+eps^2)-eps``.
"""
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ._kernels import smooth_modulus, smooth_relu
from .transforms import RHO_MODULUS, RHO_RECTIFIER, _check_image, fft2, ifft2

MODE_WAVELET = "wavelet"
MODE_SCATTERING = "scattering"


@dataclass(frozen=True)
class EnergyParams:
    lam: float = 1.9
    gamma: float = 1.4
    eta0: float = 0.52
    eta1: float = 0.10
    epsilon: float = 0.0
    j_m: int = None
    j_M: int = None
    jprime_max: int = None
    fine_scale_factor: float = 0.55
    mode: str = MODE_SCATTERING
    rho: str = RHO_MODULUS

    def __post_init__(self):
        for name in ("lam", "gamma", "eta0", "eta1", "epsilon", "fine_scale_factor"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.mode not in (MODE_WAVELET, MODE_SCATTERING):
            raise ValueError(f"unknown energy mode {self.mode!r}")
        if self.rho not in (RHO_MODULUS, RHO_RECTIFIER):
            raise ValueError(f"unknown nonlinearity {self.rho!r}")

    @classmethod
    def wavelet_only(cls, **kw):
        kw.setdefault("lam", 1.2)
        return cls(mode=MODE_WAVELET, **kw)

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown energy keys: {sorted(unknown)}")
        if d.get("mode") == MODE_WAVELET and "lam" not in d:
            d["lam"] = 1.2
        return cls(**d)

    def resolve(self, bank):
        """Fill unset scale bounds from ``bank`` and check they fit in it."""
        j_m = bank.j_min if self.j_m is None else self.j_m
        j_M = bank.j_max if self.j_M is None else self.j_M
        jp = bank.j_max if self.jprime_max is None else self.jprime_max
        if not (bank.j_min <= j_m <= j_M <= bank.j_max):
            raise ValueError(f"first-order range [{j_m}, {j_M}] outside bank "
                             f"[{bank.j_min}, {bank.j_max}]")
        if jp > bank.j_max:
            raise ValueError(f"jprime_max={jp} beyond bank top {bank.j_max}")
        return replace(self, j_m=j_m, j_M=j_M, jprime_max=jp)


def _l1(z, eps):
    # smoothed mean-abs and its complex-packed derivative (before the 1/d)
    m, g = smooth_modulus(z, eps, want_grad=True)
    return m.mean(axis=(-2, -1)), g


class EnergyPlan:
    """Filters and weights for one (bank, params) pair, reusable across calls."""

    def __init__(self, bank, params):
        self.bank = bank
        self.params = p = params.resolve(bank)
        self.first_keys = [(j, k) for j in range(p.j_m, p.j_M + 1) for k in range(4)]
        self.first = bank.stack(self.first_keys)
        self.first_w = np.array([2.0 ** -j for j, _ in self.first_keys])
        self.second = {}
        if p.mode == MODE_SCATTERING:
            for j, k in self.first_keys:
                keys2 = [(j2, k2) for j2 in range(j + 1, p.jprime_max + 1) for k2 in range(4)]
                if not keys2:
                    continue
                fine = p.fine_scale_factor if j == p.j_m else 1.0
                # per second-order field: (gamma weight, eta weight) before sign
                cg, ce = [], []
                for j2, k2 in keys2:
                    dk = (k2 - k) % 4
                    cg.append(2.0 ** -j2 if dk == 2 else 0.0)
                    eta = p.eta0 if dk == 0 else (p.eta1 if dk in (1, 3) else 0.0)
                    ce.append(2.0 ** -j * eta)
                self.second[(j, k)] = (bank.stack(keys2), fine * np.array(cg),
                                       fine * np.array(ce), keys2)

    # -- aggregates -----------------------------------------------------------
    def terms(self, h):
        """Nonnegative aggregates ``(A, B, C0, C1)`` of the energy."""
        p = self.params
        x = _check_image(h, self.bank)
        W = ifft2(fft2(x)[None] * self.first)
        a, _ = _l1(W, p.epsilon)
        A = float(np.dot(self.first_w, a))
        B = C0 = C1 = 0.0
        for i, key in enumerate(self.first_keys):
            if key not in self.second:
                continue
            filt, cg, _, keys2 = self.second[key]
            u = self._rho(W[i])[0]
            n2, _ = _l1(ifft2(fft2(u)[None] * filt), p.epsilon)
            fine = p.fine_scale_factor if key[0] == p.j_m else 1.0
            j, k = key
            for (j2, k2), v in zip(keys2, n2):
                dk = (k2 - k) % 4
                if dk == 2:
                    B += fine * 2.0 ** -j2 * v
                elif dk == 0:
                    C0 += fine * 2.0 ** -j * v
                else:
                    C1 += fine * 2.0 ** -j * v
        return A, B, C0, C1

    def _rho(self, z, want_grad=False):
        p = self.params
        if p.rho == RHO_MODULUS:
            m, g = smooth_modulus(z, p.epsilon, want_grad)
            return m, g
        out, dre, dim = smooth_relu(z, p.epsilon, want_grad)
        return out, (dre, dim)

    def value(self, h):
        p = self.params
        A, B, C0, C1 = self.terms(h)
        if p.mode == MODE_WAVELET:
            return p.lam * A
        return p.lam * A + p.gamma * B - p.eta0 * C0 - p.eta1 * C1

    def value_and_grad(self, h):
        p = self.params
        if p.epsilon <= 0 and p.mode == MODE_SCATTERING:
            raise ValueError("scattering energy gradient needs epsilon > 0")
        x = _check_image(h, self.bank)
        d = x.size
        W = ifft2(fft2(x)[None] * self.first)
        a, gW = _l1(W, p.epsilon)
        value = p.lam * float(np.dot(self.first_w, a))
        # complex-packed dE/dW for every first-order field
        dW = (p.lam * self.first_w / d)[:, None, None] * gW
        for i, key in enumerate(self.first_keys):
            if key not in self.second:
                continue
            filt, cg, ce, _ = self.second[key]
            coef = cg * p.gamma - ce
            if not np.any(coef):
                continue
            u, du = self._rho(W[i], want_grad=True)
            Z = ifft2(fft2(u)[None] * filt)
            n2, gZ = _l1(Z, p.epsilon)
            value += float(np.dot(coef, n2))
            back = fft2((coef / d)[:, None, None] * gZ)
            v = ifft2(np.einsum("kab,kab->ab", np.conj(filt), back))
            if p.rho == RHO_MODULUS:
                dW[i] += v.real * du
            else:
                dre, dim = du
                dW[i] += v.real * dre + 1j * v.imag * dim
        G = np.einsum("kab,kab->ab", np.conj(self.first), fft2(dW))
        return value, ifft2(G).real

    def gradient(self, h):
        return self.value_and_grad(h)[1]


def wavelet_l1_energy(h, bank, params=None):
    params = EnergyParams.wavelet_only() if params is None else params
    if params.mode != MODE_WAVELET:
        raise ValueError("wavelet_l1_energy expects wavelet-only parameters")
    return EnergyPlan(bank, params).value(h)


def scattering_energy(h, bank, params=None):
    params = EnergyParams() if params is None else params
    if params.mode != MODE_SCATTERING:
        raise ValueError("scattering_energy expects scattering parameters")
    return EnergyPlan(bank, params).value(h)


def energy_terms(h, bank, params):
    return EnergyPlan(bank, params).terms(h)


def energy_gradient(h, bank, params):
    return EnergyPlan(bank, params).gradient(h)
