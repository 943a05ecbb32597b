"""Directional complex wavelet bank built in the frequency domain.

The mother wavelet is a Morlet wavelet with two vanishing moments multiplied
by an angular mask supported in the cone ``|phi| < pi/4``.  Rotated copies
(four orientations, steps of pi/4) and dyadic dilations are sampled on the
DFT grid of an ``N x N`` periodic image on ``[0, 1]^2``.

Conventions
-----------
* Array axis 1 carries the horizontal coordinate ``u1`` and frequency ``w1``;
  axis 0 carries ``u2`` / ``w2``.  Polar angle is ``atan2(w2, w1)``.
* Physical frequencies are ``w = 2 pi m`` for bin index ``m`` in
  ``(-N/2, N/2]``.
  A filter at scale ``j`` is the mother spectrum evaluated at ``2**j * w``,
  so ``j = -log2(N)`` puts the mother at the pixel scale and the dilation
  relation ``psi_j(w) = psi_{j+1}(w / 2)`` is independent of the bank range.
* Spectral filters are applied as ``ifft2(fft2(h) * filt)``; the spatial
  kernel of a filter is ``ifft2(filt)`` and its discrete L1 norm is
  ``sum(|kernel|)``, which equals the mean-of-abs norm of the sampled
  continuous wavelet.
"""
import json
from dataclasses import dataclass, field

import numpy as np

N_ORIENT = 4
LOW = "low"

# Gaussian width of the low-pass, relative to the coarsest wavelet scale.
# Chosen so that the Littlewood-Paley lower bound stays above 0.2 for the
# default bank at N=128; the binding bins are the high-frequency corners.
LOWPASS_WIDTH = 0.016
COARSEST_DEFAULT = -3


@dataclass(frozen=True)
class MotherWaveletParams:
    sigma: float = 0.7
    xi: tuple = (1.05 * np.pi, 0.0)
    moments: int = 2

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.xi[0] == 0 and self.xi[1] == 0:
            raise ValueError("xi must be nonzero")
        if self.moments != 2:
            raise ValueError("only two vanishing moments are supported")


@dataclass(frozen=True)
class FreqGrid:
    """Angular frequencies ``2 pi m`` of every DFT bin of an N x N grid."""

    N: int
    w1: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)

    @property
    def step(self):
        return 2 * np.pi


def freq_grid(N):
    if N < 2 or N % 2:
        raise ValueError(f"grid side must be even and >= 2, got {N}")
    m = np.fft.fftfreq(N, d=1.0 / N)
    # Nyquist bin taken as +N/2 so that it falls inside an orientation cone
    m[N // 2] = N // 2
    w = 2 * np.pi * m
    w2, w1 = np.meshgrid(w, w, indexing="ij")
    return FreqGrid(N, w1, w2)


def _rotate(w1, w2, k):
    # frequency argument of psi^k: r_k w, with r_k the rotation by -k pi/4
    a = -k * np.pi / 4
    c, s = np.cos(a), np.sin(a)
    return c * w1 - s * w2, s * w1 + c * w2


def mask_values(w1, w2):
    """Angular mask ``sin(pi (1 + sin(4 phi + pi/2)) / 4) 1_{|phi| < pi/4}``."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    phi = np.arctan2(w2, w1)
    inside = (np.abs(phi) < np.pi / 4) & ((w1 != 0) | (w2 != 0))
    val = np.sin(np.pi * (1 + np.sin(4 * phi + np.pi / 2)) / 4)
    return np.where(inside, val, 0.0)


def build_mask(grid, k=0, mod_pi=False):
    """Mask on every bin of ``grid``, rotated to orientation ``k``.

    With ``mod_pi`` the angle is folded into ``[-pi/2, pi/2)`` first, which
    makes the four rotations a partition of unity on the whole circle.
    """
    w1, w2 = _rotate(grid.w1, grid.w2, k)
    if mod_pi:
        flip = w1 < 0
        w1 = np.where(flip, -w1, w1)
        w2 = np.where(flip, -w2, w2)
    return mask_values(w1, w2)


def _alias_offsets(N):
    p = 2 * np.pi * N * np.arange(-1, 2)
    return [(a, b) for a in p for b in p]


def _morlet_terms(w1, w2, N, params, j, k, periodize=True):
    """The four Gaussian pieces of the two-moment Morlet spectrum.

    ``psi = T0 - kappa T1 - kt1 T2 - kt2 T3`` with
    ``T0 = G(v - xi)``, ``T1 = G(v)``, ``T2,3 = sigma^2 v_{1,2} G(v)`` and
    ``v = 2**j r_k w``, each summed over the 3 x 3 nearest spectral aliases.
    """
    s2 = params.sigma ** 2
    xi1, xi2 = params.xi
    scale = 2.0 ** j
    offsets = _alias_offsets(N) if periodize else [(0.0, 0.0)]
    T = np.zeros((4,) + np.shape(w1))
    for a1, a2 in offsets:
        v1, v2 = _rotate(w1 + a1, w2 + a2, k)
        v1 = v1 * scale
        v2 = v2 * scale
        g = np.exp(-0.5 * s2 * (v1 * v1 + v2 * v2))
        T[0] += np.exp(-0.5 * s2 * ((v1 - xi1) ** 2 + (v2 - xi2) ** 2))
        T[1] += g
        T[2] += s2 * v1 * g
        T[3] += s2 * v2 * g
    return T


def _solve_corrections(T):
    # rows: value at DC, central difference along w1 (axis 1), along w2 (axis 0)
    def ops(a):
        return np.array([a[0, 0], a[0, 1] - a[0, -1], a[1, 0] - a[-1, 0]])

    A = np.stack([ops(T[1]), ops(T[2]), ops(T[3])], axis=1)
    b = ops(T[0])
    scale = np.abs(A).max()
    if scale == 0 or np.linalg.cond(A) > 1e12:
        raise ValueError("degenerate grid: moment corrections are not solvable")
    return np.linalg.solve(A, b)


def build_morlet_hat(grid, params=MotherWaveletParams(), j=0, k=0):
    """Two-moment Morlet spectrum at scale ``j`` / orientation ``k``.

    Returns ``(values, corrections)``.  The corrections ``(kappa, kt1, kt2)``
    are solved on the grid so that the value at DC and both central finite
    differences at DC vanish exactly.  The output is real-valued (the Morlet
    spectrum is real) but typed complex for uniform downstream use.
    """
    if grid.N < 8:
        raise ValueError("grid too small for the moment corrections (N < 8)")
    T = _morlet_terms(grid.w1, grid.w2, grid.N, params, j, k)
    c = _solve_corrections(T)
    vals = T[0] - c[0] * T[1] - c[1] * T[2] - c[2] * T[3]
    return vals.astype(np.complex128), c


@dataclass
class SpectralFilter:
    values: np.ndarray = field(repr=False)
    j: int
    k: object  # orientation index or LOW
    corrections: tuple = ()
    norm_factor: float = 1.0


@dataclass
class WaveletBank:
    N: int
    j_min: int
    j_max: int
    mother: MotherWaveletParams
    filters: dict = field(repr=False)  # (j, k) -> SpectralFilter
    lowpass: SpectralFilter = field(repr=False)
    lowpass_width: float = LOWPASS_WIDTH

    @property
    def scales(self):
        return list(range(self.j_min, self.j_max + 1))

    @property
    def keys(self):
        return [(j, k) for j in self.scales for k in range(N_ORIENT)]

    def __len__(self):
        return len(self.filters) + 1

    def __getitem__(self, key):
        return self.filters[key].values

    def stack(self, keys=None):
        """Filters for ``keys`` (default: all, in scale-major order) as one array."""
        keys = self.keys if keys is None else keys
        return np.stack([self.filters[key].values for key in keys])

    def evaluate(self, j, k, w1, w2):
        """Continuous (non-periodized) filter spectrum at arbitrary frequencies."""
        f = self.filters[(j, k)]
        T = _morlet_terms(np.asarray(w1, float), np.asarray(w2, float), self.N,
                          self.mother, j, k, periodize=False)
        c = f.corrections
        morlet = T[0] - c[0] * T[1] - c[1] * T[2] - c[2] * T[3]
        r1, r2 = _rotate(np.asarray(w1, float), np.asarray(w2, float), k)
        return f.norm_factor * morlet * mask_values(r1, r2)

    def kernel(self, j, k=None):
        vals = self.lowpass.values if k in (None, LOW) else self.filters[(j, k)].values
        return np.fft.ifft2(vals)

    # -- serialization -----------------------------------------------------
    def save(self, path):
        """Write a ``.npz`` container: raw filters plus a JSON header."""
        header = {
            "N": self.N, "j_min": self.j_min, "j_max": self.j_max,
            "mother": {"sigma": self.mother.sigma, "xi": list(self.mother.xi),
                       "moments": self.mother.moments},
            "lowpass_width": self.lowpass_width,
            "keys": [list(key) for key in self.keys],
            "corrections": [list(map(float, self.filters[key].corrections)) for key in self.keys],
            "norm_factors": [self.filters[key].norm_factor for key in self.keys],
        }
        np.savez(path, header=json.dumps(header), filters=self.stack(),
                 lowpass=self.lowpass.values)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            header = json.loads(str(data["header"]))
            stack = data["filters"]
            low = data["lowpass"]
        m = header["mother"]
        mother = MotherWaveletParams(m["sigma"], tuple(m["xi"]), m["moments"])
        filters = {}
        for i, (j, k) in enumerate(header["keys"]):
            filters[(j, k)] = SpectralFilter(stack[i], j, k, tuple(header["corrections"][i]),
                                             header["norm_factors"][i])
        lowpass = SpectralFilter(low, header["j_max"], LOW)
        return cls(header["N"], header["j_min"], header["j_max"], mother, filters,
                   lowpass, header["lowpass_width"])


def default_scale_range(N):
    """Finest scale is the pixel; coarsest is an eighth of the image side.

    Filters wider than a quarter of the image wrap onto themselves and lose
    their shape, so they are left out of the default range.
    """
    j_min = -int(np.floor(np.log2(N)))
    return j_min, max(j_min, COARSEST_DEFAULT)


def lowpass_hat(grid, j, width=LOWPASS_WIDTH):
    v2 = (2.0 ** j) ** 2 * (grid.w1 ** 2 + grid.w2 ** 2)
    return np.exp(-0.5 * width ** 2 * v2).astype(np.complex128)


def build_bank(N, j_min=None, j_max=None, params=MotherWaveletParams(),
               lowpass_width=LOWPASS_WIDTH):
    """Masked Morlet filters for ``j_min <= j <= j_max`` and 4 orientations.

    Every directional filter is rescaled to unit discrete L1 norm.
    """
    d_min, d_max = default_scale_range(N)
    j_min = d_min if j_min is None else j_min
    j_max = d_max if j_max is None else j_max
    if not (j_min <= j_max <= 0):
        raise ValueError(f"need j_min <= j_max <= 0, got {j_min}, {j_max}")
    if 2.0 ** (-j_min) > N:
        raise ValueError(f"scale 2^{j_min} is finer than the {N}-point grid")
    grid = freq_grid(N)
    filters = {}
    for j in range(j_min, j_max + 1):
        for k in range(N_ORIENT):
            morlet, corr = build_morlet_hat(grid, params, j, k)
            vals = morlet * build_mask(grid, k)
            l1 = np.abs(np.fft.ifft2(vals)).sum()
            filters[(j, k)] = SpectralFilter(vals / l1, j, k, tuple(corr), 1.0 / l1)
    low = SpectralFilter(lowpass_hat(grid, j_max, lowpass_width), j_max, LOW)
    return WaveletBank(N, j_min, j_max, params, filters, low, lowpass_width)


# ---------------------------------------------------------------------------
# analytic checks
# ---------------------------------------------------------------------------

def littlewood_paley_symbol(bank, include_low=True):
    """``|phi|^2 + 1/2 sum |psi(w)|^2 + |psi(-w)|^2`` on every bin.

    The symmetrization is the frame symbol seen by real-valued images, for
    which ``|f^(w)| = |f^(-w)|``; the masked wavelets are one-sided.
    """
    acc = np.zeros((bank.N, bank.N))
    for f in bank.filters.values():
        p = np.abs(f.values) ** 2
        acc += 0.5 * (p + _negate(p))
    if include_low:
        acc += np.abs(bank.lowpass.values) ** 2
    return acc


def _negate(a):
    # a(-w) on the DFT grid
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))


def check_littlewood_paley(bank):
    """Min and max of the Littlewood-Paley symbol over nonzero bins."""
    sym = littlewood_paley_symbol(bank)
    nz = np.ones_like(sym, dtype=bool)
    nz[0, 0] = False
    return float(sym[nz].min()), float(sym[nz].max())


def tight_frame_bank(bank):
    """Copy of ``bank`` with every filter divided by sqrt(frame symbol)."""
    sym = littlewood_paley_symbol(bank)
    sym[0, 0] = np.abs(bank.lowpass.values[0, 0]) ** 2 or 1.0
    # symbol is even in w, so dividing by sqrt(sym) makes it identically 1
    scale = 1.0 / np.sqrt(sym)
    filters = {key: SpectralFilter(f.values * scale, f.j, f.k, f.corrections, f.norm_factor)
               for key, f in bank.filters.items()}
    low = SpectralFilter(bank.lowpass.values * scale, bank.lowpass.j, LOW)
    return WaveletBank(bank.N, bank.j_min, bank.j_max, bank.mother, filters, low,
                       bank.lowpass_width)


def check_vanishing_moments(bank, n_theta=33, n_radius=64, cone_tol=1e-12):
    """Per-filter moment report.

    For each (j, k) returns the DC value of the masked filter, the central
    finite-difference gradient at DC of its smooth (Morlet) factor, and the
    largest ``|psi^|`` found along the lines ``{r_{-theta} w : w1 = 0}`` for
    ``theta`` sampled in the filter's vanishing cone.  The mask factor is
    only C^1 away from the origin, so the discrete central difference of the
    product at DC measures the O(r^2) tail rather than the derivative; the
    smooth factor carries the moment conditions.
    """
    grid = freq_grid(bank.N)
    report = {}
    r = np.linspace(-np.pi * bank.N, np.pi * bank.N, 2 * n_radius + 1)
    for (j, k), f in bank.filters.items():
        morlet, _ = build_morlet_hat(grid, bank.mother, j, k)
        morlet = morlet * f.norm_factor
        g1 = (morlet[0, 1] - morlet[0, -1]) / (2 * grid.step)
        g2 = (morlet[1, 0] - morlet[-1, 0]) / (2 * grid.step)
        worst = 0.0
        for theta in np.linspace(-np.pi / 4, np.pi / 4, n_theta):
            # line w1 = 0 in the wavelet's own frame, mapped back to grid frame
            ang = np.pi / 2 + theta + k * np.pi / 4
            w1, w2 = r * np.cos(ang), r * np.sin(ang)
            worst = max(worst, float(np.abs(bank.evaluate(j, k, w1, w2)).max()))
        report[(j, k)] = {
            "dc": float(abs(f.values[0, 0])),
            "dc_gradient": float(np.hypot(abs(g1), abs(g2))),
            "cone_max": worst,
            "ok": bool(abs(f.values[0, 0]) < 1e-12 and np.hypot(abs(g1), abs(g2)) < 1e-6
                       and worst <= cone_tol),
        }
    return report
