"""Separable 2-D orthogonal wavelet transform on the torus.

Each level filters along axis 1 (within rows) and then along axis 0 (within
columns), downsampling by two with circular wrap.  Band names give the
axis-0 filter first: ``LH`` is lowpass down the columns and highpass along
the rows, so it responds to vertical edges.
"""
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from ._kernels import periodic_analysis, periodic_synthesis

BANDS = ("LH", "HL", "HH")


@dataclass(frozen=True)
class OrthoFilterSpec:
    name: str
    lowpass: np.ndarray
    vanishing_moments: int

    @property
    def highpass(self):
        h = self.lowpass
        return ((-1.0) ** np.arange(h.size)) * h[::-1]

    def validate(self, tol=1e-10):
        """Raise ``ValueError`` unless the lowpass defines an orthonormal wavelet."""
        h = self.lowpass
        if abs(np.dot(h, h) - 1) > tol:
            raise ValueError(f"{self.name}: lowpass does not have unit norm")
        if abs(h.sum() - np.sqrt(2)) > tol:
            raise ValueError(f"{self.name}: lowpass does not sum to sqrt(2)")
        if h.size % 2:
            raise ValueError(f"{self.name}: odd filter length")
        for s in range(2, h.size, 2):
            if abs(np.dot(h[:-s], h[s:])) > tol:
                raise ValueError(f"{self.name}: lowpass not orthogonal to its even shifts")
        g = self.highpass
        k = np.arange(g.size, dtype=np.float64)
        for p in range(self.vanishing_moments):
            # moments of the highpass, scaled so the check is size-independent
            if abs(np.dot(g, (k / g.size) ** p)) > 1e-8:
                raise ValueError(f"{self.name}: fewer than {self.vanishing_moments} vanishing moments")
        return self


@lru_cache(maxsize=None)
def _registry():
    text = resources.files("scatden").joinpath("data/ortho_filters.json").read_text()
    return json.loads(text)


def available_filters():
    return sorted(_registry())


def get_filter(name="sym4"):
    table = _registry()
    if name not in table:
        raise KeyError(f"unknown orthogonal filter {name!r}; have {available_filters()}")
    entry = table[name]
    spec = OrthoFilterSpec(name, np.asarray(entry["lowpass"], dtype=np.float64),
                           int(entry["vanishing_moments"]))
    return spec.validate()


@dataclass
class Pyramid:
    """Coarsest approximation plus detail bands, finest level first."""

    approx: np.ndarray
    details: list  # [{"LH": ..., "HL": ..., "HH": ...}, ...]

    @property
    def levels(self):
        return len(self.details)

    def coefficients(self):
        """All coefficients as one flat vector (approximation first)."""
        parts = [self.approx.ravel()]
        for lev in reversed(self.details):
            parts.extend(lev[b].ravel() for b in BANDS)
        return np.concatenate(parts)

    def map_details(self, fn):
        return Pyramid(self.approx.copy(),
                       [{b: fn(lev[b]) for b in BANDS} for lev in self.details])


def _resolve(spec):
    return get_filter(spec) if isinstance(spec, str) else spec


def _split(x, h, g, axis):
    if axis == 1:
        return periodic_analysis(x, h, g)
    lo, hi = periodic_analysis(x.T, h, g)
    return lo.T, hi.T


def _merge(lo, hi, h, g, axis):
    if axis == 1:
        return periodic_synthesis(lo, hi, h, g)
    return periodic_synthesis(lo.T, hi.T, h, g).T


def fwt_forward(image, spec="sym4", levels=1):
    spec = _resolve(spec)
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("expected a square 2-D image")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if x.shape[0] % (2 ** levels):
        raise ValueError(f"side {x.shape[0]} is not divisible by 2**{levels}")
    h, g = spec.lowpass, spec.highpass
    details = []
    for _ in range(levels):
        lo, hi = _split(x, h, g, axis=1)
        ll, hl = _split(lo, h, g, axis=0)
        lh, hh = _split(hi, h, g, axis=0)
        details.append({"LH": lh, "HL": hl, "HH": hh})
        x = ll
    return Pyramid(x, details)


def fwt_inverse(pyramid, spec="sym4"):
    spec = _resolve(spec)
    h, g = spec.lowpass, spec.highpass
    x = np.asarray(pyramid.approx, dtype=np.float64)
    for lev in reversed(pyramid.details):
        shapes = {lev[b].shape for b in BANDS}
        if shapes != {x.shape}:
            raise ValueError("inconsistent band shapes in pyramid")
        lo = _merge(x, lev["HL"], h, g, axis=0)
        hi = _merge(lev["LH"], lev["HH"], h, g, axis=0)
        x = _merge(lo, hi, h, g, axis=1)
    return x


def lowpass_reduce(image, spec="sym4", levels=2):
    """Approximation band after ``levels`` steps, rescaled to image amplitude."""
    return fwt_forward(image, spec, levels).approx / 2.0 ** levels
