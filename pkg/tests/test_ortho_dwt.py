import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from scatden.ortho_dwt import (
    BANDS,
    OrthoFilterSpec,
    Pyramid,
    available_filters,
    fwt_forward,
    fwt_inverse,
    get_filter,
    lowpass_reduce,
)


def test_registry_names():
    assert {"haar", "sym4"} <= set(available_filters())
    with pytest.raises(KeyError):
        get_filter("db99")


@pytest.mark.parametrize("name", ["haar", "sym4"])
def test_filter_invariants(name):
    f = get_filter(name)
    assert np.dot(f.lowpass, f.lowpass) == pytest.approx(1, abs=1e-10)
    assert f.lowpass.sum() == pytest.approx(np.sqrt(2), abs=1e-10)
    assert f.highpass.sum() == pytest.approx(0, abs=1e-12)


def test_sym4_moments_and_corrupted_table():
    f = get_filter("sym4")
    assert f.vanishing_moments == 4
    bad = OrthoFilterSpec("bad", f.lowpass + 1e-6, 4)
    with pytest.raises(ValueError):
        bad.validate()
    too_many = OrthoFilterSpec("haar5", get_filter("haar").lowpass, 2)
    with pytest.raises(ValueError):
        too_many.validate()


def test_haar_constant():
    p = fwt_forward(np.full((8, 8), 3.0), "haar", 1)
    assert np.allclose(p.approx, 6.0)
    for b in BANDS:
        assert np.allclose(p.details[0][b], 0.0)


@pytest.mark.parametrize("name", ["haar", "sym4"])
@pytest.mark.parametrize("levels", [1, 2, 3])
def test_round_trip_and_parseval(name, levels):
    rng = np.random.default_rng(levels)
    x = rng.standard_normal((16, 16))
    p = fwt_forward(x, name, levels)
    assert np.abs(fwt_inverse(p, name) - x).max() < 1e-10
    assert np.sum(p.coefficients() ** 2) == pytest.approx(np.sum(x ** 2), rel=1e-12)


def test_round_trip_sym4_8x8():
    x = np.random.default_rng(0).standard_normal((8, 8))
    assert np.abs(fwt_inverse(fwt_forward(x, "sym4", 1), "sym4") - x).max() < 1e-10


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (16, 16), elements=st.floats(-10, 10)),
       arrays(np.float64, (16, 16), elements=st.floats(-10, 10)))
def test_adjoint(x, y):
    # inverse is the adjoint of the forward map
    px = fwt_forward(x, "sym4", 2)
    py = fwt_forward(y, "sym4", 2)
    lhs = np.dot(px.coefficients(), py.coefficients())
    assert lhs == pytest.approx(np.sum(x * fwt_inverse(py, "sym4")), abs=1e-8)


def test_zero_pyramid():
    p = fwt_forward(np.zeros((16, 16)), "sym4", 2)
    assert np.all(fwt_inverse(p, "sym4") == 0)


def test_unit_atom_norm():
    p = fwt_forward(np.zeros((16, 16)), "sym4", 2)
    p.details[1]["LH"][1, 2] = 1.0
    assert np.linalg.norm(fwt_inverse(p, "sym4")) == pytest.approx(1.0, abs=1e-12)


def test_polynomials_annihilated():
    N = 64
    u = np.arange(N, dtype=float)
    U2, U1 = np.meshgrid(u, u, indexing="ij")
    for deg in range(4):
        x = (U1 / N) ** deg + 0.5 * (U2 / N) ** deg
        p = fwt_forward(x, "sym4", 1)
        # interior only: periodic wrap breaks polynomials at the seam
        for b in BANDS:
            assert np.abs(p.details[0][b][2:-4, 2:-4]).max() < 1e-8


def test_size_errors():
    with pytest.raises(ValueError):
        fwt_forward(np.zeros((12, 12)), "haar", 3)
    with pytest.raises(ValueError):
        fwt_forward(np.zeros((8, 8)), "haar", 0)
    p = fwt_forward(np.zeros((8, 8)), "haar", 1)
    bad = Pyramid(np.zeros((3, 3)), p.details)
    with pytest.raises(ValueError):
        fwt_inverse(bad, "haar")


def test_lowpass_reduce_keeps_amplitude():
    assert np.allclose(lowpass_reduce(np.full((32, 32), -0.7)), -0.7)


def test_vertical_edge_in_lh():
    x = np.zeros((16, 16))
    x[:, 5:] = 1.0
    p = fwt_forward(x, "haar", 1)
    assert np.abs(p.details[0]["LH"]).max() > 0.5
    assert np.abs(p.details[0]["HL"]).max() == 0


def _least_asymmetric_oracle(p, reference):
    # Daubechies spectral factorization; pick the root set closest to reference
    yroots = np.roots([comb(p - 1 + k, k) for k in range(p)][::-1])
    pairs = []
    for y in yroots:
        b = 2 - 4 * y
        d = np.sqrt(b * b - 4 + 0j)
        pairs.append(((b + d) / 2, (b - d) / 2))
    best = None
    for choice in itertools.product([0, 1], repeat=len(pairs)):
        roots = [pr[c] for pr, c in zip(pairs, choice)] + [-1.0] * p
        c = np.poly(roots)
        if np.abs(c.imag).max() > 1e-9:
            continue
        h = c.real * np.sqrt(2) / c.real.sum()
        for cand in (h, h[::-1]):
            err = np.abs(cand - reference).max()
            if best is None or err < best[0]:
                best = (err, cand)
    return best


def test_sym4_matches_spectral_factorization():
    f = get_filter("sym4")
    err, _ = _least_asymmetric_oracle(4, f.lowpass)
    assert err < 1e-10
