import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatden.transforms import (
    RHO_MODULUS,
    RHO_RECTIFIER,
    apply_rho,
    decay_profile,
    dump_coeffs,
    dwt_forward,
    fft2,
    is_degenerate,
    l1,
    load_coeffs,
    norms,
    perp,
    scattering_forward,
)
from scatden.wavelet_bank import build_bank


@pytest.fixture(scope="module")
def bank8():
    return build_bank(8)


@pytest.fixture(scope="module")
def bank16():
    return build_bank(16, -4, -2)


@pytest.fixture(scope="module")
def bank32():
    return build_bank(32, -5, -2)


def spatial_conv(x, kernel):
    # direct O(N^4) circular convolution
    N = x.shape[0]
    out = np.zeros((N, N), complex)
    for n1 in range(N):
        for n2 in range(N):
            acc = 0j
            for m1 in range(N):
                for m2 in range(N):
                    acc += x[m1, m2] * kernel[(n1 - m1) % N, (n2 - m2) % N]
            out[n1, n2] = acc
    return out


def test_zero_and_constant(bank16):
    c = dwt_forward(np.zeros((16, 16)), bank16)
    assert all(np.all(v == 0) for v in c.detail.values())
    c = dwt_forward(np.full((16, 16), 2.5), bank16)
    assert max(np.abs(v).max() for v in c.detail.values()) < 1e-10
    assert np.allclose(c.low, 2.5)


def test_size_mismatch(bank16):
    with pytest.raises(ValueError):
        dwt_forward(np.zeros((8, 8)), bank16)
    with pytest.raises(ValueError):
        scattering_forward(np.zeros((8, 8)), bank16)


def test_spectral_matches_spatial_8(bank8):
    x = np.random.default_rng(1).standard_normal((8, 8))
    c = dwt_forward(x, bank8)
    for key, fld in c.detail.items():
        assert np.abs(fld - spatial_conv(x, bank8.kernel(*key))).max() < 1e-10


def test_parseval(bank16):
    x = np.random.default_rng(2).standard_normal((16, 16))
    X = fft2(x)
    for key, fld in dwt_forward(x, bank16).detail.items():
        lhs = np.mean(np.abs(fld) ** 2)
        rhs = np.sum(np.abs(X * bank16[key]) ** 2) / 16 ** 4
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_translation_covariance(bank16):
    x = np.random.default_rng(3).standard_normal((16, 16))
    shift = (3, -5)
    a = scattering_forward(x, bank16)
    b = scattering_forward(np.roll(x, shift, axis=(0, 1)), bank16)
    for key in a.second:
        assert np.abs(np.roll(a.second[key], shift, axis=(0, 1)) - b.second[key]).max() < 1e-12


def test_rho_examples():
    assert apply_rho(0j, RHO_MODULUS, 0.3) == 0
    assert apply_rho(3 - 4j, RHO_MODULUS, 0.0) == pytest.approx(5.0)
    assert apply_rho(np.array([-1 + 2j]), RHO_RECTIFIER)[0] == 2j
    h = 1e-6
    d = (apply_rho(h + 0j, RHO_MODULUS, 1.0) - apply_rho(-h + 0j, RHO_MODULUS, 1.0)) / (2 * h)
    assert abs(d) < 1e-9
    with pytest.raises(ValueError):
        apply_rho(1j, "tanh")
    with pytest.raises(ValueError):
        apply_rho(1j, RHO_MODULUS, -1.0)


@settings(max_examples=200)
@given(st.complex_numbers(max_magnitude=1e3), st.complex_numbers(max_magnitude=1e3),
       st.floats(0, 10), st.sampled_from([RHO_MODULUS, RHO_RECTIFIER]))
def test_rho_is_one_lipschitz(z1, z2, eps, rho):
    a = apply_rho(np.array([z1, z2]), rho, eps)
    assert abs(a[0] - a[1]) <= abs(z1 - z2) * (1 + 1e-12) + 1e-9


def straight_line_scattering(x, bank, rho, eps):
    out = {}
    X = np.fft.fft2(x)
    for j in bank.scales:
        for k in range(4):
            first = np.fft.ifft2(X * bank[(j, k)])
            if rho == RHO_MODULUS:
                u = np.sqrt(np.abs(first) ** 2 + eps ** 2) - eps
            else:
                u = np.maximum(first.real, 0) + 1j * np.maximum(first.imag, 0)
            U = np.fft.fft2(u)
            for j2 in bank.scales:
                if j2 <= j:
                    continue
                for k2 in range(4):
                    out[(j, k, j2, k2)] = np.fft.ifft2(U * bank[(j2, k2)])
    return out


@pytest.mark.parametrize("rho,eps", [(RHO_MODULUS, 0.0), (RHO_MODULUS, 0.1), (RHO_RECTIFIER, 0.0)])
def test_scattering_matches_compositional_oracle(bank16, rho, eps):
    x = np.random.default_rng(4).standard_normal((16, 16))
    s = scattering_forward(x, bank16, rho, eps)
    ref = straight_line_scattering(x, bank16, rho, eps)
    assert set(s.second) == set(ref)
    for key in ref:
        assert np.abs(s.second[key] - ref[key]).max() < 1e-10
    assert all(key[2] > key[0] for key in s.second)


def test_zero_and_constant_scattering(bank16):
    s = scattering_forward(np.zeros((16, 16)), bank16)
    assert all(np.all(v == 0) for v in s.second.values())
    s = scattering_forward(np.full((16, 16), -1.0), bank16)
    assert max(np.abs(v).max() for v in s.second.values()) < 1e-10
    t = norms(scattering_forward(np.zeros((16, 16)), bank16))
    assert all(v == 0 for v in t.first_l1.values())
    assert all(v == 0 for v in t.second_l1.values())


def test_jprime_cap_and_first_scales(bank32):
    x = np.random.default_rng(5).standard_normal((32, 32))
    s = scattering_forward(x, bank32, jprime_max=-3, first_scales=[-5, -4])
    assert {key[0] for key in s.first} == {-5, -4}
    assert max(key[2] for key in s.second) == -3


def test_young_inequality(bank16):
    rng = np.random.default_rng(6)
    psi_l1 = {key: np.abs(bank16.kernel(*key)).sum() for key in bank16.keys}
    for _ in range(100):
        x = rng.standard_normal((16, 16)) * rng.uniform(0.1, 10)
        t = norms(scattering_forward(x, bank16))
        for (j, k, j2, k2), v in t.second_l1.items():
            assert v <= t.first_l1[(j, k)] * psi_l1[(j2, k2)] * (1 + 1e-12)


def test_step_edge_orientation(bank32):
    x = np.zeros((32, 32))
    x[8:24, :] = 1.0  # horizontal edges: variation along axis 0 only
    t = norms(scattering_forward(x, bank32))
    for j in (-5, -4):
        assert t.first_l1[(j, 0)] / t.first_l1[(j, perp(0))] < 0.2


def test_decay_profile_requires_five_scales(bank16):
    with pytest.raises(ValueError):
        decay_profile(np.zeros((16, 16)), bank16)


def test_decay_profile_constant_is_degenerate():
    bank = build_bank(32, -5, -1)
    prof = decay_profile(np.full((32, 32), 0.3), bank)
    assert [j for j, _ in prof] == [-5, -4, -3, -2, -1]
    assert max(v for _, v in prof) < 1e-12
    assert is_degenerate(prof, rtol=1e-10)


def test_decay_profile_matches_scattering_diagonal():
    bank = build_bank(32, -5, -1)
    x = np.random.default_rng(7).standard_normal((32, 32))
    prof = dict(decay_profile(x, bank, per_orientation=True))
    X = np.fft.fft2(x)
    for j in (-5, -3):
        for k in range(4):
            u = np.abs(np.fft.ifft2(X * bank[(j, k)]))
            ref = l1(np.fft.ifft2(np.fft.fft2(u) * bank[(j, perp(k))]))
            assert prof[j][k] == pytest.approx(ref, rel=1e-12)


def test_dump_round_trip(tmp_path, bank16):
    x = np.random.default_rng(8).standard_normal((16, 16))
    s = scattering_forward(x, bank16, RHO_MODULUS, 0.01)
    back = load_coeffs(dump_coeffs(s, tmp_path / "dump"))
    assert back.rho == s.rho and back.eps == s.eps
    for key in s.second:
        assert np.array_equal(back.second[key], s.second[key])
    for key in s.first:
        assert np.array_equal(back.first[key], s.first[key])
