import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uwvf.oracle import (
    C0,
    MieSpec,
    PlaneWave,
    SalisburySpec,
    matched_sheet,
    mie_amplitudes,
    mie_bistatic_rcs,
    mie_coefficients,
    mie_cross_sections,
    mie_truncation,
    plane_wave_exact,
    salisbury_solution,
    wavenumber,
)

F = 2e9
K = wavenumber(F)


def test_wavenumber():
    assert np.isclose(wavenumber(C0), 2 * np.pi)
    assert np.isclose(2 * np.pi / K, 0.1499, atol=1e-4)


# ---------------------------------------------------------------------------
# plane waves


def test_plane_wave_values():
    inc = PlaneWave(2.0, np.array([0, 0, 1.0]), np.array([1.0, 0, 0]))
    assert np.allclose(plane_wave_exact(inc, np.array([0, 0, np.pi / 4])), [1j, 0, 0])
    batch = plane_wave_exact(inc, np.zeros((3, 3)))
    assert batch.shape == (3, 3) and np.allclose(batch[:, 0], 1)
    assert np.allclose(inc.curl([0, 0, 0]), [[0, 2j, 0]])


def test_plane_wave_validation():
    with pytest.raises(ValueError, match="orthogonal"):
        PlaneWave(1.0, np.array([1.0, 0, 0]), np.array([1.0, 1.0, 0]))
    with pytest.raises(ValueError):
        PlaneWave(1.0, np.array([2.0, 0, 0]), np.array([0, 1.0, 0]))
    with pytest.raises(ValueError):
        PlaneWave(0.0, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, np.pi), st.floats(0.1, 10))
def test_plane_wave_is_divergence_free_and_transverse(phi, theta, k):
    d = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    p = np.cross(d, [0.3, 0.5, -0.7]) * (1 + 0.5j)
    if np.linalg.norm(p) < 1e-3:
        return
    inc = PlaneWave(k, d, p)
    x = np.array([[0.2, -0.4, 0.9]])
    assert abs(inc(x)[0] @ d) < 1e-12
    # curl curl E = k^2 E for a transverse plane wave
    assert np.allclose(1j * k * np.cross(d, inc.curl(x)[0]), k**2 * inc(x)[0])


# ---------------------------------------------------------------------------
# Mie series


def test_rayleigh_pec_back_to_forward_ratio():
    spec = MieSpec(0.002 / K, F)
    s = mie_bistatic_rcs(spec, [0.0, 180.0])
    assert np.isclose(s[1] / s[0], 9.0, rtol=1e-3)
    a = spec.radius
    assert np.isclose(s[1], 9 * np.pi * a**2 * (K * a) ** 4, rtol=1e-3)


def test_rayleigh_dielectric_backscatter():
    eps = 3.0
    spec = MieSpec(0.002 / K, F, pec=False, eps_r=eps)
    a = spec.radius
    expected = 4 * np.pi * K**4 * a**6 * abs((eps - 1) / (eps + 2)) ** 2
    assert np.isclose(mie_bistatic_rcs(spec, [180.0])[0], expected, rtol=1e-3)


def test_vacuum_sphere_does_not_scatter():
    spec = MieSpec(0.1, F, pec=False, eps_r=1.0)
    a, b = mie_coefficients(spec, 20)
    assert np.max(np.abs(a)) < 1e-14 and np.max(np.abs(b)) < 1e-14
    assert np.max(mie_bistatic_rcs(spec, np.arange(0, 181, 30), nmax=20)) < 1e-25


@pytest.mark.parametrize("spec", [MieSpec(0.15, F), MieSpec(0.15, F, False, 1.5 + 0.5j),
                                  MieSpec(0.075, F, False, -1.5 + 0.5j)])
def test_truncation_stable(spec):
    L = mie_truncation(spec)
    angles = np.arange(0, 181, 5.0)
    a = mie_bistatic_rcs(spec, angles, L)
    b = mie_bistatic_rcs(spec, angles, L + 20)
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(a)


@pytest.mark.parametrize("eps", [2.0, 4.0 + 0j])
def test_optical_theorem_lossless(eps):
    spec = MieSpec(0.1, F, False, eps)
    ext, sca = mie_cross_sections(spec)
    assert np.isclose(ext, sca, rtol=1e-10)
    S1, S2 = mie_amplitudes(spec, [0.0])
    assert np.isclose(S1[0], S2[0])
    assert np.isclose(ext, 4 * np.pi / K**2 * S1[0].real, rtol=1e-10)


def test_lossy_sphere_absorbs():
    ext, sca = mie_cross_sections(MieSpec(0.1, F, False, 1.5 + 0.5j))
    assert ext > sca > 0
    ext, sca = mie_cross_sections(MieSpec(0.1, F))
    assert np.isclose(ext, sca, rtol=1e-10)


def test_continuous_in_frequency():
    angles = np.arange(0, 181, 10.0)
    base = mie_bistatic_rcs(MieSpec(0.15, F, False, 1.5 + 0.5j), angles)
    near = mie_bistatic_rcs(MieSpec(0.15, F * (1 + 1e-7), False, 1.5 + 0.5j), angles)
    assert np.max(np.abs(base - near)) < 1e-5 * np.max(base)


def test_azimuth_symmetry():
    spec = MieSpec(0.15, F)
    assert np.allclose(mie_bistatic_rcs(spec, [30.0, 200.0]), mie_bistatic_rcs(spec, [-30.0, 160.0]))


# ---------------------------------------------------------------------------
# Salisbury screen


def test_quarter_wave_reflection():
    H = np.pi / (2 * K)
    for eta, R in ((1.0, 0.0), (0.5, -1 / 3), (0.0, -1.0), (3.0, 0.5)):
        sol = salisbury_solution(SalisburySpec(H, eta, K))
        assert abs(sol.R2 - R) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.4), st.floats(0, 3), st.floats(-2, 2))
def test_salisbury_jump_conditions(kh, eta_r, eta_i):
    eta = complex(eta_r, eta_i)
    H = kh / K
    try:
        sol = salisbury_solution(SalisburySpec(H, eta, K))
    except ZeroDivisionError:
        return
    e = 1e-9 * H
    left, right = sol.E_y(-H - e), sol.E_y(-H + e)
    assert abs(left - right) <= 1e-6 * max(1.0, abs(left))
    assert sol.E_y(0.0) == 0 and sol.E_y(0.5 * H) == 0
    jump = sol.dE_y(-H + e) - sol.dE_y(-H - e)
    assert abs(jump + 1j * K * eta * sol.E_y(-H)) <= 1e-6 * K * max(1.0, abs(eta) * abs(sol.E_y(-H)))
    # the incident amplitude is one
    x = np.array([-2 * H, -3 * H])
    inc = (sol.E_y(x) * 1j * K + sol.dE_y(x)) / (2j * K)
    assert np.allclose(inc, np.exp(1j * K * x))
    if eta_i == 0:
        assert abs(sol.R2) <= 1 + 1e-12


def test_matched_sheet_absorbs():
    for H in (0.01, 0.03, 0.05):
        sol = salisbury_solution(SalisburySpec(H, matched_sheet(K, H), K))
        assert abs(sol.R2) < 1e-12


def test_salisbury_validation():
    with pytest.raises(ValueError):
        salisbury_solution(SalisburySpec(0.0, 1.0, K))
