"""Analytic reference solutions: plane waves, Mie series, Salisbury screen."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spherical_jn, spherical_yn

C0 = 299_792_458.0


def wavenumber(frequency: float) -> float:
    return 2.0 * np.pi * frequency / C0


@dataclass(frozen=True, eq=False)
class PlaneWave:
    """Incident field p exp(i kappa d . x) in vacuum."""

    kappa: float
    direction: np.ndarray
    polarization: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        p = np.asarray(self.polarization, dtype=complex)
        if self.kappa <= 0:
            raise ValueError("wave number must be positive")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("propagation direction must be a unit vector")
        if abs(np.dot(d, p)) > 1e-12 * max(1.0, np.linalg.norm(p)):
            raise ValueError("polarization must be orthogonal to the propagation direction (d . p = 0)")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "polarization", p)

    def __call__(self, points) -> np.ndarray:
        x = np.atleast_2d(points)
        return np.exp(1j * self.kappa * (x @ self.direction))[:, None] * self.polarization

    def curl(self, points) -> np.ndarray:
        x = np.atleast_2d(points)
        c = 1j * self.kappa * np.cross(self.direction, self.polarization)
        return np.exp(1j * self.kappa * (x @ self.direction))[:, None] * c


def plane_wave_exact(incident: PlaneWave, point) -> np.ndarray:
    out = incident(point)
    return out[0] if np.ndim(point) == 1 else out


# ---------------------------------------------------------------------------
# Mie series


@dataclass(frozen=True)
class MieSpec:
    radius: float
    frequency: float
    pec: bool = True
    eps_r: complex = 1.0
    mu_r: complex = 1.0

    @property
    def kappa(self) -> float:
        return wavenumber(self.frequency)


class MieConvergenceError(RuntimeError):
    pass


def _log_derivative(z: complex, nmax: int) -> np.ndarray:
    """D_n(z) = psi_n'(z) / psi_n(z) for n = 0..nmax by downward recurrence."""
    nstart = int(max(nmax, abs(z)) + 16 + 4 * abs(z) ** (1 / 3))
    D = np.zeros(nstart + 1, dtype=complex)
    for n in range(nstart, 0, -1):
        D[n - 1] = n / z - 1.0 / (D[n] + n / z)
    return D[: nmax + 1]


def mie_coefficients(spec: MieSpec, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Scattering coefficients a_n, b_n for n = 1..nmax."""
    x = spec.kappa * spec.radius
    n = np.arange(0, nmax + 1)
    psi = x * spherical_jn(n, x)
    xi = x * (spherical_jn(n, x) + 1j * spherical_yn(n, x))
    nn = n[1:]
    psi_n, psi_m = psi[1:], psi[:-1]
    xi_n, xi_m = xi[1:], xi[:-1]
    if spec.pec:
        a = (nn * psi_n / x - psi_m) / (nn * xi_n / x - xi_m)
        b = psi_n / xi_n
        return a, b
    m = np.sqrt(complex(spec.eps_r) * complex(spec.mu_r))
    if m.imag < 0:
        m = -m
    D = _log_derivative(m * x, nmax)[1:]
    mu1 = complex(spec.mu_r)
    fa = D * mu1 / m + nn / x
    fb = D * m / mu1 + nn / x
    a = (fa * psi_n - psi_m) / (fa * xi_n - xi_m)
    b = (fb * psi_n - psi_m) / (fb * xi_n - xi_m)
    return a, b


def mie_truncation(spec: MieSpec, rtol: float = 1e-12, lmax: int = 2000) -> int:
    x = spec.kappa * spec.radius
    L = int(np.ceil(x + 10))
    while L <= lmax:
        a, b = mie_coefficients(spec, L)
        w = (2 * np.arange(1, L + 1) + 1) / (np.arange(1, L + 1) * (np.arange(1, L + 1) + 1.0))
        terms = w * (np.abs(a) + np.abs(b))
        total = np.sum(terms)
        if total == 0.0 or terms[-1] < rtol * total:
            return L
        L += 10
    raise MieConvergenceError(f"Mie series not converged at L = {L}")


def _angular(mu: np.ndarray, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    pi = np.zeros((nmax + 1, mu.size))
    tau = np.zeros((nmax + 1, mu.size))
    pi[1] = 1.0
    tau[1] = mu
    for n in range(2, nmax + 1):
        pi[n] = ((2 * n - 1) * mu * pi[n - 1] - n * pi[n - 2]) / (n - 1)
        tau[n] = n * mu * pi[n] - (n + 1) * pi[n - 1]
    return pi[1:], tau[1:]


def mie_amplitudes(spec: MieSpec, theta, nmax: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude functions S1, S2 at scattering angles ``theta`` (radians)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    L = nmax if nmax is not None else mie_truncation(spec)
    a, b = mie_coefficients(spec, L)
    n = np.arange(1, L + 1)
    w = (2 * n + 1) / (n * (n + 1.0))
    pi, tau = _angular(np.cos(theta), L)
    S1 = (w * a) @ pi + (w * b) @ tau
    S2 = (w * a) @ tau + (w * b) @ pi
    return S1, S2


def mie_bistatic_rcs(spec: MieSpec, angles_deg, nmax: int | None = None) -> np.ndarray:
    """Bistatic RCS (m^2) in the xy-plane for x-incidence with y-polarization.

    The observation direction is (cos phi, sin phi, 0); the incident electric
    field lies in the scattering plane, so the S2 amplitude applies.
    """
    phi = np.deg2rad(np.atleast_1d(np.asarray(angles_deg, dtype=float)))
    theta = np.arccos(np.clip(np.cos(phi), -1.0, 1.0))
    _, S2 = mie_amplitudes(spec, theta, nmax)
    return 4.0 * np.pi * np.abs(S2) ** 2 / spec.kappa**2


def mie_cross_sections(spec: MieSpec, nmax: int | None = None) -> tuple[float, float]:
    """(extinction, scattering) cross sections in m^2."""
    L = nmax if nmax is not None else mie_truncation(spec)
    a, b = mie_coefficients(spec, L)
    n = np.arange(1, L + 1)
    k2 = spec.kappa**2
    c_ext = 2 * np.pi / k2 * np.sum((2 * n + 1) * (a + b).real)
    c_sca = 2 * np.pi / k2 * np.sum((2 * n + 1) * (np.abs(a) ** 2 + np.abs(b) ** 2))
    return float(c_ext), float(c_sca)


# ---------------------------------------------------------------------------
# Salisbury screen


@dataclass(frozen=True)
class SalisburySpec:
    H: float
    eta: complex
    kappa: float


@dataclass(frozen=True)
class SalisburySolution:
    R2: complex
    q02: complex
    q12: complex
    spec: SalisburySpec

    def E_y(self, x) -> np.ndarray:
        """y component of the total field along x (zero behind the conductor)."""
        x = np.asarray(x, dtype=float)
        k, H = self.spec.kappa, self.spec.H
        left = np.exp(1j * k * x) + self.R2 * np.exp(-1j * k * x)
        gap = self.q02 * np.exp(1j * k * x) + self.q12 * np.exp(-1j * k * x)
        return np.where(x < -H, left, np.where(x <= 0.0, gap, 0.0))

    def dE_y(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k, H = self.spec.kappa, self.spec.H
        left = 1j * k * (np.exp(1j * k * x) - self.R2 * np.exp(-1j * k * x))
        gap = 1j * k * (self.q02 * np.exp(1j * k * x) - self.q12 * np.exp(-1j * k * x))
        return np.where(x < -H, left, np.where(x <= 0.0, gap, 0.0))


def salisbury_solution(spec: SalisburySpec) -> SalisburySolution:
    """Normal-incidence field for a resistive sheet at x = -H before a PEC at x = 0."""
    if spec.H <= 0:
        raise ValueError("gap H must be positive")
    kh = spec.kappa * spec.H
    s, c = np.sin(kh), np.cos(kh)
    eta = complex(spec.eta)
    den = 1j * (eta + 1.0) * s - c
    if abs(den) < 1e-14:
        raise ZeroDivisionError("resonant Salisbury configuration (zero denominator)")
    ph = np.exp(-1j * kh)
    R2 = -(1j * (eta - 1.0) * s - c) * np.exp(-2j * kh) / den
    q02 = ph / (-den)
    q12 = ph / den
    return SalisburySolution(complex(R2), complex(q02), complex(q12), spec)


def matched_sheet(kappa: float, H: float) -> complex:
    """Sheet parameter giving zero reflection, 1 - i cot(kappa H)."""
    return complex(1.0 - 1j / np.tan(kappa * H))
