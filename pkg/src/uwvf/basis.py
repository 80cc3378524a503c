"""Plane-wave bases on elements and their impedance traces.

Each element carries ``p`` propagation directions with two polarizations,
giving ``2p`` basis functions ordered as ``2 * l + m``.  Test and trial
traces are built from plane waves of the adjoint Maxwell operator

    xi = A exp(i conj(k) d . (x - x0)),   k = kappa sqrt(eps_r mu_r),

and fields are rebuilt from the original-operator plane waves
``A exp(i k d . (x - x0))``.  In lossless media the two families agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Element, Material, Mesh

# Quadratic fits N = ceil(a x^2 + b x + c), x = kappa_abs * h_av, keyed by the
# bound on cond(D) for the element block.
DIRECTION_TABLE = {
    1e5: {"tetra": (0.2972, 7.3336, 4.0000), "hexa": (0.5365, 9.1369, 4.0000), "wedge": (0.3752, 9.0041, 4.0000)},
    1e7: {"tetra": (0.3305, 10.2707, 4.0000), "hexa": (0.5803, 13.3338, 4.0000), "wedge": (0.4325, 12.2717, 4.0000)},
    1e9: {"tetra": (0.3430, 13.6221, 8.1296), "hexa": (0.5967, 17.7977, 7.7490), "wedge": (0.4704, 15.6097, 9.9414)},
}
DEFAULT_TOLERANCE = 1e7


def _table_row(tolerance: float) -> dict:
    for key, row in DIRECTION_TABLE.items():
        if np.isclose(tolerance, key, rtol=1e-9):
            return row
    raise ValueError(f"no direction polynomial for condition bound {tolerance:g}")


def direction_count(kind: str, kappa_abs: float, h_av: float, tolerance: float = DEFAULT_TOLERANCE) -> int:
    """Number of plane-wave directions for an element."""
    row = _table_row(tolerance)
    if kind not in row:
        raise ValueError(f"unknown element kind {kind!r}")
    if kappa_abs <= 0 or h_av <= 0:
        raise ValueError("kappa_abs and h_av must be positive")
    a, b, c = row[kind]
    x = kappa_abs * h_av
    # round off float noise before the ceiling
    return max(4, int(np.ceil(round(a * x * x + b * x + c, 9))))


def refractive_index(material: Material) -> complex:
    """Principal square root of eps_r * mu_r (nonnegative imaginary part)."""
    n = np.sqrt(complex(material.eps_r) * complex(material.mu_r))
    if n.imag < 0:
        n = -n
    return complex(n)


def kappa_abs(kappa: float, material: Material) -> float:
    return float(kappa * abs(refractive_index(material)))


def h_av(element: Element | int, mesh: Mesh) -> float:
    """Mean distance of the element's vertices from their centroid."""
    if isinstance(element, (int, np.integer)):
        element = mesh.elements[int(element)]
    pts = mesh.vertices[list(element.vertex_ids)]
    return float(np.mean(np.linalg.norm(pts - pts.mean(axis=0), axis=1)))


def radical_inverse(n: int, base: int) -> float:
    inv, f = 0.0, 1.0 / base
    while n > 0:
        n, digit = divmod(n, base)
        inv += digit * f
        f /= base
    return inv


def hammersley_directions(p: int) -> np.ndarray:
    """First ``p`` directions of the nested radical-inverse sphere sequence."""
    if p < 1:
        raise ValueError("need at least one direction")
    out = np.empty((p, 3))
    for ell in range(p):
        z = 1.0 - 2.0 * radical_inverse(ell + 1, 2)
        th = 2.0 * np.pi * radical_inverse(ell + 1, 3)
        r = np.sqrt(max(0.0, 1.0 - z * z))
        out[ell] = (r * np.cos(th), r * np.sin(th), z)
    return out


def polarization_pair(d) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal polarizations (A1, A2) with d . A1 = d . A2 = 0."""
    d = np.asarray(d, dtype=float)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(d)))] = 1.0
    a1 = np.cross(d, e)
    a1 /= np.linalg.norm(a1)
    a2 = np.cross(d, a1)
    return a1, a2


@dataclass(frozen=True, eq=False)
class PlaneWaveBasis:
    element_id: int
    p: int
    directions: np.ndarray  # (p, 3)
    polarizations: np.ndarray  # (p, 2, 3)
    centroid: np.ndarray
    kappa: float  # vacuum wave number
    k_elem: complex  # kappa * sqrt(eps_r mu_r)
    eps_r: complex
    mu_r: complex
    kappa_abs: float
    h_av: float

    @property
    def size(self) -> int:
        return 2 * self.p

    @property
    def lossless(self) -> bool:
        return abs(self.k_elem.imag) == 0.0 and self.mu_r.imag == 0.0 and self.eps_r.imag == 0.0

    @property
    def A(self) -> np.ndarray:
        """Polarization of every basis function, (2p, 3)."""
        return self.polarizations.reshape(-1, 3)

    @property
    def d(self) -> np.ndarray:
        return np.repeat(self.directions, 2, axis=0)

    def wavevectors(self, adjoint: bool = True) -> np.ndarray:
        """Complex wave vector of each direction, (p, 3)."""
        k = np.conj(self.k_elem) if adjoint else self.k_elem
        return k * self.directions

    def curl_amplitudes(self, adjoint: bool = True) -> np.ndarray:
        """mu^-1 curl of each basis function divided by its phase, (2p, 3)."""
        if adjoint:
            f = 1j * np.conj(self.k_elem) / np.conj(self.mu_r)
        else:
            f = 1j * self.k_elem / self.mu_r
        return f * np.cross(self.d, self.A)

    def phases(self, points, adjoint: bool = True) -> np.ndarray:
        """exp(i q . (x - x0)) per direction, (n, p)."""
        x = np.atleast_2d(points) - self.centroid
        return np.exp(1j * (x @ self.wavevectors(adjoint).T))


def make_basis(element: Element, material: Material, kappa: float, p: int | None = None,
               tolerance: float = DEFAULT_TOLERANCE) -> PlaneWaveBasis:
    n = refractive_index(material)
    ka = kappa * abs(n)
    if p is None:
        p = direction_count(element.kind, ka, element.h_av, tolerance)
    dirs = hammersley_directions(p)
    pol = np.array([polarization_pair(d) for d in dirs])
    return PlaneWaveBasis(element.id, p, dirs, pol, np.asarray(element.centroid, dtype=float), float(kappa),
                          complex(kappa * n), complex(material.eps_r), complex(material.mu_r), ka, element.h_av)


def build_bases(mesh: Mesh, kappa: float, tolerance: float = DEFAULT_TOLERANCE,
                p_override: int | dict | None = None) -> list[PlaneWaveBasis]:
    """One basis per element; ``p_override`` fixes p globally or per element."""
    out = []
    for el in mesh.elements:
        p = p_override.get(el.id) if isinstance(p_override, dict) else p_override
        out.append(make_basis(el, mesh.material(el.id), kappa, p, tolerance))
    return out


def n_dof(bases) -> int:
    return sum(b.size for b in bases)


# ---------------------------------------------------------------------------
# traces


def trace_amplitudes(basis: PlaneWaveBasis, normals, Z, kind: str = "chi",
                     adjoint: bool = True) -> np.ndarray:
    """Trace of every basis function divided by its phase factor, (n, 2p, 3).

    ``kind="chi"`` gives ``-nu x mu^-1 curl u + (i kappa / Z) u_T`` and
    ``kind="F"`` gives ``nu x mu^-1 curl u + (i kappa / Z) u_T``.
    """
    if kind not in ("chi", "F"):
        raise ValueError(f"unknown trace kind {kind!r}")
    nu = np.atleast_2d(normals)
    if np.any(np.abs(np.linalg.norm(nu, axis=1) - 1.0) > 1e-10):
        raise ValueError("normals must be unit vectors")
    sign = -1.0 if kind == "chi" else 1.0
    Z = np.broadcast_to(np.asarray(Z, dtype=float), (len(nu),))
    A = basis.A
    c = sign * basis.curl_amplitudes(adjoint)
    f = (1j * basis.kappa / Z)[:, None]
    nuA = nu @ A.T
    out = np.empty((len(nu), len(A), 3), dtype=complex)
    # cross products written per component; np.cross is slow on broadcast shapes
    for i, (j, k) in enumerate(((1, 2), (2, 0), (0, 1))):
        out[:, :, i] = (np.outer(nu[:, j], c[:, k]) - np.outer(nu[:, k], c[:, j])
                        + f * (A[:, i][None, :] - nuA * nu[:, i][:, None]))
    return out


def trace_values(basis: PlaneWaveBasis, points, normals, Z, kind: str = "chi",
                 adjoint: bool = True) -> np.ndarray:
    """Impedance traces of all basis functions at surface points, (n, 2p, 3)."""
    amp = trace_amplitudes(basis, normals, Z, kind, adjoint)
    ph = np.repeat(basis.phases(points, adjoint), 2, axis=1)
    return amp * ph[:, :, None]


def trace_field(basis: PlaneWaveBasis, coefficients, normals, Z, phases, kind: str = "chi") -> np.ndarray:
    """Trace of the combination ``sum_j c_j u_j`` at points, (n, 3).

    ``phases`` are the per-direction phase factors at the points, (n, p),
    as returned by ``basis.phases``.  The cost is O(n p), against O(n p^2)
    for evaluating every basis trace and contracting afterwards.
    """
    nu = np.atleast_2d(normals)
    sign = -1.0 if kind == "chi" else 1.0
    f = (1j * basis.kappa / np.broadcast_to(np.asarray(Z, dtype=float), (len(nu),)))[:, None]
    c = np.asarray(coefficients, dtype=complex).reshape(basis.p, 2, 1)
    curl = phases @ (c * basis.curl_amplitudes().reshape(basis.p, 2, 3)).sum(axis=1)
    amp = phases @ (c * basis.polarizations).sum(axis=1)
    a_t = amp - np.sum(nu * amp, axis=1)[:, None] * nu
    return sign * np.cross(nu, curl) + f * a_t


def trace_project(basis: PlaneWaveBasis, values, weights, normals, Z, phases, kind: str = "F") -> np.ndarray:
    """``sum_q weights_q values_q . conj(u_j(x_q))`` for every basis trace ``u_j``, (2p,)."""
    nu = np.atleast_2d(normals)
    v = np.asarray(values)
    sign = -1.0 if kind == "chi" else 1.0
    f = (1j * basis.kappa / np.broadcast_to(np.asarray(Z, dtype=float), (len(nu),)))[:, None]
    w = np.asarray(weights)[:, None]
    v_t = v - np.sum(nu * v, axis=1)[:, None] * nu
    pc = phases.conj().T
    P1 = pc @ (w * sign * np.cross(v, nu))
    P2 = pc @ (w * np.conj(f) * v_t)
    curl = basis.curl_amplitudes().conj().reshape(basis.p, 2, 3)
    out = (curl * P1[:, None, :]).sum(axis=2) + (basis.polarizations * P2[:, None, :]).sum(axis=2)
    return out.ravel()


def chi_trace(basis, ell, m, point, normal, Z=1.0):
    """Incoming trace of one adjoint basis function at one point."""
    return trace_values(basis, point, normal, Z, "chi")[0, 2 * ell + m]


def fk_trace(basis, ell, m, point, normal, Z=1.0):
    """Outgoing trace of one adjoint basis function at one point."""
    return trace_values(basis, point, normal, Z, "F")[0, 2 * ell + m]


def element_field(basis: PlaneWaveBasis, coefficients, points) -> np.ndarray:
    """E(x) = sum_j c_j A_j exp(i k d_j . (x - x0)) at points, (n, 3)."""
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (basis.size,):
        raise ValueError(f"expected {basis.size} coefficients, got {c.shape}")
    ph = np.repeat(basis.phases(points, adjoint=False), 2, axis=1)
    return (ph * c) @ basis.A


def element_curl(basis: PlaneWaveBasis, coefficients, points) -> np.ndarray:
    """curl E at points for the field of :func:`element_field`."""
    c = np.asarray(coefficients, dtype=complex)
    ph = np.repeat(basis.phases(points, adjoint=False), 2, axis=1)
    curl = 1j * basis.k_elem * np.cross(basis.d, basis.A)
    return (ph * c) @ curl


# ---------------------------------------------------------------------------
# direction-count calibration

REFERENCE_ELEMENTS = {
    "tetra": np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float),
    "wedge": np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [0, 1, 1]], dtype=float),
    "hexa": np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                      [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float),
}


def reference_mesh(kind: str, scale: float = 1.0) -> Mesh:
    from .mesh import build_topology

    verts = REFERENCE_ELEMENTS[kind] * scale
    return build_topology([(kind, list(range(len(verts))), 0)], verts)


def reference_condition(kind: str, kappa_h: float, p: int) -> float:
    """2-norm condition number of the D block on the reference element."""
    from .assembly import element_D

    mesh = reference_mesh(kind)
    el = mesh.elements[0]
    kappa = kappa_h / el.h_av
    b = make_basis(el, mesh.materials[0], kappa, p)
    s = np.linalg.svd(element_D(mesh, b), compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else np.inf


def max_directions(kind: str, kappa_h: float, tolerance: float, p_max: int = 400) -> int:
    """Largest p whose reference D block satisfies cond <= tolerance."""
    lo = 1
    if reference_condition(kind, kappa_h, lo) > tolerance:
        return 0
    hi = lo
    while hi < p_max and reference_condition(kind, kappa_h, hi) <= tolerance:
        lo, hi = hi, min(2 * hi, p_max)
    if hi == lo:
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reference_condition(kind, kappa_h, mid) <= tolerance:
            lo = mid
        else:
            hi = mid
    return lo


def calibrate_direction_polynomial(kind: str, tolerance: float, sweep=None):
    """Fit N(x) = a x^2 + b x + c to the largest admissible p on a sweep.

    The fit is a least-squares fit with the constraint c >= 4.  Returns
    ``(a, b, c), xs, ps``.
    """
    xs = np.asarray(sweep if sweep is not None else np.linspace(0.5, 6.0, 8), dtype=float)
    ps = np.array([max_directions(kind, x, tolerance) for x in xs], dtype=float)
    if len(xs) < 3:
        raise ValueError("calibration sweep needs at least three points")
    V = np.column_stack([xs**2, xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(V, ps, rcond=None)
    if coef[2] < 4.0:
        ab, *_ = np.linalg.lstsq(V[:, :2], ps - 4.0, rcond=None)
        coef = np.array([ab[0], ab[1], 4.0])
    return tuple(float(c) for c in coef), xs, ps.astype(int)
