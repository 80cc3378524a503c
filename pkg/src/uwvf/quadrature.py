"""Quadrature on the reference triangle and on (possibly curved) mesh faces.

The reference triangle has corners (0, 0), (1, 0) and (0, 1) in the
(s, t) plane.  Curved faces are integrated with a collapsed (Duffy)
tensor rule built from a Jacobi rule in ``s`` and a Gauss-Legendre rule
in the collapsed coordinate, so every weight is positive.  Flat faces
carrying products of plane waves are integrated in closed form with a
divided difference of the exponential.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

# below this phase separation the divided differences switch to Taylor series
PHASE_SWITCH = 1e-4
_TAYLOR_TERMS = 6


class DegenerateFaceError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, 2) reference coordinates (s, t)
    weights: np.ndarray  # (n,)

    def __len__(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def _gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on (0, 1); exact to degree 2n - 1."""
    if n < 1:
        raise ValueError("quadrature order must be at least 1")
    return _gauss_legendre_01(int(n))


@lru_cache(maxsize=None)
def _jacobi_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    # weight (1 - x) on (-1, 1) maps to 4 (1 - s) on (0, 1)
    x, w = roots_jacobi(n, 1.0, 0.0)
    nodes = 0.5 * (x + 1.0)
    weights = 0.25 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def jacobi_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi rule for the weight (1 - s) on (0, 1).

    ``sum(w * p(x))`` equals the integral of ``(1 - s) p(s)`` for every
    polynomial ``p`` of degree at most ``2n - 1``.
    """
    if n < 1:
        raise ValueError("quadrature order must be at least 1")
    return _jacobi_01(int(n))


@lru_cache(maxsize=None)
def duffy_rule(n: int) -> QuadratureRule:
    """Collapsed tensor rule with ``n**2`` points on the reference triangle."""
    xj, wj = jacobi_01(n)
    tg, wg = gauss_legendre_01(n)
    s = np.repeat(xj, n)
    t = np.tile(tg, n) * (1.0 - s)
    w = np.outer(wj, wg).ravel()
    pts = np.column_stack([s, t])
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w)


def _self_check(max_order: int = 8) -> None:
    for n in range(1, max_order + 1):
        x, w = gauss_legendre_01(n)
        for deg in range(2 * n):
            assert abs(w @ x**deg - 1.0 / (deg + 1)) < 1e-13
        x, w = jacobi_01(n)
        for deg in range(2 * n):
            exact = 1.0 / ((deg + 1) * (deg + 2))
            assert abs(w @ x**deg - exact) < 1e-13


_self_check()


# ---------------------------------------------------------------------------
# face maps


def shape_functions(s, t) -> np.ndarray:
    """The six quadratic nodal functions, ordered (1, 2, 3, 12, 23, 13).

    Vertex 2 sits at (s, t) = (1, 0) and vertex 3 at (0, 1).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    u = 1.0 - s - t
    return np.stack(
        [u * (1.0 - 2.0 * s - 2.0 * t), s * (2.0 * s - 1.0), t * (2.0 * t - 1.0),
         4.0 * s * u, 4.0 * s * t, 4.0 * t * u]
    )


def _shape_derivatives(s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    u = 1.0 - s - t
    one = np.ones_like(s)
    ds = np.stack([-(3.0 - 4.0 * s - 4.0 * t) * one, 4.0 * s - 1.0, 0.0 * one,
                   4.0 * (u - s), 4.0 * t, -4.0 * t])
    dt = np.stack([-(3.0 - 4.0 * s - 4.0 * t) * one, 0.0 * one, 4.0 * t - 1.0,
                   -4.0 * s, 4.0 * s, 4.0 * (u - t)])
    return ds, dt


def map_points(corners, s, t, midpoints=None):
    """Evaluate a flat or quadratic face map.

    ``corners`` is (3, 3) with the vertices in map order, ``midpoints``
    an optional (3, 3) array holding the nodes for edges 12, 23 and 13.
    Returns positions (n, 3), Jacobian norms (n,) and unit normals (n, 3).
    """
    corners = np.asarray(corners, dtype=float)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if midpoints is None:
        e1 = corners[1] - corners[0]
        e2 = corners[2] - corners[0]
        pos = corners[0] + np.outer(s, e1) + np.outer(t, e2)
        cr = np.cross(e1, e2)
        jac = np.full(s.shape, np.linalg.norm(cr))
        nrm = np.broadcast_to(cr / jac[0] if jac.size and jac[0] > 0 else cr, pos.shape)
        scale = max(np.linalg.norm(e1), np.linalg.norm(e2)) ** 2
    else:
        nodes = np.vstack([corners, np.asarray(midpoints, dtype=float)])
        phi = shape_functions(s, t)
        ds, dt = _shape_derivatives(s, t)
        pos = phi.T @ nodes
        cr = np.cross(ds.T @ nodes, dt.T @ nodes)
        jac = np.linalg.norm(cr, axis=1)
        nrm = cr / np.where(jac > 0, jac, 1.0)[:, None]
        scale = np.max(np.linalg.norm(nodes - nodes.mean(axis=0), axis=1)) ** 2
    if np.any(jac < 1e-14 * scale) or scale == 0.0:
        raise DegenerateFaceError("face map has a degenerate Jacobian")
    return pos, jac, np.array(nrm)


def map_face(face, s, t):
    """Map reference coordinates onto a mesh face (see :func:`map_points`)."""
    mids = None if face.curved is None else face.curved.midpoints
    return map_points(face.corners, s, t, mids)


def face_quadrature(face, n: int):
    """Physical quadrature points, weights (Jacobian included) and normals."""
    rule = duffy_rule(n)
    pos, jac, nrm = map_face(face, rule.points[:, 0], rule.points[:, 1])
    return pos, rule.weights * jac, nrm


def integrate_face(face, integrand, n: int):
    """Integrate ``integrand(positions, normals)`` over a face.

    The integrand receives (m, 3) arrays and returns an array whose first
    axis runs over the m points.
    """
    pos, w, nrm = face_quadrature(face, n)
    vals = np.asarray(integrand(pos, nrm))
    return np.tensordot(w, vals, axes=(0, 0))


def default_order(kappa_abs: float, diameter: float) -> int:
    """Quadrature order for basis products on a curved face."""
    return max(6, int(np.ceil(kappa_abs * diameter)) + 4)


# ---------------------------------------------------------------------------
# closed form integrals of exponentials on flat triangles


def _phi1(z):
    """(exp(z) - 1) / z with a series near the origin."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < PHASE_SWITCH
    zs = np.where(small, 1.0, z)
    out = np.expm1(zs) / zs
    if np.any(small):
        zt = z[small]
        ser = np.zeros_like(zt)
        for n in range(_TAYLOR_TERMS - 1, -1, -1):
            ser = ser * zt / (n + 2) + 1.0
        out[small] = ser
    return out


def _complete_homogeneous(x, y, z, n):
    out = np.zeros_like(x)
    for i in range(n + 1):
        for j in range(n - i + 1):
            out = out + x**i * y**j * z ** (n - i - j)
    return out


def exp_divided_difference(a, b, c):
    """Second divided difference of exp at three complex nodes (vectorised)."""
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (a, b, c)))
    a = a.ravel()
    b = b.ravel()
    c = c.ravel()
    shape_out = np.broadcast(a, b, c).shape
    d_bc = np.abs(b - c)
    d_ac = np.abs(a - c)
    d_ab = np.abs(a - b)
    # relabel so that (b, c) is the most separated pair; a is the pivot
    pivot = np.where((d_ac >= d_bc) & (d_ac >= d_ab), b, np.where(d_ab >= d_bc, c, a))
    lo = np.where((d_ac >= d_bc) & (d_ac >= d_ab), a, np.where(d_ab >= d_bc, a, b))
    hi = np.where((d_ac >= d_bc) & (d_ac >= d_ab), c, np.where(d_ab >= d_bc, b, c))
    spread = np.maximum(np.maximum(d_ab, d_ac), d_bc)
    out = np.empty(shape_out, dtype=complex)

    far = spread >= PHASE_SWITCH
    if np.any(far):
        p, l, h = pivot[far], lo[far], hi[far]
        out[far] = np.exp(p) * (_phi1(h - p) - _phi1(l - p)) / (h - l)
    near = ~far
    if np.any(near):
        m = (a[near] + b[near] + c[near]) / 3.0
        x, y, z = a[near] - m, b[near] - m, c[near] - m
        ser = np.zeros_like(m)
        for n in range(_TAYLOR_TERMS):
            ser = ser + _complete_homogeneous(x, y, z, n) / factorial(n + 2)
        out[near] = np.exp(m) * ser
    return out


SEPARATION = 0.1


def outer_divided_difference(P, S) -> np.ndarray:
    """Divided differences at nodes ``P[:, i] + S[:, j]`` for all pairs, shape (nP, nS).

    The exponentials factor as ``exp(P) exp(S)``, so well separated nodes
    need only O(nP + nS) exponentials.  Pairs with any two nodes closer
    than ``SEPARATION`` go through :func:`exp_divided_difference`.
    """
    P = np.asarray(P, dtype=complex)
    S = np.asarray(S, dtype=complex)
    eP = np.exp(P)
    eS = np.exp(S)
    a = P[0][:, None] + S[0][None, :]
    b = P[1][:, None] + S[1][None, :]
    c = P[2][:, None] + S[2][None, :]
    ab, bc, ca = a - b, b - c, c - a
    close = (np.abs(ab) < SEPARATION) | (np.abs(bc) < SEPARATION) | (np.abs(ca) < SEPARATION)
    safe_ab = np.where(close, 1.0, ab)
    safe_bc = np.where(close, 1.0, bc)
    safe_ca = np.where(close, 1.0, ca)
    ea = np.outer(eP[0], eS[0])
    eb = np.outer(eP[1], eS[1])
    ec = np.outer(eP[2], eS[2])
    # symmetric form of the second divided difference
    out = -(ea * bc + eb * ca + ec * ab) / (safe_ab * safe_bc * safe_ca)
    if np.any(close):
        out[close] = exp_divided_difference(a[close], b[close], c[close])
    return out


def closed_form_flat(vertices, k) -> np.ndarray:
    """Exact integral of ``exp(i k . x)`` over a flat triangle.

    ``vertices`` is (3, 3); ``k`` is a complex vector of shape (..., 3).
    The result has the leading shape of ``k``.
    """
    v = np.asarray(vertices, dtype=float)
    k = np.asarray(k, dtype=complex)
    area2 = np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0]))
    ph = 1j * (k @ v.T)  # (..., 3)
    lead = ph.shape[:-1]
    dd = exp_divided_difference(ph[..., 0], ph[..., 1], ph[..., 2])
    return area2 * dd.reshape(lead)
