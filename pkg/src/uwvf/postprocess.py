"""Field reconstruction, far-field patterns, bistatic RCS and error scores."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from .assembly import basis_family, face_integral, z_impedance
from .basis import element_curl, element_field
from .mesh import Mesh, MeshError, TSInterface
from .oracle import PlaneWave
from .quadrature import default_order, face_quadrature


# ---------------------------------------------------------------------------
# coefficients and regions


def split_solution(chi, offsets) -> list[np.ndarray]:
    return [chi[offsets[e]:offsets[e + 1]] for e in range(len(offsets) - 1)]


def recover_coefficients(mesh: Mesh, bases, chi, D_blocks=None) -> list[np.ndarray]:
    """Plane-wave field coefficients on every element from the trace unknowns.

    The field coefficients minimise the Z-weighted boundary misfit between
    the incoming trace of the rebuilt field and the computed trace.  In
    lossless elements the two plane-wave families coincide and the
    coefficients are the unknowns themselves.
    """
    offsets = np.concatenate([[0], np.cumsum([b.size for b in bases])])
    out = []
    for e, b in enumerate(bases):
        x = chi[offsets[e]:offsets[e + 1]]
        if b.lossless:
            out.append(np.array(x, dtype=complex))
            continue
        M = np.zeros((b.size, b.size), dtype=complex)
        R = np.zeros((b.size, b.size), dtype=complex)
        for fid in mesh.element_faces[e]:
            face = mesh.faces[fid]
            s = face.side(e)
            Z = z_impedance(face, mesh)
            orig = basis_family(b, "chi", s, adjoint=False)
            M += face_integral(face, Z, orig, orig)
            R += face_integral(face, Z, orig, basis_family(b, "chi", s))
        M = 0.5 * (M + M.conj().T)
        out.append(sla.cho_solve(sla.cho_factor(M), R @ x))
    return out


def scattered_elements(mesh: Mesh, default: bool) -> np.ndarray:
    """Flag the elements that carry the scattered field.

    Without total/scattered interfaces every element gets ``default``.
    Otherwise the scattered region is grown from the declared scattered
    sides without crossing interface faces.
    """
    seeds = [f.tag.scattered_side for f in mesh.faces if isinstance(f.tag, TSInterface)]
    if not seeds:
        return np.full(mesh.n_elements, bool(default))
    flag = np.zeros(mesh.n_elements, dtype=bool)
    stack = list(seeds)
    while stack:
        e = stack.pop()
        if flag[e]:
            continue
        flag[e] = True
        for fid in mesh.element_faces[e]:
            f = mesh.faces[fid]
            if f.neighbor is None or isinstance(f.tag, TSInterface):
                continue
            o = f.other(e)
            if not flag[o]:
                stack.append(o)
    return flag


# ---------------------------------------------------------------------------
# point location


class PointLocator:
    """Find the element containing a point using its flat face planes."""

    def __init__(self, mesh: Mesh, k: int = 24):
        self.mesh = mesh
        cents = np.array([el.centroid for el in mesh.elements])
        self.tree = cKDTree(cents)
        self.k = min(k, mesh.n_elements)
        self.planes = []
        self.size = []
        for e, el in enumerate(mesh.elements):
            n, c = [], []
            for fid in mesh.element_faces[e]:
                f = mesh.faces[fid]
                av = f.side(e) * f.area_vector
                nv = av / np.linalg.norm(av)
                n.append(nv)
                c.append(nv @ f.corners[0])
            self.planes.append((np.array(n), np.array(c)))
            pts = mesh.vertices[list(el.vertex_ids)]
            self.size.append(np.max(np.linalg.norm(pts - el.centroid, axis=1)))

    def violation(self, e: int, x) -> float:
        n, c = self.planes[e]
        return float(np.max(n @ x - c))

    def locate(self, points, rtol: float = 0.15) -> np.ndarray:
        pts = np.atleast_2d(points)
        _, cand = self.tree.query(pts, k=self.k)
        cand = np.atleast_2d(cand)
        out = np.empty(len(pts), dtype=np.int64)
        for i, x in enumerate(pts):
            viol = [self.violation(e, x) for e in cand[i]]
            j = int(np.argmin(viol))
            e = int(cand[i][j])
            # small positive violations are allowed near curved boundaries
            if viol[j] > rtol * self.size[e]:
                raise MeshError(f"point {x} lies outside the mesh")
            out[i] = e
        return out


# ---------------------------------------------------------------------------
# field sampling


@dataclass
class FieldSample:
    positions: np.ndarray
    E: np.ndarray
    which: str
    elements: np.ndarray


def sample_field(mesh: Mesh, bases, coeffs, points, incident: PlaneWave | None = None,
                 which: str = "total", scattered=None, locator: PointLocator | None = None) -> FieldSample:
    """Evaluate the reconstructed field at points.

    ``coeffs`` are per-element field coefficients (see
    :func:`recover_coefficients`); ``scattered`` flags elements holding the
    scattered field.  The incident wave is added or removed so that the
    requested ``which`` field is returned.
    """
    if which not in ("total", "scattered"):
        raise ValueError("which must be 'total' or 'scattered'")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    loc = locator or PointLocator(mesh)
    elems = loc.locate(pts)
    E = np.zeros((len(pts), 3), dtype=complex)
    if scattered is None:
        scattered = np.zeros(mesh.n_elements, dtype=bool)
    for e in np.unique(elems):
        idx = np.nonzero(elems == e)[0]
        E[idx] = element_field(bases[e], coeffs[e], pts[idx])
        if incident is not None:
            if which == "total" and scattered[e]:
                E[idx] += incident(pts[idx])
            elif which == "scattered" and not scattered[e]:
                E[idx] -= incident(pts[idx])
    return FieldSample(pts, E, which, elems)


# ---------------------------------------------------------------------------
# far field


@dataclass
class FarFieldResult:
    angles: np.ndarray  # azimuth in degrees
    directions: np.ndarray
    pattern: np.ndarray  # (n, 3) complex
    rcs: np.ndarray | None = None
    rcs_db: np.ndarray | None = None


def azimuth_directions(angles_deg) -> np.ndarray:
    phi = np.deg2rad(np.asarray(angles_deg, dtype=float))
    return np.column_stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)])


def surface_from_faces(mesh: Mesh, face_ids, outer_elements) -> list[tuple[int, int]]:
    """Pair each face with the element whose field is integrated."""
    return [(int(f), int(e)) for f, e in zip(face_ids, outer_elements)]


def check_closed(mesh: Mesh, surface) -> None:
    total = np.zeros(3)
    scale = 0.0
    for fid, e in surface:
        av = mesh.faces[fid].area_vector
        total += av * mesh.faces[fid].side(e)
        scale += np.linalg.norm(av)
    if np.linalg.norm(total) > 1e-8 * max(scale, 1e-300):
        raise MeshError("far-field surface is not closed")


def far_field(mesh: Mesh, bases, coeffs, surface, directions, kappa: float, field=None,
              order: int | None = None, extra_order: int = 4) -> np.ndarray:
    """Far-field pattern of the field radiating from inside a closed surface.

    ``surface`` lists (face id, element id) pairs; the element lies outside
    the surface and carries the radiating field.  ``field`` optionally
    replaces the element expansion with a callable returning (E, curl E).
    """
    check_closed(mesh, surface)
    xhat = np.atleast_2d(np.asarray(directions, dtype=float))
    out = np.zeros((len(xhat), 3), dtype=complex)
    for fid, e in surface:
        face = mesh.faces[fid]
        n = order if order is not None else default_order(kappa, face.diameter) + extra_order
        pos, w, nrm = face_quadrature(face, n)
        # normal pointing away from the enclosed region
        nu = -face.side(e) * nrm
        if field is None:
            E = element_field(bases[e], coeffs[e], pos)
            curlE = element_curl(bases[e], coeffs[e], pos)
        else:
            E, curlE = field(pos)
        H = curlE / (1j * kappa)
        nxE = np.cross(nu, E)
        nxH = np.cross(nu, H)
        ph = np.exp(-1j * kappa * (pos @ xhat.T)) * w[:, None]  # (q, n)
        a = ph.T @ nxE  # (n, 3)
        bvec = ph.T @ nxH
        out += a + np.cross(bvec, xhat)
    return (1j * kappa / (4 * np.pi)) * np.cross(xhat, out)


def bistatic_rcs(pattern, polarization) -> tuple[np.ndarray, np.ndarray]:
    """sigma = 4 pi |E_inf|^2 / |p|^2 in m^2, with dBsm (-inf where sigma is 0)."""
    p2 = float(np.sum(np.abs(np.asarray(polarization)) ** 2))
    if p2 == 0.0:
        raise ValueError("incident polarization must be nonzero")
    sigma = 4 * np.pi * np.sum(np.abs(pattern) ** 2, axis=1) / p2
    with np.errstate(divide="ignore"):
        db = np.where(sigma > 0, 10 * np.log10(np.where(sigma > 0, sigma, 1.0)), -np.inf)
    return sigma, db


def rcs_l2_error(computed, reference) -> float:
    """Relative L2 error in percent on a common angle grid (linear sigma)."""
    c = np.asarray(computed, dtype=float)
    r = np.asarray(reference, dtype=float)
    if c.shape != r.shape:
        raise ValueError(f"angle grids differ: {c.shape} vs {r.shape}")
    return float(100.0 * np.linalg.norm(c - r) / np.linalg.norm(r))


# ---------------------------------------------------------------------------
# CSV output


def write_rcs_csv(path, angles, sigma, sigma_db=None) -> None:
    if sigma_db is None:
        with np.errstate(divide="ignore"):
            sigma_db = 10 * np.log10(sigma)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi_deg", "sigma_m2", "sigma_dB"])
        for a, s, d in zip(angles, sigma, sigma_db):
            w.writerow([f"{a:.10g}", f"{s:.17g}", f"{d:.17g}"])


def read_rcs_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    return np.atleast_1d(data["phi_deg"]), np.atleast_1d(data["sigma_m2"])


def write_field_csv(path, sample: FieldSample) -> None:
    E = sample.E
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "ReEx", "ImEx", "ReEy", "ImEy", "ReEz", "ImEz", "absE"])
        for x, e in zip(sample.positions, E):
            row = list(x) + [e[0].real, e[0].imag, e[1].real, e[1].imag, e[2].real, e[2].imag,
                             np.linalg.norm(e)]
            w.writerow([f"{v:.12g}" for v in row])


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
