"""Assembly of the block operators D, C and the source vector b.

Every integral has the form ``int_F Z u_j . conj(v_i) dA`` where ``u`` and
``v`` are traces of plane-wave families.  On flat faces the product of two
plane waves is integrated exactly; curved faces use Duffy quadrature.
Blocks are indexed with test functions along rows and trial functions
along columns.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .basis import PlaneWaveBasis, trace_amplitudes, trace_field, trace_project
from .mesh import Boundary, Interior, Mesh, MeshError, Resistive, SourceKind, TriFace, TSInterface
from .oracle import PlaneWave
from .quadrature import default_order, face_quadrature, outer_divided_difference


class AssemblyError(RuntimeError):
    pass


def z_impedance(face: TriFace, mesh: Mesh) -> float:
    """Face impedance sqrt(mu_hat) / sqrt(eps_hat) from the incident materials."""
    m1 = mesh.material(face.owner[0])
    if face.neighbor is None:
        eps = abs(complex(m1.eps_r))
        mu = abs(complex(m1.mu_r))
    else:
        m2 = mesh.material(face.neighbor[0])
        eps = np.sqrt(abs(complex(m1.eps_r)) * abs(complex(m2.eps_r)))
        mu = np.sqrt(abs(complex(m1.mu_r)) * abs(complex(m2.mu_r)))
    if eps == 0.0 or mu == 0.0:
        raise AssemblyError(f"zero material parameter at face {face.id}")
    return float(np.sqrt(mu) / np.sqrt(eps))


# ---------------------------------------------------------------------------
# trace families


@dataclass(frozen=True, eq=False)
class TraceFamily:
    """Traces ``amplitude(normals, Z)[:, j] * exp(i q_l . (x - origin))``.

    Function ``j`` uses wave vector ``q[j // repeat]``.
    """

    wavevectors: np.ndarray  # (p, 3) complex
    origin: np.ndarray
    repeat: int
    amplitude: Callable[[np.ndarray, float], np.ndarray]  # -> (n, m, 3)
    kappa_abs: float

    @property
    def size(self) -> int:
        return self.repeat * len(self.wavevectors)

    def phases(self, points) -> np.ndarray:
        ph = np.exp(1j * ((np.atleast_2d(points) - self.origin) @ self.wavevectors.T))
        return np.repeat(ph, self.repeat, axis=1) if self.repeat > 1 else ph

    def values(self, points, normals, Z) -> np.ndarray:
        return self.amplitude(normals, Z) * self.phases(points)[:, :, None]


def basis_family(basis: PlaneWaveBasis, kind: str, orientation: int = 1, scale: complex = 1.0,
                 adjoint: bool = True) -> TraceFamily:
    """Traces of the plane waves of ``basis``; ``orientation=-1`` flips the face normal.

    The adjoint family spans the unknowns and test functions; the original
    family (``adjoint=False``) rebuilds fields.
    """

    def amp(normals, Z):
        return scale * trace_amplitudes(basis, orientation * np.atleast_2d(normals), Z, kind, adjoint)

    return TraceFamily(basis.wavevectors(adjoint), basis.centroid, 2, amp, basis.kappa_abs)


def incident_amplitudes(incident: PlaneWave, normals, Z, kind: str = "F") -> np.ndarray:
    """Vacuum traces of the incident wave without its phase, (n, 1, 3).

    ``kind="F"`` gives ``nu x curl E + (i kappa / Z) E_T``, ``kind="chi"``
    gives ``-nu x curl E + (i kappa / Z) E_T``.
    """
    nu = np.atleast_2d(normals)
    Z = np.broadcast_to(np.asarray(Z, dtype=float), (len(nu),))
    p = incident.polarization
    curl = 1j * incident.kappa * np.cross(incident.direction, p)
    ncurl = np.cross(nu, curl)
    p_t = p[None, :] - (nu @ p)[:, None] * nu
    sign = 1.0 if kind == "F" else -1.0
    return (sign * ncurl + (1j * incident.kappa / Z)[:, None] * p_t)[:, None, :]


def incident_trace(point, normal, Z, incident: PlaneWave) -> np.ndarray:
    """Source trace ``nu x curl E^i + (i kappa / Z) E^i_T`` at one point."""
    amp = incident_amplitudes(incident, normal, Z, "F")[0, 0]
    return amp * np.exp(1j * incident.kappa * np.dot(incident.direction, point))


def incident_family(incident: PlaneWave, orientation: int = 1, Q: complex = 0.0, scale: complex = 1.0) -> TraceFamily:
    """Source trace ``scale * (F(E^i) - Q chi(E^i))`` of the incident wave."""

    def amp(normals, Z):
        nu = orientation * np.atleast_2d(normals)
        out = incident_amplitudes(incident, nu, Z, "F")
        if Q != 0.0:
            out = out - Q * incident_amplitudes(incident, nu, Z, "chi")
        return scale * out

    q = (incident.kappa * incident.direction)[None, :].astype(complex)
    return TraceFamily(q, np.zeros(3), 1, amp, incident.kappa)


# ---------------------------------------------------------------------------
# face integrals


def face_integral(face: TriFace, Z: float, test: TraceFamily, trial: TraceFamily,
                  order: int | None = None, quadrature: bool = False) -> np.ndarray:
    """Matrix of ``int_F Z trial_j . conj(test_i) dA``, shape (test.size, trial.size)."""
    if face.curved is None and not quadrature:
        return _flat_integral(face, Z, test, trial)
    n = order if order is not None else default_order(max(test.kappa_abs, trial.kappa_abs), face.diameter)
    pos, w, nrm = face_quadrature(face, n)
    T = test.values(pos, nrm, Z)
    S = T if trial is test else trial.values(pos, nrm, Z)
    # sum over points and components as one matrix product
    Tm = T.transpose(1, 0, 2).reshape(T.shape[1], -1)
    Sm = (S * (Z * w)[:, None, None]).transpose(1, 0, 2).reshape(S.shape[1], -1)
    return Tm.conj() @ Sm.T


def _flat_integral(face: TriFace, Z: float, test: TraceFamily, trial: TraceFamily) -> np.ndarray:
    av = face.area_vector
    area = np.linalg.norm(av)
    if area == 0.0:
        return np.zeros((test.size, trial.size), dtype=complex)
    nrm = (av / area)[None, :]
    at = test.amplitude(nrm, Z)[0]
    as_ = trial.amplitude(nrm, Z)[0]
    G = at.conj() @ as_.T
    v = face.corners
    Ps = 1j * ((v - trial.origin) @ trial.wavevectors.T)  # (3, p_s)
    Pt = -1j * ((v - test.origin) @ test.wavevectors.conj().T)  # (3, p_t)
    dd = outer_divided_difference(Pt, Ps)
    if test.repeat > 1:
        dd = np.repeat(dd, test.repeat, axis=0)
    if trial.repeat > 1:
        dd = np.repeat(dd, trial.repeat, axis=1)
    return (2.0 * area * Z) * G * dd


# ---------------------------------------------------------------------------
# operators


@dataclass
class SystemOperators:
    D: list  # dense Hermitian blocks per element
    C: dict  # (test element, trial element) -> dense block
    b: np.ndarray
    offsets: np.ndarray  # start index of each element's unknowns
    quadrature_order: int | None = None
    force_quadrature: bool = False

    @property
    def n_dof(self) -> int:
        return int(self.offsets[-1])

    def block_slice(self, e: int) -> slice:
        return slice(int(self.offsets[e]), int(self.offsets[e + 1]))

    def C_nbytes(self) -> int:
        return sum(blk.nbytes for blk in self.C.values())

    def C_dense(self) -> np.ndarray:
        n = self.n_dof
        out = np.zeros((n, n), dtype=complex)
        for (i, j), blk in self.C.items():
            out[self.block_slice(i), self.block_slice(j)] += blk
        return out

    def D_dense(self) -> np.ndarray:
        n = self.n_dof
        out = np.zeros((n, n), dtype=complex)
        for e, blk in enumerate(self.D):
            out[self.block_slice(e), self.block_slice(e)] = blk
        return out


def dof_offsets(bases) -> np.ndarray:
    return np.concatenate([[0], np.cumsum([b.size for b in bases])]).astype(np.int64)


def element_D(mesh: Mesh, basis: PlaneWaveBasis, order: int | None = None, quadrature: bool = False) -> np.ndarray:
    """Gram block ``int_{dK} Z chi_j . conj(chi_i)`` of one element."""
    e = basis.element_id
    out = np.zeros((basis.size, basis.size), dtype=complex)
    for fid in mesh.element_faces[e]:
        face = mesh.faces[fid]
        fam = basis_family(basis, "chi", face.side(e))
        out += face_integral(face, z_impedance(face, mesh), fam, fam, order, quadrature)
    return 0.5 * (out + out.conj().T)


def element_outgoing_gram(mesh: Mesh, basis: PlaneWaveBasis, order: int | None = None,
                          quadrature: bool = False) -> np.ndarray:
    """Gram block of the outgoing (F) traces; equals :func:`element_D` by the isometry."""
    e = basis.element_id
    out = np.zeros((basis.size, basis.size), dtype=complex)
    for fid in mesh.element_faces[e]:
        face = mesh.faces[fid]
        fam = basis_family(basis, "F", face.side(e))
        out += face_integral(face, z_impedance(face, mesh), fam, fam, order, quadrature)
    return 0.5 * (out + out.conj().T)


def assemble_D(mesh: Mesh, bases, order: int | None = None, quadrature: bool = False,
               threads: int = 1) -> list[np.ndarray]:
    def one(b):
        return element_D(mesh, b, order, quadrature)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, bases))
    return [one(b) for b in bases]


def assemble_C_interior(face: TriFace, mesh: Mesh, bases, order=None, quadrature=False,
                        weights=(1.0, 0.0)) -> list[tuple[int, int, np.ndarray]]:
    """Coupling blocks of an interior face.

    The neighbor trace seen by each side is ``a chi_other + c chi_self`` with
    ``(a, c) = weights``; plain continuity is ``(1, 0)``.
    """
    if face.neighbor is None:
        raise AssemblyError(f"face {face.id} has no neighbor")
    return _blocks_from_terms(face, mesh, bases, _interior_terms(face, weights), order, quadrature)


def _interior_terms(face: TriFace, weights) -> list:
    a, c = weights
    k1, k2 = face.owner[0], face.neighbor[0]
    out = []
    for k, kp, s in ((k1, k2, 1), (k2, k1, -1)):
        if a != 0.0:
            out.append((k, s, kp, -s, a))
        if c != 0.0:
            out.append((k, s, k, s, c))
    return out


def coupling_terms(face: TriFace, mesh: Mesh) -> list:
    """Terms (test element, its orientation, trial element, its orientation, weight) of a face."""
    tag = face.tag
    if isinstance(tag, Boundary):
        e = face.owner[0]
        return [] if tag.Q == 0.0 else [(e, 1, e, 1, tag.Q)]
    if face.neighbor is None:
        raise AssemblyError(f"face {face.id} has no neighbor")
    if isinstance(tag, Resistive):
        w = resistive_weight(tag.eta, z_impedance(face, mesh))
        return _interior_terms(face, (1.0 - w, -w))
    if isinstance(tag, (Interior, TSInterface)):
        return _interior_terms(face, (1.0, 0.0))
    raise AssemblyError(f"unknown tag {tag!r} on face {face.id}")


def _blocks_from_terms(face, mesh, bases, terms, order, quadrature) -> list:
    Z = z_impedance(face, mesh)
    out = []
    for k, s, kp, sp, wgt in terms:
        test = basis_family(bases[k], "F", s)
        trial = basis_family(bases[kp], "chi", sp)
        out.append((k, kp, wgt * face_integral(face, Z, test, trial, order, quadrature)))
    return out


def resistive_weight(eta: complex, Z: float) -> complex:
    den = 2.0 / Z + eta
    if abs(den) < 1e-12:
        raise AssemblyError(f"resistive sheet singular: 2/Z + eta = {den}")
    return eta / den


def assemble_resistive(face: TriFace, mesh: Mesh, bases, eta: complex, order=None, quadrature=False):
    """Blocks of a resistive-sheet face; the sheet couples with weight ``w = eta / (2/Z + eta)``."""
    w = resistive_weight(complex(eta), z_impedance(face, mesh))
    return assemble_C_interior(face, mesh, bases, order, quadrature, weights=(1.0 - w, -w))


def assemble_C_boundary(face: TriFace, mesh: Mesh, basis: PlaneWaveBasis, Q: complex, order=None,
                        quadrature=False) -> np.ndarray:
    """Diagonal contribution ``Q int Z chi_j . conj(F_i)`` of a boundary face."""
    if abs(Q) > 1.0 + 1e-14:
        raise AssemblyError(f"impedance parameter violates |Q| <= 1 (got {abs(Q):g})")
    if Q == 0.0:
        return np.zeros((basis.size, basis.size), dtype=complex)
    Z = z_impedance(face, mesh)
    test = basis_family(basis, "F", 1)
    return Q * face_integral(face, Z, test, basis_family(basis, "chi", 1), order, quadrature)


def rhs_boundary(face: TriFace, mesh: Mesh, basis: PlaneWaveBasis, source: TraceFamily, order=None,
                 quadrature=False) -> np.ndarray:
    """Entries ``int Z g . conj(F_i)`` for a source trace ``g`` on a boundary face."""
    Z = z_impedance(face, mesh)
    test = basis_family(basis, "F", face.side(basis.element_id))
    return face_integral(face, Z, test, source, order, quadrature)[:, 0]


def boundary_source(tag: Boundary, incident: PlaneWave | None) -> TraceFamily | None:
    """Source trace for a boundary tag, or None when there is none."""
    if tag.source is SourceKind.NONE or incident is None:
        return None
    if tag.source is SourceKind.INCIDENT:
        # the total field equals the incident wave on the boundary
        return incident_family(incident, 1, tag.Q)
    # scattered field on a conductor: g = -2 i kappa E^i_T / Z
    return incident_family(incident, 1, tag.Q, scale=-1.0)


def assemble_ts_interface(face: TriFace, mesh: Mesh, bases, incident: PlaneWave | None, order=None,
                          quadrature=False):
    """Coupling blocks and source entries of a total/scattered interface face.

    Returns ``(blocks, sources)`` with ``sources`` a list of (element, vector).
    """
    if face.neighbor is None:
        raise AssemblyError(f"total/scattered interface on boundary face {face.id}")
    blocks = assemble_C_interior(face, mesh, bases, order, quadrature)
    if incident is None:
        return blocks, []
    Z = z_impedance(face, mesh)
    k_plus = face.tag.scattered_side
    k_minus = face.other(k_plus)
    if k_minus is None:
        raise AssemblyError(f"scattered side {k_plus} is not incident to face {face.id}")
    sources = []
    for k, scale in ((k_minus, 1.0), (k_plus, -1.0)):
        s = face.side(k)
        g = incident_family(incident, s, 0.0, scale)
        test = basis_family(bases[k], "F", s)
        sources.append((k, face_integral(face, Z, test, g, order, quadrature)[:, 0]))
    return blocks, sources


def face_blocks(face: TriFace, mesh: Mesh, bases, order=None, quadrature=False) -> list:
    """All coupling blocks contributed by one face as (test, trial, block)."""
    return _blocks_from_terms(face, mesh, bases, coupling_terms(face, mesh), order, quadrature)


def face_apply(face: TriFace, mesh: Mesh, bases, x, offsets, order=None, quadrature=False) -> list:
    """Contributions (test element, vector) of one face to C x, without storing blocks.

    Flat faces build their closed-form blocks and discard them.  Curved
    faces evaluate the trial traces at the quadrature points and project
    them onto the test traces directly.
    """
    terms = coupling_terms(face, mesh)
    if not terms:
        return []
    if face.curved is None and not quadrature:
        return [(k, blk @ x[offsets[kp]:offsets[kp + 1]])
                for k, kp, blk in _blocks_from_terms(face, mesh, bases, terms, order, quadrature)]
    Z = z_impedance(face, mesh)
    elems = sorted({t[0] for t in terms} | {t[2] for t in terms})
    n = order if order is not None else default_order(max(bases[e].kappa_abs for e in elems), face.diameter)
    pos, w, nrm = face_quadrature(face, n)
    ph = {e: bases[e].phases(pos) for e in elems}
    fields = {}
    tests: dict = {}
    for k, s, kp, sp, wgt in terms:
        if (kp, sp) not in fields:
            fields[kp, sp] = trace_field(bases[kp], x[offsets[kp]:offsets[kp + 1]], sp * nrm, Z, ph[kp], "chi")
        tests[k, s] = tests.get((k, s), 0.0) + wgt * fields[kp, sp]
    return [(k, trace_project(bases[k], v, Z * w, s * nrm, Z, ph[k], "F")) for (k, s), v in tests.items()]


def face_sources(face: TriFace, mesh: Mesh, bases, incident: PlaneWave | None, order=None,
                 quadrature=False) -> list:
    tag = face.tag
    if incident is None:
        return []
    if isinstance(tag, Boundary):
        src = boundary_source(tag, incident)
        if src is None:
            return []
        e = face.owner[0]
        return [(e, rhs_boundary(face, mesh, bases[e], src, order, quadrature))]
    if isinstance(tag, TSInterface):
        return assemble_ts_interface(face, mesh, bases, incident, order, quadrature)[1]
    return []


def _check_tags(mesh: Mesh) -> None:
    errors = []
    for f in mesh.faces:
        if isinstance(f.tag, (Resistive, TSInterface, Interior)) and f.neighbor is None:
            errors.append(f"face {f.id}: {type(f.tag).__name__} tag on a boundary face")
        if isinstance(f.tag, Boundary) and f.neighbor is not None:
            errors.append(f"face {f.id}: boundary tag on an interior face")
        if isinstance(f.tag, TSInterface) and f.neighbor is not None:
            if f.tag.scattered_side not in (f.owner[0], f.neighbor[0]):
                errors.append(f"face {f.id}: scattered side {f.tag.scattered_side} not incident")
    if errors:
        raise AssemblyError("inconsistent face tags:\n  " + "\n  ".join(errors))


def apply_C(mesh: Mesh, bases, x, offsets=None, order=None, quadrature=False, threads: int = 1) -> np.ndarray:
    """C x regenerated face by face; accumulation follows the face order."""
    offsets = dof_offsets(bases) if offsets is None else offsets
    y = np.zeros(int(offsets[-1]), dtype=complex)

    def one(f):
        return face_apply(f, mesh, bases, x, offsets, order, quadrature)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = ex.map(one, mesh.faces)
            for contrib in parts:
                for k, vec in contrib:
                    y[offsets[k]:offsets[k + 1]] += vec
    else:
        for f in mesh.faces:
            for k, vec in one(f):
                y[offsets[k]:offsets[k + 1]] += vec
    return y


def iter_face_blocks(mesh: Mesh, bases, order=None, quadrature=False, threads: int = 1) -> Iterator:
    """Yield the coupling blocks face by face in a fixed order."""
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            for blocks in ex.map(lambda f: face_blocks(f, mesh, bases, order, quadrature), mesh.faces):
                yield from blocks
    else:
        for f in mesh.faces:
            yield from face_blocks(f, mesh, bases, order, quadrature)


def assemble_rhs(mesh: Mesh, bases, incident: PlaneWave | None, order=None, quadrature=False) -> np.ndarray:
    offsets = dof_offsets(bases)
    b = np.zeros(int(offsets[-1]), dtype=complex)
    for f in mesh.faces:
        for e, vec in face_sources(f, mesh, bases, incident, order, quadrature):
            b[offsets[e]:offsets[e + 1]] += vec
    return b


def assemble_all(mesh: Mesh, bases, incident: PlaneWave | None = None, order: int | None = None,
                 quadrature: bool = False, store_C: bool = True, threads: int = 1) -> SystemOperators:
    """D blocks, coupling blocks (unless ``store_C`` is False) and source vector."""
    if len(bases) != mesh.n_elements:
        raise AssemblyError("one basis per element required")
    _check_tags(mesh)
    D = assemble_D(mesh, bases, order, quadrature, threads)
    C: dict = {}
    if store_C:
        for i, j, blk in iter_face_blocks(mesh, bases, order, quadrature, threads):
            if (i, j) in C:
                C[i, j] += blk
            else:
                C[i, j] = blk.copy()
    b = assemble_rhs(mesh, bases, incident, order, quadrature)
    return SystemOperators(D, C, b, dof_offsets(bases), order, quadrature)
