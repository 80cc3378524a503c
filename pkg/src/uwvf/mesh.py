"""Unstructured meshes of tetrahedra, wedges and hexahedra.

Every element boundary is stored as a union of triangles.  Quadrilateral
faces are split along the diagonal that starts at their smallest global
vertex id, so both elements sharing a quad agree on the split.  Faces may
carry a quadratic map defined by one extra node per edge.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np


class MeshError(ValueError):
    pass


# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class Material:
    eps_r: complex = 1.0
    mu_r: complex = 1.0

    def __post_init__(self):
        if self.eps_r == 0 or self.mu_r == 0:
            raise MeshError("relative permittivity and permeability must be nonzero")
        object.__setattr__(self, "eps_r", complex(self.eps_r))
        object.__setattr__(self, "mu_r", complex(self.mu_r))


VACUUM = Material()


class SourceKind(enum.Enum):
    NONE = "none"
    INCIDENT = "incident"  # inject the incident plane wave (total field region)
    PEC = "pec"  # scattered field on a perfect conductor, g = -2 i k E^i_T / Z


@dataclass(frozen=True)
class Interior:
    pass


@dataclass(frozen=True)
class Boundary:
    Q: complex = 0.0
    source: SourceKind = SourceKind.NONE

    def __post_init__(self):
        object.__setattr__(self, "Q", complex(self.Q))
        object.__setattr__(self, "source", SourceKind(self.source))
        if abs(self.Q) > 1.0 + 1e-14:
            raise MeshError(f"impedance parameter violates |Q| <= 1 (got |Q| = {abs(self.Q):g})")


@dataclass(frozen=True)
class Resistive:
    eta: complex

    def __post_init__(self):
        object.__setattr__(self, "eta", complex(self.eta))


@dataclass(frozen=True)
class TSInterface:
    scattered_side: int


FaceTag = Interior | Boundary | Resistive | TSInterface

PEC = Boundary(-1.0, SourceKind.PEC)
ABSORBING = Boundary(0.0)


@dataclass(frozen=True, eq=False)
class CurvedFaceMap:
    midpoints: np.ndarray  # (3, 3): nodes on edges 12, 23, 13


@dataclass(frozen=True, eq=False)
class Element:
    id: int
    kind: str
    vertex_ids: tuple[int, ...]
    material_id: int
    centroid: np.ndarray
    h_av: float


@dataclass(frozen=True, eq=False)
class TriFace:
    id: int
    vertex_ids: tuple[int, int, int]
    corners: np.ndarray  # (3, 3), ordered so the normal points out of the owner
    owner: tuple[int, int]  # (element id, local face)
    neighbor: tuple[int, int] | None
    tag: FaceTag
    curved: CurvedFaceMap | None = None

    @property
    def is_boundary(self) -> bool:
        return self.neighbor is None

    @property
    def area_vector(self) -> np.ndarray:
        c = self.corners
        return 0.5 * np.cross(c[1] - c[0], c[2] - c[0])

    @property
    def diameter(self) -> float:
        c = self.corners
        return max(np.linalg.norm(c[i] - c[j]) for i, j in ((0, 1), (1, 2), (0, 2)))

    def side(self, element: int) -> int:
        """+1 if ``element`` owns the face (outward normal), -1 for the neighbor."""
        if self.owner[0] == element:
            return 1
        if self.neighbor is not None and self.neighbor[0] == element:
            return -1
        raise MeshError(f"element {element} is not incident to face {self.id}")

    def other(self, element: int) -> int | None:
        if self.owner[0] == element:
            return None if self.neighbor is None else self.neighbor[0]
        return self.owner[0]


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    elements: tuple[Element, ...]
    materials: tuple[Material, ...]
    faces: tuple[TriFace, ...]
    element_faces: tuple[tuple[int, ...], ...]
    h_min: float
    h_max: float
    edge_midpoints: Mapping[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def material(self, element: int) -> Material:
        return self.materials[self.elements[element].material_id]

    def count_kinds(self) -> dict[str, int]:
        out = {"tetra": 0, "wedge": 0, "hexa": 0}
        for el in self.elements:
            out[el.kind] += 1
        return out

    def with_face_tags(self, tags: Mapping[int, FaceTag]) -> "Mesh":
        """Copy of the mesh with the given faces retagged."""
        faces = list(self.faces)
        for fid, tag in tags.items():
            _check_tag(faces[fid], tag)
            faces[fid] = replace(faces[fid], tag=tag)
        return replace(self, faces=tuple(faces))

    def adjacency(self):
        """Element adjacency as a scipy CSR matrix (shared faces only)."""
        from scipy.sparse import coo_matrix

        rows, cols = [], []
        for f in self.faces:
            if f.neighbor is not None:
                rows += [f.owner[0], f.neighbor[0]]
                cols += [f.neighbor[0], f.owner[0]]
        n = self.n_elements
        data = np.ones(len(rows), dtype=np.int8)
        return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


# ---------------------------------------------------------------------------
# topology

ELEMENT_NODES = {"tetra": 4, "wedge": 6, "hexa": 8}

_LOCAL_FACES = {
    "tetra": [(0, 1, 2), (0, 1, 3), (1, 2, 3), (0, 2, 3)],
    "wedge": [(0, 1, 2), (3, 4, 5), (0, 1, 4, 3), (1, 2, 5, 4), (2, 0, 3, 5)],
    "hexa": [(0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)],
}


def _split_polygon(ids: Sequence[int]) -> list[tuple[int, ...]]:
    if len(ids) == 3:
        return [tuple(ids)]
    i = int(np.argmin(ids))
    q = [ids[(i + k) % 4] for k in range(4)]
    return [(q[0], q[1], q[2]), (q[0], q[2], q[3])]


def element_triangles(kind: str, vertex_ids: Sequence[int]) -> list[tuple[int, int, int]]:
    """Triangles covering an element boundary, in global vertex ids."""
    tris = []
    for local in _LOCAL_FACES[kind]:
        tris.extend(_split_polygon([vertex_ids[j] for j in local]))
    return tris


def _check_tag(face: TriFace, tag) -> None:
    if isinstance(tag, (Resistive, TSInterface)) and face.neighbor is None:
        raise MeshError(f"face {face.id}: {type(tag).__name__} tag requires an interior face")
    if isinstance(tag, Boundary) and face.neighbor is not None:
        raise MeshError(f"face {face.id}: boundary tag on an interior face")
    if isinstance(tag, TSInterface) and tag.scattered_side not in (
        face.owner[0], face.neighbor[0] if face.neighbor else None
    ):
        raise MeshError(f"face {face.id}: scattered side is not incident to the face")


def _signed_volume(points: np.ndarray, tris: list[np.ndarray]) -> float:
    c = points.mean(axis=0)
    vol = 0.0
    for t in tris:
        vol += np.dot(t[0] - c, np.cross(t[1] - c, t[2] - c)) / 6.0
    return vol


TagSpec = Mapping[tuple[int, ...], FaceTag] | Callable[[np.ndarray, int, int | None], FaceTag | None] | None


def build_topology(
    raw_elements: Sequence[tuple[str, Sequence[int], int]],
    raw_vertices,
    tags: TagSpec = None,
    materials: Sequence[Material] = (VACUUM,),
    edge_midpoints: Mapping[tuple[int, int], Sequence[float]] | None = None,
) -> Mesh:
    """Resolve faces, orientation and adjacency for a list of elements.

    ``raw_elements`` holds ``(kind, vertex_ids, material_id)`` triples.
    ``tags`` maps sorted vertex triples to face tags, or is a callable
    ``(corners, owner, neighbor) -> tag`` returning None for the default.
    Untagged interior faces are :class:`Interior`, untagged boundary faces
    absorbing (Q = 0).  ``edge_midpoints`` maps sorted vertex pairs to the
    extra node of a curved edge.
    """
    verts = np.asarray(raw_vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 3 or not np.all(np.isfinite(verts)):
        raise MeshError("vertices must be a finite (n, 3) array")
    nv = len(verts)
    materials = tuple(materials)

    elements = []
    incidences: dict[tuple[int, ...], list[tuple[int, int, tuple[int, int, int]]]] = {}
    h_min, h_max = np.inf, 0.0
    for eid, (kind, vids, mat) in enumerate(raw_elements):
        if kind not in ELEMENT_NODES:
            raise MeshError(f"element {eid}: unknown kind {kind!r}")
        vids = tuple(int(v) for v in vids)
        if len(vids) != ELEMENT_NODES[kind]:
            raise MeshError(f"element {eid}: {kind} needs {ELEMENT_NODES[kind]} vertices, got {len(vids)}")
        if min(vids) < 0 or max(vids) >= nv:
            raise MeshError(f"element {eid}: vertex id out of range")
        if not 0 <= mat < len(materials):
            raise MeshError(f"element {eid}: unknown material {mat}")
        pts = verts[list(vids)]
        centroid = pts.mean(axis=0)
        tris = element_triangles(kind, vids)
        oriented = []
        for tri in tris:
            p = verts[list(tri)]
            n = np.cross(p[1] - p[0], p[2] - p[0])
            if np.dot(n, p.mean(axis=0) - centroid) < 0:
                tri = (tri[0], tri[2], tri[1])
            oriented.append(tri)
        vol = _signed_volume(pts, [verts[list(t)] for t in oriented])
        diam = max(np.linalg.norm(a - b) for a, b in combinations(pts, 2))
        if vol <= 1e-12 * diam**3:
            raise MeshError(f"element {eid}: non-positive volume")
        dists = [np.linalg.norm(a - b) for a, b in combinations(pts, 2)]
        h_min = min(h_min, min(dists))
        h_max = max(h_max, max(dists))
        h_av = float(np.mean(np.linalg.norm(pts - centroid, axis=1)))
        elements.append(Element(eid, kind, vids, int(mat), centroid, h_av))
        for local, tri in enumerate(oriented):
            incidences.setdefault(tuple(sorted(tri)), []).append((eid, local, tri))

    mids = {tuple(sorted(map(int, k))): np.asarray(v, dtype=float) for k, v in (edge_midpoints or {}).items()}
    faces = []
    element_faces: list[list[int]] = [[] for _ in elements]
    for key in sorted(incidences, key=lambda k: (incidences[k][0][0], incidences[k][0][1])):
        inc = incidences[key]
        if len(inc) > 2:
            raise MeshError(f"non-manifold face {key}: {len(inc)} incident elements")
        (e0, l0, tri0) = inc[0]
        corners = verts[list(tri0)]
        neighbor = None
        if len(inc) == 2:
            (e1, l1, tri1) = inc[1]
            n0 = np.cross(corners[1] - corners[0], corners[2] - corners[0])
            c1 = verts[list(tri1)]
            n1 = np.cross(c1[1] - c1[0], c1[2] - c1[0])
            if np.dot(n0, n1) >= 0:
                raise MeshError(f"inconsistent orientation on face {key}")
            neighbor = (e1, l1)
        curved = None
        edges = [(tri0[0], tri0[1]), (tri0[1], tri0[2]), (tri0[0], tri0[2])]
        if any(tuple(sorted(e)) in mids for e in edges):
            m = np.array([mids.get(tuple(sorted(e)), 0.5 * (verts[e[0]] + verts[e[1]])) for e in edges])
            curved = CurvedFaceMap(m)
        fid = len(faces)
        face = TriFace(fid, tuple(int(v) for v in tri0), corners, (e0, l0), neighbor, Interior(), curved)
        tag = None
        if callable(tags):
            tag = tags(corners, e0, None if neighbor is None else neighbor[0])
        elif tags is not None:
            tag = tags.get(key)
        if tag is None:
            tag = Interior() if neighbor is not None else ABSORBING
        _check_tag(face, tag)
        faces.append(replace(face, tag=tag))
        element_faces[e0].append(fid)
        if neighbor is not None:
            element_faces[neighbor[0]].append(fid)

    return Mesh(
        vertices=verts,
        elements=tuple(elements),
        materials=materials,
        faces=tuple(faces),
        element_faces=tuple(tuple(f) for f in element_faces),
        h_min=float(h_min),
        h_max=float(h_max),
        edge_midpoints=mids,
    )


# ---------------------------------------------------------------------------
# built-in meshers

_SIDES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")


def box_tet_mesher(
    extents,
    divisions,
    tags_per_side: Mapping[str, FaceTag] | None = None,
    origin=(0.0, 0.0, 0.0),
    materials: Sequence[Material] = (VACUUM,),
    interior_tagger: Callable[[np.ndarray, int, int], FaceTag | None] | None = None,
) -> Mesh:
    """Structured box of hexahedral cells, each split into six tetrahedra.

    All cells share the split along their main diagonal, so neighbouring
    cells agree on the diagonals of shared faces.  ``tags_per_side`` keys
    are ``xmin`` ... ``zmax``; ``interior_tagger(corners, owner, neighbor)``
    may tag interior faces.
    """
    ext = np.asarray(extents, dtype=float)
    div = np.asarray(divisions, dtype=int)
    if ext.shape != (3,) or div.shape != (3,):
        raise MeshError("extents and divisions must be 3-vectors")
    if np.any(ext <= 0):
        raise MeshError("box extents must be positive")
    if np.any(div < 1):
        raise MeshError("divisions must be at least 1")
    origin = np.asarray(origin, dtype=float)
    nx, ny, nz = div
    axes = [origin[i] + np.linspace(0.0, ext[i], div[i] + 1) for i in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    raw = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                base = np.array([i, j, k])
                for p in perms:
                    path = [base.copy()]
                    cur = base.copy()
                    for ax in p:
                        cur = cur.copy()
                        cur[ax] += 1
                        path.append(cur)
                    raw.append(("tetra", [vid(*q) for q in path], 0))

    side_tags = dict(tags_per_side or {})
    unknown = set(side_tags) - set(_SIDES)
    if unknown:
        raise MeshError(f"unknown box sides {sorted(unknown)}")
    lo, hi = origin, origin + ext
    tol = 1e-9 * ext.max()

    def tagger(corners, owner, neighbor):
        if neighbor is not None:
            return interior_tagger(corners, owner, neighbor) if interior_tagger else None
        for ax, name in enumerate("xyz"):
            if np.all(np.abs(corners[:, ax] - lo[ax]) < tol):
                return side_tags.get(name + "min")
            if np.all(np.abs(corners[:, ax] - hi[ax]) < tol):
                return side_tags.get(name + "max")
        return None

    return build_topology(raw, verts, tagger, materials)


def icosphere(refinement: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-sphere triangulation: icosahedron subdivided ``refinement`` times."""
    g = (1.0 + 5**0.5) / 2.0
    v = [(-1, g, 0), (1, g, 0), (-1, -g, 0), (1, -g, 0), (0, -1, g), (0, 1, g),
         (0, -1, -g), (0, 1, -g), (g, 0, -1), (g, 0, 1), (-g, 0, -1), (-g, 0, 1)]
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in v]
    tris = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
            (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
            (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(refinement):
        cache: dict[tuple[int, int], int] = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = new
    return np.array(verts), np.array(tris, dtype=int)


def sphere_shell_mesher(
    r_inner: float,
    r_outer: float,
    refinement: int,
    layers: int,
    curved: bool = True,
    radii: Sequence[float] | None = None,
    core: bool = False,
    inner_tag: FaceTag = PEC,
    outer_tag: FaceTag = ABSORBING,
    layer_materials: Sequence[int] | None = None,
    materials: Sequence[Material] = (VACUUM,),
    curved_radii: Sequence[float] | None = None,
) -> Mesh:
    """Concentric shells of wedges around an icosphere surface.

    ``radii`` (increasing, from ``r_inner`` to ``r_outer``) overrides the
    uniform spacing of ``layers`` shells.  With ``core`` the inner ball is
    filled with tetrahedra joined at the origin and the inner surface
    becomes an ordinary interior surface.  ``layer_materials`` gives one
    material id per shell (the core counts as shell 0 when present).
    With ``curved``, every edge whose end points lie on a common sphere
    gets its midpoint projected radially onto that sphere; ``curved_radii``
    restricts this to the listed spheres.
    """
    if not 0.0 < r_inner < r_outer:
        raise MeshError("need 0 < r_inner < r_outer")
    if radii is None:
        if layers < 1:
            raise MeshError("need at least one layer")
        radii = np.linspace(r_inner, r_outer, layers + 1)
    radii = np.asarray(radii, dtype=float)
    if radii[0] != r_inner or radii[-1] != r_outer or np.any(np.diff(radii) <= 0):
        raise MeshError("radii must increase from r_inner to r_outer")
    nshell = len(radii) - 1
    unit, tris = icosphere(refinement)
    ns = len(unit)
    verts = [unit * r for r in radii]
    offset = 0
    raw = []
    nmat = [0] * (nshell + int(core))
    if layer_materials is not None:
        if len(layer_materials) != len(nmat):
            raise MeshError("layer_materials needs one entry per shell")
        nmat = list(layer_materials)
    if core:
        verts.append(np.zeros((1, 3)))
        centre = ns * len(radii)
        for a, b, c in tris:
            raw.append(("tetra", [centre, a, b, c], nmat[0]))
        offset = 1
    for layer in range(nshell):
        lo, hi = layer * ns, (layer + 1) * ns
        for a, b, c in tris:
            raw.append(("wedge", [lo + a, lo + b, lo + c, hi + a, hi + b, hi + c], nmat[layer + offset]))
    allv = np.vstack(verts)

    mids = {}
    if curved:
        edges = set()
        for a, b, c in tris:
            edges |= {(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c))}
        for li, r in enumerate(radii):
            if curved_radii is not None and not np.any(np.isclose(r, curved_radii, rtol=1e-12)):
                continue
            for a, b in edges:
                m = unit[a] + unit[b]
                mids[(li * ns + a, li * ns + b)] = r * m / np.linalg.norm(m)

    tol = 1e-9 * r_outer

    def tagger(corners, owner, neighbor):
        if neighbor is not None:
            return None
        r = np.linalg.norm(corners, axis=1)
        if np.all(np.abs(r - r_outer) < tol):
            return outer_tag
        if np.all(np.abs(r - r_inner) < tol):
            return inner_tag
        return None

    return build_topology(raw, allv, tagger, materials, mids)


def faces_on_sphere(mesh: Mesh, radius: float, rtol: float = 1e-9) -> list[int]:
    """Ids of faces whose three corners lie on the sphere of given radius."""
    out = []
    for f in mesh.faces:
        r = np.linalg.norm(f.corners, axis=1)
        if np.all(np.abs(r - radius) <= rtol * max(radius, 1.0)):
            out.append(f.id)
    return out


def tag_sphere(mesh: Mesh, radius: float, make_tag: Callable[[TriFace], FaceTag]) -> Mesh:
    return mesh.with_face_tags({fid: make_tag(mesh.faces[fid]) for fid in faces_on_sphere(mesh, radius)})


def outer_element(mesh: Mesh, face: TriFace) -> int:
    """The incident element whose centroid is farther from the origin."""
    cands = [face.owner[0]] + ([face.neighbor[0]] if face.neighbor else [])
    return max(cands, key=lambda e: np.linalg.norm(mesh.elements[e].centroid))


# ---------------------------------------------------------------------------
# file I/O


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _tag_record(tag: FaceTag) -> dict:
    if isinstance(tag, Interior):
        return {"type": "interior"}
    if isinstance(tag, Boundary):
        return {"type": "boundary", "Q": _c(tag.Q), "source": tag.source.value}
    if isinstance(tag, Resistive):
        return {"type": "resistive", "eta": _c(tag.eta)}
    return {"type": "ts_interface", "scattered_side": tag.scattered_side}


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise MeshError(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def parse_tag(rec: Mapping) -> FaceTag:
    kind = rec.get("type")
    if kind == "interior":
        return Interior()
    if kind == "boundary":
        try:
            source = SourceKind(rec.get("source", "none"))
        except ValueError as err:
            raise MeshError(f"unknown source kind {rec.get('source')!r}") from err
        return Boundary(_parse_complex(rec.get("Q", 0.0)), source)
    if kind == "resistive":
        return Resistive(_parse_complex(rec["eta"]))
    if kind == "ts_interface":
        return TSInterface(int(rec["scattered_side"]))
    raise MeshError(f"unknown face tag type {kind!r}")


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "format": "uwvf-mesh",
        "version": 1,
        "vertices": [[i, *map(float, p)] for i, p in enumerate(mesh.vertices)],
        "elements": [[e.id, e.kind, list(e.vertex_ids), e.material_id] for e in mesh.elements],
        "materials": [[i, _c(m.eps_r), _c(m.mu_r)] for i, m in enumerate(mesh.materials)],
        "face_tags": [{"vertices": list(f.vertex_ids), "tag": _tag_record(f.tag)} for f in mesh.faces],
        "curved_edges": [[a, b, *map(float, p)] for (a, b), p in sorted(mesh.edge_midpoints.items())],
    }


def mesh_from_dict(data: Mapping) -> Mesh:
    try:
        verts = sorted(data["vertices"], key=lambda r: int(r[0]))
        if [int(r[0]) for r in verts] != list(range(len(verts))):
            raise MeshError("vertex ids must be dense 0..n-1")
        xyz = np.array([[float(c) for c in r[1:4]] for r in verts])
        mats = sorted(data.get("materials", [[0, [1, 0], [1, 0]]]), key=lambda r: int(r[0]))
        materials = [Material(_parse_complex(r[1]), _parse_complex(r[2])) for r in mats]
        elems = sorted(data["elements"], key=lambda r: int(r[0]))
        raw = [(str(r[1]), [int(v) for v in r[2]], int(r[3])) for r in elems]
        tags = {tuple(sorted(int(v) for v in rec["vertices"])): parse_tag(rec["tag"])
                for rec in data.get("face_tags", [])}
        mids = {(int(r[0]), int(r[1])): [float(c) for c in r[2:5]] for r in data.get("curved_edges", [])}
    except (KeyError, TypeError, IndexError) as err:
        raise MeshError(f"malformed mesh file: {err}") from err
    return build_topology(raw, xyz, tags, materials, mids)


def save_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh)))


def load_mesh(path) -> Mesh:
    path = Path(path)
    if path.suffix == ".msh":
        return load_msh2(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise MeshError(f"malformed mesh file {path}: {err}") from err
    return mesh_from_dict(data)


_MSH_KINDS = {4: ("tetra", 4), 5: ("hexa", 8), 6: ("wedge", 6), 2: ("triangle", 3)}


def load_msh2(path, physical_tags: Mapping[str, FaceTag] | None = None,
              physical_materials: Mapping[str, Material] | None = None) -> Mesh:
    """Import an ASCII MSH 2.x file.

    Triangles in a named physical surface group receive the matching entry of
    ``physical_tags``; volume groups named in ``physical_materials`` select
    the element material (others are vacuum).
    """
    lines = Path(path).read_text().split("\n")
    sections: dict[str, list[str]] = {}
    i = 0
    while i < len(lines):
        ln = lines[i].strip()
        if ln.startswith("$") and not ln.startswith("$End"):
            name = ln[1:]
            body = []
            i += 1
            while i < len(lines) and lines[i].strip() != f"$End{name}":
                body.append(lines[i].strip())
                i += 1
            sections[name] = body
        i += 1
    if "Nodes" not in sections or "Elements" not in sections:
        raise MeshError("MSH file lacks $Nodes or $Elements")
    fmt = sections.get("MeshFormat", ["2.2 0 8"])[0].split()
    if not fmt[0].startswith("2") or fmt[1] != "0":
        raise MeshError("only ASCII MSH version 2 is supported")
    names = {}
    for ln in sections.get("PhysicalNames", [])[1:]:
        parts = ln.split(maxsplit=2)
        names[int(parts[1])] = parts[2].strip('"')
    node_lines = sections["Nodes"][1:]
    node_ids = {}
    xyz = []
    for ln in node_lines:
        if not ln:
            continue
        parts = ln.split()
        node_ids[int(parts[0])] = len(xyz)
        xyz.append([float(c) for c in parts[1:4]])
    physical_tags = dict(physical_tags or {})
    physical_materials = dict(physical_materials or {})
    mat_list = [VACUUM]
    mat_index = {}
    raw = []
    tri_tags = {}
    for ln in sections["Elements"][1:]:
        if not ln:
            continue
        parts = [int(p) for p in ln.split()]
        etype, ntags = parts[1], parts[2]
        if etype not in _MSH_KINDS:
            continue
        phys = parts[3] if ntags > 0 else 0
        kind, nn = _MSH_KINDS[etype]
        nodes = [node_ids[n] for n in parts[3 + ntags: 3 + ntags + nn]]
        pname = names.get(phys, str(phys))
        if kind == "triangle":
            if pname in physical_tags:
                tri_tags[tuple(sorted(nodes))] = physical_tags[pname]
            continue
        mat_id = 0
        if pname in physical_materials:
            if pname not in mat_index:
                mat_index[pname] = len(mat_list)
                mat_list.append(physical_materials[pname])
            mat_id = mat_index[pname]
        raw.append((kind, nodes, mat_id))
    return build_topology(raw, np.array(xyz), tri_tags, mat_list)
