import numpy as np
import pytest

from uwvf.mesh import Boundary, Material, SourceKind, build_topology
from uwvf.oracle import wavenumber

KAPPA = wavenumber(2e9)
LAM = 2 * np.pi / KAPPA


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_tetra(rng, scale=1.0):
    while True:
        v = rng.uniform(-1, 1, (4, 3)) * scale
        vol = np.linalg.det(v[1:] - v[0]) / 6
        if abs(vol) > 0.05 * scale**3:
            return v


def tetra_mesh(verts, material=Material(), tag=Boundary(0.0)):
    return build_topology([("tetra", [0, 1, 2, 3], 0)], np.asarray(verts, dtype=float),
                          lambda c, o, n: tag, [material])


def two_tetra_mesh(materials=(Material(), Material()), tagger=None):
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=float) * 0.05
    raw = [("tetra", [0, 1, 2, 3], 0), ("tetra", [1, 2, 3, 4], 1)]

    def tags(c, o, n):
        if n is None:
            return Boundary(0.0, SourceKind.INCIDENT)
        return tagger(c, o, n) if tagger else None

    return build_topology(raw, verts, tags, list(materials))
