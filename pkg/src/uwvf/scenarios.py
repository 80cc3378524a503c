"""Scenario description, built-in presets, the run pipeline and RCS comparison.

A scenario is a plain key-value tree (JSON on disk).  Lengths in the mesh
and output sections are in metres, or in free-space wavelengths when
``length_unit`` is ``"wavelength"``.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assembly import assemble_all
from .basis import build_bases
from .mesh import (
    Material,
    Mesh,
    MeshError,
    TSInterface,
    box_tet_mesher,
    faces_on_sphere,
    load_mesh,
    outer_element,
    parse_tag,
    sphere_shell_mesher,
    tag_sphere,
)
from .oracle import (
    C0,
    MieSpec,
    PlaneWave,
    SalisburySpec,
    mie_bistatic_rcs,
    salisbury_solution,
    wavenumber,
)
from .postprocess import (
    PointLocator,
    azimuth_directions,
    bistatic_rcs,
    ensure_dir,
    far_field,
    read_rcs_csv,
    recover_coefficients,
    rcs_l2_error,
    sample_field,
    scattered_elements,
    write_field_csv,
    write_rcs_csv,
)
from .solver import solve

BASIS_TOLERANCES = (1e5, 1e7, 1e9)
MODES = ("stored", "matrix_free")


class ScenarioError(ValueError):
    """Invalid scenario description."""


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage} stage failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ScenarioError(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class Scenario:
    name: str = "custom"
    frequency: float = 2e9
    direction: list = field(default_factory=lambda: [1.0, 0.0, 0.0])
    polarization: list = field(default_factory=lambda: [0.0, 1.0, 0.0])
    length_unit: str = "m"
    # field carried by elements when no total/scattered interface decides
    field_region: str = "scattered"
    mesh: dict = field(default_factory=dict)
    basis_tolerance: float = 1e7
    solver: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    reference: dict | None = None
    tolerances: dict = field(default_factory=dict)

    @property
    def kappa(self) -> float:
        return wavenumber(self.frequency)

    @property
    def wavelength(self) -> float:
        return C0 / self.frequency

    @property
    def unit(self) -> float:
        return self.wavelength if self.length_unit == "wavelength" else 1.0

    @property
    def mode(self) -> str:
        return normalize_mode(self.solver.get("mode", "stored"))

    def incident(self) -> PlaneWave:
        return PlaneWave(self.kappa, np.asarray(self.direction, dtype=float),
                         np.array([_complex(c) for c in self.polarization]))

    def validate(self) -> "Scenario":
        if not self.frequency > 0:
            raise ScenarioError("frequency must be positive")
        if self.length_unit not in ("m", "wavelength"):
            raise ScenarioError(f"length_unit must be 'm' or 'wavelength', got {self.length_unit!r}")
        if self.field_region not in ("scattered", "total"):
            raise ScenarioError("field_region must be 'scattered' or 'total'")
        if not any(np.isclose(self.basis_tolerance, t) for t in BASIS_TOLERANCES):
            raise ScenarioError(f"basis_tolerance must be one of {BASIS_TOLERANCES}")
        normalize_mode(self.solver.get("mode", "stored"))
        if float(self.solver.get("tol", 1e-5)) <= 0:
            raise ScenarioError("solver tolerance must be positive")
        if int(self.solver.get("max_iter", 5000)) < 1:
            raise ScenarioError("max_iter must be at least 1")
        if self.mesh.get("kind") not in ("box", "sphere", "file"):
            raise ScenarioError(f"mesh kind must be box, sphere or file, got {self.mesh.get('kind')!r}")
        try:
            self.incident()
        except ValueError as err:
            raise ScenarioError(str(err)) from err
        if self.reference is not None and self.reference.get("kind") not in (
                "mie", "salisbury", "plane_wave", "incident_null"):
            raise ScenarioError(f"unknown reference kind {self.reference.get('kind')!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        base = {}
        if "preset" in data:
            base = preset(data.pop("preset")).to_dict()
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ScenarioError(f"unknown scenario keys {sorted(unknown)}")
        return cls(**_merge(base, data)).validate()


def normalize_mode(mode: str) -> str:
    m = str(mode).replace("-", "_")
    if m not in MODES:
        raise ScenarioError(f"mode must be 'stored' or 'matrix-free', got {mode!r}")
    return m


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ScenarioError(f"malformed scenario file {path}: {err}") from err
    return Scenario.from_dict(data)


# ---------------------------------------------------------------------------
# presets


def _tag(Q, source="none") -> dict:
    return {"type": "boundary", "Q": Q, "source": source}


def _salisbury(eta) -> Scenario:
    return Scenario(
        name=f"salisbury_eta{eta:g}",
        length_unit="wavelength",
        field_region="total",
        mesh={
            "kind": "box",
            "extents": [1.0, 0.5, 0.5],
            "divisions": [4, 2, 2],
            "origin": [-1.0, 0.0, 0.0],
            "sides": {"xmin": _tag(0.0, "incident"), "xmax": _tag(-1.0), "ymin": _tag(-1.0),
                      "ymax": _tag(-1.0), "zmin": _tag(1.0), "zmax": _tag(1.0)},
            "sheets": [{"axis": "x", "position": -0.25, "tag": {"type": "resistive", "eta": [eta, 0.0]}}],
        },
        basis_tolerance=1e9,
        solver={"tol": 1e-6},
        outputs={"field_line": {"start": [-0.999, 0.26, 0.237], "stop": [-1e-4, 0.26, 0.237], "n": 200,
                                "which": "total"}},
        reference={"kind": "salisbury", "H": 0.25, "eta": [eta, 0.0], "fit_margin": 0.02},
        tolerances={"field_max_rel": 1e-2, **({"reflection": 1e-3} if eta == 1 else {})},
    )


def _pec_sphere(curved: bool) -> Scenario:
    return Scenario(
        name="pec_sphere_curved" if curved else "pec_sphere_flat",
        length_unit="wavelength",
        mesh={"kind": "sphere", "radii": [1.0, 1.5, 2.0, 2.5, 3.0, 3.5], "refinement": 0,
              "curved": curved, "curved_radii": [1.0], "inner": _tag(-1.0, "pec"), "outer": _tag(0.0)},
        outputs={"rcs": {"angles": [0.0, 180.0, 2.0], "surface_radius": 2.0}},
        reference={"kind": "mie", "radius": 1.0, "pec": True},
        tolerances={"rcs_l2_percent": 3.0} if curved else {},
    )


def _penetrable_sphere(name, eps, radii, refinement, surface, tol) -> Scenario:
    a = radii[0]
    return Scenario(
        name=name,
        length_unit="wavelength",
        mesh={"kind": "sphere", "radii": radii, "refinement": refinement, "curved": True, "curved_radii": [a],
              "core": True, "materials": [{"eps_r": 1.0}, {"eps_r": eps}],
              "layer_materials": [1] + [0] * (len(radii) - 1), "inner": None, "outer": _tag(0.0),
              "surfaces": [{"radius": a, "tag": {"type": "ts_interface"}}]},
        outputs={"rcs": {"angles": [0.0, 180.0, 2.0], "surface_radius": surface}},
        reference={"kind": "mie", "radius": a, "pec": False, "eps_r": eps},
        tolerances={"rcs_l2_percent": tol},
    )


def _resistive_sphere(eta) -> Scenario:
    radii = [0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0]
    return Scenario(
        name=f"resistive_sphere_eta{eta:g}",
        length_unit="wavelength",
        mesh={"kind": "sphere", "radii": radii, "refinement": 0, "curved": True, "curved_radii": radii[:3],
              "inner": _tag(-1.0), "outer": _tag(0.0),
              "surfaces": [{"radius": 0.75, "tag": {"type": "resistive", "eta": [eta, 0.0]}},
                           {"radius": 1.0, "tag": {"type": "ts_interface"}}]},
        outputs={"rcs": {"angles": [0.0, 180.0, 2.0], "surface_radius": 2.0}},
        reference={"kind": "mie", "radius": 0.5, "pec": True} if eta == 0 else None,
        tolerances={"rcs_l2_percent": 5.0} if eta == 0 else {},
    )


def _plane_wave_box() -> Scenario:
    src = _tag(0.0, "incident")
    return Scenario(
        name="plane_wave_box",
        length_unit="wavelength",
        field_region="total",
        mesh={"kind": "box", "extents": [1.0, 0.5, 0.5], "divisions": [4, 2, 2],
              "sides": {s: src for s in ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")}},
        outputs={"field_line": {"start": [0.01, 0.21, 0.27], "stop": [0.99, 0.21, 0.27], "n": 100}},
        reference={"kind": "plane_wave"},
        tolerances={"field_max_rel": 2e-2},
    )


def _empty_box() -> Scenario:
    return Scenario(
        name="empty_box",
        length_unit="wavelength",
        mesh={"kind": "box", "extents": [0.5, 0.5, 0.5], "divisions": [1, 1, 1],
              "sides": {s: _tag(0.0) for s in ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")}},
    )


def _ts_null() -> Scenario:
    return Scenario(
        name="ts_null",
        length_unit="wavelength",
        mesh={"kind": "sphere", "radii": [0.5, 1.0, 1.5], "refinement": 0, "curved": True, "curved_radii": [0.5],
              "core": True, "inner": None, "outer": _tag(0.0),
              "surfaces": [{"radius": 0.5, "tag": {"type": "ts_interface"}}]},
        basis_tolerance=1e9,
        solver={"tol": 1e-6},
        reference={"kind": "incident_null", "n": 400, "sample_radius": 1.125, "seed": 0},
        tolerances={"outside_scattered_rms": 1e-3, "inside_total_rms_rel": 5e-3},
    )


PRESETS = {
    "salisbury_eta1": lambda: _salisbury(1.0),
    "salisbury_eta0.5": lambda: _salisbury(0.5),
    "pec_sphere_curved": lambda: _pec_sphere(True),
    "pec_sphere_flat": lambda: _pec_sphere(False),
    "dielectric_sphere": lambda: _penetrable_sphere(
        "dielectric_sphere", [1.5, 0.5], [1.0, 1.5, 2.0, 2.5, 3.0, 3.5], 0, 2.0, 5.0),
    "plasma_sphere": lambda: _penetrable_sphere(
        "plasma_sphere", [-1.5, 0.5], [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], 1, 1.5, 7.0),
    "resistive_sphere_eta0": lambda: _resistive_sphere(0.0),
    "resistive_sphere_eta0.5": lambda: _resistive_sphere(0.5),
    "resistive_sphere_eta1": lambda: _resistive_sphere(1.0),
    "plane_wave_box": _plane_wave_box,
    "empty_box": _empty_box,
    "ts_null": _ts_null,
}


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return PRESETS[name]().validate()


# ---------------------------------------------------------------------------
# mesh construction


def _materials(recs) -> list[Material]:
    if not recs:
        return [Material()]
    return [Material(_complex(r.get("eps_r", 1.0)), _complex(r.get("mu_r", 1.0))) for r in recs]


def _optional_tag(rec):
    return None if rec is None else parse_tag(rec)


def _surface_tag(mesh: Mesh, rec):
    if rec.get("type") == "ts_interface" and "scattered_side" not in rec:
        side = rec.get("scattered", "outer")
        if side not in ("outer", "inner"):
            raise ScenarioError("ts_interface 'scattered' must be 'outer' or 'inner'")

        def make(face):
            e = outer_element(mesh, face)
            return TSInterface(e if side == "outer" else face.other(e))
        return make
    tag = parse_tag(rec)
    return lambda face: tag


def build_mesh(sc: Scenario) -> Mesh:
    spec = sc.mesh
    u = sc.unit
    kind = spec["kind"]
    if kind == "box":
        origin = np.asarray(spec.get("origin", [0.0, 0.0, 0.0]), dtype=float) * u
        extents = np.asarray(spec["extents"], dtype=float) * u
        sides = {k: parse_tag(v) for k, v in spec.get("sides", {}).items()}
        sheets = [("xyz".index(s["axis"]), float(s["position"]) * u, parse_tag(s["tag"]))
                  for s in spec.get("sheets", [])]
        tol = 1e-9 * float(extents.max())

        def interior(corners, owner, neighbor):
            for ax, pos, tag in sheets:
                if np.all(np.abs(corners[:, ax] - pos) < tol):
                    return tag
            return None

        mesh = box_tet_mesher(extents, spec["divisions"], sides, origin, _materials(spec.get("materials")),
                              interior if sheets else None)
    elif kind == "sphere":
        radii = [float(r) * u for r in spec["radii"]]
        cr = spec.get("curved_radii")
        mesh = sphere_shell_mesher(
            radii[0], radii[-1], int(spec.get("refinement", 0)), 0, bool(spec.get("curved", True)),
            radii=radii, core=bool(spec.get("core", False)),
            inner_tag=_optional_tag(spec.get("inner", _tag(-1.0, "pec"))),
            outer_tag=_optional_tag(spec.get("outer", _tag(0.0))),
            layer_materials=spec.get("layer_materials"), materials=_materials(spec.get("materials")),
            curved_radii=None if cr is None else [float(r) * u for r in cr])
    else:
        mesh = load_mesh(spec["path"])
    for s in spec.get("surfaces", []):
        r = float(s["radius"]) * u
        if not faces_on_sphere(mesh, r):
            raise MeshError(f"no mesh faces on the sphere of radius {r:g} m")
        mesh = tag_sphere(mesh, r, _surface_tag(mesh, s["tag"]))
    return mesh


# ---------------------------------------------------------------------------
# run pipeline


@dataclass
class RunResult:
    scenario: Scenario
    report: dict
    mesh: Mesh | None = None
    bases: list | None = None
    chi: np.ndarray | None = None
    coeffs: list | None = None
    angles: np.ndarray | None = None
    sigma: np.ndarray | None = None
    field: object = None
    solve_report: object = None
    out_dir: Path | None = None

    @property
    def passed(self) -> bool:
        return self.report["passed"]


class _Stage:
    def __init__(self, name, timings):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, et, ev, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if ev is not None and not isinstance(ev, StageError):
            raise StageError(self.name, ev) from ev
        return False


def _angles(spec) -> np.ndarray:
    a = spec["angles"]
    if isinstance(a, dict) or len(a) != 3:
        return np.asarray(a, dtype=float)
    start, stop, step = map(float, a)
    return np.arange(start, stop + 0.5 * step, step)


def _line_points(spec, u) -> np.ndarray:
    start = np.asarray(spec["start"], dtype=float) * u
    stop = np.asarray(spec["stop"], dtype=float) * u
    t = np.linspace(0.0, 1.0, int(spec.get("n", 100)))
    return start + t[:, None] * (stop - start)


def _salisbury_metrics(sc: Scenario, ref, sample) -> dict:
    u, k = sc.unit, sc.kappa
    H = float(ref["H"]) * u
    sol = salisbury_solution(SalisburySpec(H, _complex(ref["eta"]), k))
    x = sample.positions[:, 0]
    Ey = sample.E[:, 1]
    exact = sol.E_y(x)
    field_err = float(np.max(np.abs(np.abs(Ey) - np.abs(exact))) / np.max(np.abs(exact)))
    left = x < -H - float(ref.get("fit_margin", 0.02)) * u
    A = np.column_stack([np.exp(1j * k * x[left]), np.exp(-1j * k * x[left])])
    coef = np.linalg.lstsq(A, Ey[left], rcond=None)[0]
    R = coef[1] / coef[0]
    return {"field_max_rel": field_err, "reflection": float(abs(R)),
            "reflection_fit": [float(R.real), float(R.imag)], "reflection_exact": [sol.R2.real, sol.R2.imag]}


def _null_metrics(sc, ref, mesh, bases, coeffs, scattered, incident) -> dict:
    rng = np.random.default_rng(int(ref.get("seed", 0)))
    n = int(ref.get("n", 400))
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    pts = d * rng.uniform(0.0, float(ref["sample_radius"]) * sc.unit, n)[:, None]
    s = sample_field(mesh, bases, coeffs, pts, incident, "total", scattered)
    err = np.linalg.norm(s.E - incident(pts), axis=1)
    out = scattered[s.elements]
    pnorm = float(np.linalg.norm(incident.polarization))
    return {
        "outside_scattered_rms": float(np.sqrt(np.mean(err[out] ** 2)) / pnorm),
        "outside_scattered_max": float(err[out].max() / pnorm),
        "inside_total_rms_rel": float(np.sqrt(np.mean(err[~out] ** 2)) / pnorm),
        "inside_total_max_rel": float(err[~out].max() / pnorm),
    }


def mie_reference(sc: Scenario, angles) -> np.ndarray:
    ref = sc.reference
    spec = MieSpec(float(ref["radius"]) * sc.unit, sc.frequency, bool(ref.get("pec", True)),
                   _complex(ref.get("eps_r", 1.0)), _complex(ref.get("mu_r", 1.0)))
    return mie_bistatic_rcs(spec, angles)


def _verdict(metrics: dict, tolerances: dict) -> dict:
    out = {}
    for key, tol in tolerances.items():
        val = metrics.get(key)
        out[key] = {"value": val, "tolerance": tol, "pass": val is not None and bool(val <= tol)}
    return out


def run(sc: Scenario, out=None, threads: int = 1, mode: str | None = None, keep: bool = True) -> RunResult:
    """mesh -> basis -> assembly -> solve -> postprocess, writing artifacts to ``out``.

    Stage failures raise :class:`StageError` naming the stage.
    """
    sc.validate()
    mode = normalize_mode(mode) if mode is not None else sc.mode
    threads = max(1, int(threads))
    out_dir = ensure_dir(out) if out is not None else None
    timings: dict = {}
    cpu0 = time.process_time()
    incident = sc.incident()
    k = sc.kappa

    with _Stage("mesh", timings):
        mesh = build_mesh(sc)
    with _Stage("basis", timings):
        bases = build_bases(mesh, k, tolerance=sc.basis_tolerance)
    with _Stage("assembly", timings):
        ops = assemble_all(mesh, bases, incident, store_C=(mode == "stored"), threads=threads)
    with _Stage("solve", timings):
        chi, srep, _ = solve(ops, mode, mesh, bases, tol=float(sc.solver.get("tol", 1e-5)),
                             max_iter=int(sc.solver.get("max_iter", 5000)),
                             reorder=bool(sc.solver.get("reorder", True)), threads=threads, release_D=True)
        n_dof = ops.n_dof
        del ops
    metrics: dict = {}
    angles = sigma = sample = None
    with _Stage("postprocess", timings):
        coeffs = recover_coefficients(mesh, bases, chi)
        scattered = scattered_elements(mesh, sc.field_region == "scattered")
        ref = sc.reference or {}
        rcs_spec = sc.outputs.get("rcs")
        if rcs_spec is not None and np.linalg.norm(chi) > 0:
            angles = _angles(rcs_spec)
            r = float(rcs_spec["surface_radius"]) * sc.unit
            surface = [(fid, outer_element(mesh, mesh.faces[fid])) for fid in faces_on_sphere(mesh, r)]
            if not surface:
                raise MeshError(f"no far-field surface faces at radius {r:g} m")
            if not all(scattered[e] for _, e in surface):
                raise MeshError("far-field surface must lie in the scattered-field region")
            pattern = far_field(mesh, bases, coeffs, surface, azimuth_directions(angles), k)
            sigma, sigma_db = bistatic_rcs(pattern, incident.polarization)
            metrics["back_hemisphere_mean_sigma"] = float(np.mean(sigma[angles >= 90.0]))
            if out_dir is not None:
                write_rcs_csv(out_dir / "rcs.csv", angles, sigma, sigma_db)
            if ref.get("kind") == "mie":
                mie = mie_reference(sc, angles)
                metrics["rcs_l2_percent"] = rcs_l2_error(sigma, mie)
                metrics["rcs_max_percent"] = float(100 * np.max(np.abs(sigma - mie)) / np.max(np.abs(mie)))
                if out_dir is not None:
                    write_rcs_csv(out_dir / "mie.csv", angles, mie)
        line = sc.outputs.get("field_line")
        if line is not None:
            sample = sample_field(mesh, bases, coeffs, _line_points(line, sc.unit), incident,
                                  line.get("which", "total"), scattered)
            if out_dir is not None:
                write_field_csv(out_dir / "field_line.csv", sample)
            if ref.get("kind") == "salisbury":
                metrics.update(_salisbury_metrics(sc, ref, sample))
            elif ref.get("kind") == "plane_wave":
                exact = incident(sample.positions)
                if sample.which == "scattered":
                    exact = np.zeros_like(exact)
                metrics["field_max_rel"] = float(np.max(np.linalg.norm(sample.E - exact, axis=1))
                                                 / np.linalg.norm(incident.polarization))
        if ref.get("kind") == "incident_null":
            metrics.update(_null_metrics(sc, ref, mesh, bases, coeffs, scattered, incident))

    verdict = _verdict(metrics, sc.tolerances)
    report = {
        "scenario": sc.name,
        "mode": mode,
        "threads": threads,
        "frequency_hz": sc.frequency,
        "wavelength_m": sc.wavelength,
        "N_elements": mesh.count_kinds(),
        "N_elements_total": mesh.n_elements,
        "N_vertices": int(len(mesh.vertices)),
        "h_min": mesh.h_min,
        "h_max": mesh.h_max,
        "N_DoF": int(n_dof),
        "iterations": srep.iterations,
        "residual": srep.residual,
        "converged": srep.converged,
        "cpu_time_s": time.process_time() - cpu0,
        "stage_wall_time_s": timings,
        "metrics": metrics,
        "verdict": verdict,
        "passed": all(v["pass"] for v in verdict.values()),
    }
    if out_dir is not None:
        (out_dir / "report.json").write_text(json.dumps(report, indent=2))
        (out_dir / "scenario.json").write_text(json.dumps(sc.to_dict(), indent=2))
    res = RunResult(sc, report, angles=angles, sigma=sigma, field=sample, solve_report=srep, out_dir=out_dir)
    if keep:
        res.mesh, res.bases, res.chi, res.coeffs = mesh, bases, chi, coeffs
    return res


# ---------------------------------------------------------------------------
# comparison


def compare_rcs(phi_a, sigma_a, phi_b, sigma_b, tolerance: float | None = None) -> dict:
    """Errors of ``sigma_a`` against the reference ``sigma_b`` in percent.

    The max error is normalised by the largest reference value so that
    nulls of the reference do not dominate.
    """
    phi_a, phi_b = np.asarray(phi_a, dtype=float), np.asarray(phi_b, dtype=float)
    if phi_a.shape != phi_b.shape or not np.allclose(phi_a, phi_b, rtol=0.0, atol=1e-9):
        raise ValueError("angle grids differ")
    a, b = np.asarray(sigma_a, dtype=float), np.asarray(sigma_b, dtype=float)
    l2 = rcs_l2_error(a, b)
    mx = float(100 * np.max(np.abs(a - b)) / np.max(np.abs(b)))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(b != 0, 100 * (a - b) / b, np.where(a == b, 0.0, np.inf))
    table = [{"phi_deg": float(p), "sigma_a": float(x), "sigma_b": float(y), "rel_percent": float(r)}
             for p, x, y, r in zip(phi_a, a, b, rel)]
    res = {"l2_percent": l2, "max_percent": mx, "per_angle": table}
    if tolerance is not None:
        res["tolerance_percent"] = float(tolerance)
        res["pass"] = bool(l2 <= tolerance)
    return res


def compare(path_a, path_b, tolerance: float | None = None) -> dict:
    """Compare two ``rcs.csv`` files (the second is the reference)."""
    pa, sa = read_rcs_csv(path_a)
    pb, sb = read_rcs_csv(path_b)
    return compare_rcs(pa, sa, pb, sb, tolerance)


def emit_mie(spec: MieSpec, angles, path) -> np.ndarray:
    sigma = mie_bistatic_rcs(spec, angles)
    write_rcs_csv(path, angles, sigma)
    return sigma
