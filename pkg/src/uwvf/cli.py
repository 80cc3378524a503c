"""Command line front end: run a scenario, compare RCS files, emit Mie references."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .oracle import MieSpec
from .scenarios import (
    PRESETS,
    ScenarioError,
    StageError,
    compare,
    emit_mie,
    load_scenario,
    preset,
    run,
)

log = logging.getLogger("uwvf")


def _complex_arg(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uwvf", description="Plane-wave UWVF solver for time-harmonic Maxwell problems.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="scenario file (JSON key-value tree)")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    p.add_argument("--threads", type=int, default=1, help="worker threads for assembly and C products")
    p.add_argument("--mode", choices=["stored", "matrix-free"], help="override the scenario solver mode")
    p.add_argument("--out", type=Path, default=Path("uwvf-out"), help="output directory")
    p.add_argument("--emit-mie", action="store_true",
                   help="write the Mie reference RCS (from the scenario, or from --radius etc.) to OUT/mie.csv")
    p.add_argument("--radius", type=float, help="sphere radius in metres for --emit-mie")
    p.add_argument("--frequency", type=float, default=2e9, help="frequency in Hz for --emit-mie")
    p.add_argument("--eps-r", type=_complex_arg, help="relative permittivity, e.g. 1.5+0.5j (default: PEC)")
    p.add_argument("--mu-r", type=_complex_arg, default=1.0, help="relative permeability")
    p.add_argument("--angles", type=float, nargs=3, default=[0.0, 180.0, 2.0], metavar=("START", "STOP", "STEP"),
                   help="azimuth grid in degrees for --emit-mie")
    p.add_argument("--compare", nargs=2, type=Path, metavar=("A", "B"),
                   help="compare rcs CSV A against reference CSV B")
    p.add_argument("--tolerance", type=float, help="L2 tolerance in percent for --compare")
    p.add_argument("--list-presets", action="store_true", help="print the preset names and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _emit_mie(args, scenario) -> int:
    angles = np.arange(args.angles[0], args.angles[1] + 0.5 * args.angles[2], args.angles[2])
    if args.radius is not None:
        spec = MieSpec(args.radius, args.frequency, args.eps_r is None,
                       1.0 if args.eps_r is None else args.eps_r, args.mu_r)
    elif scenario is not None and (scenario.reference or {}).get("kind") == "mie":
        ref = scenario.reference
        from .scenarios import _complex
        spec = MieSpec(float(ref["radius"]) * scenario.unit, scenario.frequency, bool(ref.get("pec", True)),
                       _complex(ref.get("eps_r", 1.0)), _complex(ref.get("mu_r", 1.0)))
        if "rcs" in scenario.outputs:
            from .scenarios import _angles
            angles = _angles(scenario.outputs["rcs"])
    else:
        log.error("--emit-mie needs --radius or a scenario with a Mie reference")
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "mie.csv"
    emit_mie(spec, angles, path)
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.list_presets:
        print("\n".join(PRESETS))
        return 0
    if args.compare:
        try:
            res = compare(*args.compare, tolerance=args.tolerance)
        except (OSError, ValueError) as err:
            log.error("compare failed: %s", err)
            return 2
        print(json.dumps(res, indent=2))
        return 0 if res.get("pass", True) else 1
    try:
        scenario = load_scenario(args.config) if args.config else (preset(args.preset) if args.preset else None)
    except (OSError, ScenarioError) as err:
        log.error("%s", err)
        return 2
    if args.emit_mie:
        return _emit_mie(args, scenario)
    if scenario is None:
        log.error("nothing to do: give --config, --preset, --compare or --emit-mie")
        return 2
    try:
        result = run(scenario, args.out, threads=args.threads, mode=args.mode, keep=False)
    except StageError as err:
        log.error("%s", err)
        return 3
    rep = result.report
    print(f"{rep['scenario']}: {rep['N_elements_total']} elements, {rep['N_DoF']} DoF, "
          f"{rep['iterations']} iterations, {rep['cpu_time_s']:.1f} s CPU")
    for key, v in rep["verdict"].items():
        print(f"  {key}: {v['value']:.4g} (tolerance {v['tolerance']:g}) {'PASS' if v['pass'] else 'FAIL'}")
    print(f"artifacts in {args.out}")
    return 0 if rep["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
