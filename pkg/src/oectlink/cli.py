"""Command-line entry point.

Subcommands: ser, lod, sweep, calibrate, validate-scenario. Results are
written both as CSV and as a structured JSON document with identical
content; progress goes to stderr, machine-readable summaries to stdout.
Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import resources

from . import __version__
from .config import (Scenario, ScenarioError, Scheme, load_scenario,
                     loads_scenario, scenario_hash)
from .detection import calibrate
from .engine import SymbolEngine
from .experiments import (SWEEP_AXES, SweepSpec, estimate_ser, find_lod,
                          run_sweep)
from .results import ResultRow, write_results
from .streams import CALIBRATION_SEED_INDEX, RngBundle, point_token

_SCHEME_CHOICES = {s.value: s for s in Scheme}


def _load(arg: str) -> Scenario:
    if arg == "baseline":
        text = resources.files("oectlink").joinpath(
            "data/baseline.ini").read_text()
        return loads_scenario(text, source="baseline")
    return load_scenario(arg)


def _metadata(scn: Scenario, master_seed: int) -> dict:
    return {"scenario_hash": scenario_hash(scn),
            "tool_version": __version__,
            "master_seed": master_seed}


def _emit(rows: list[ResultRow], out_prefix: str, scn: Scenario,
          master_seed: int) -> None:
    meta = _metadata(scn, master_seed)
    write_results(rows, out_prefix + ".csv", "csv", meta)
    write_results(rows, out_prefix + ".json", "json", meta)
    print(f"wrote {out_prefix}.csv and {out_prefix}.json "
          f"({len(rows)} rows)", file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oectlink",
        description="Tri-channel OECT molecular-communication link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--scenario", default="baseline",
                       help="scenario file path or 'baseline'")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (default: scenario value)")
        p.add_argument("--out", default=out_default,
                       help="output file prefix")

    p = sub.add_parser("ser", help="estimate SER at one operating point")
    common(p, "ser_results")
    p.add_argument("--scheme", choices=sorted(_SCHEME_CHOICES),
                   required=True)
    p.add_argument("--nm", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--ctrl", choices=("on", "off"), default=None)
    p.add_argument("--isi", choices=("on", "off"), default=None)

    p = sub.add_parser("lod", help="limit-of-detection search")
    common(p, "lod_results")
    p.add_argument("--scheme", choices=sorted(_SCHEME_CHOICES),
                   required=True)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--ctrl", choices=("on", "off"), default=None)

    p = sub.add_parser("sweep", help="parameter sweep")
    common(p, "sweep_results")
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--scheme", choices=sorted(_SCHEME_CHOICES) + ["all"],
                   default="all")
    p.add_argument("--ctrl", choices=("on", "off", "both"), default="both")
    p.add_argument("--values", default=None,
                   help="comma-separated axis values (gm:ctot pairs for "
                        "the device axis)")
    p.add_argument("--nm", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--isi", choices=("on", "off"), default=None)
    p.add_argument("--lod", action="store_true",
                   help="also search the LoD at each point")

    p = sub.add_parser("calibrate", help="calibrate detector thresholds")
    common(p, "calibration")
    p.add_argument("--scheme", choices=sorted(_SCHEME_CHOICES),
                   required=True)
    p.add_argument("--nm", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--ctrl", choices=("on", "off"), default=None)

    p = sub.add_parser("validate-scenario", help="validate a scenario file")
    p.add_argument("--scenario", required=True)
    return parser


def _flag(value: str | None) -> bool | None:
    return None if value is None else value == "on"


def _single_point_row(args, scn: Scenario, scheme: Scheme, master: int,
                      with_lod: bool) -> ResultRow:
    n_m = scn.modulation.n_m if getattr(args, "nm", None) is None else args.nm
    r = scn.medium.r if args.r is None else args.r
    ctrl = scn.modulation.ctrl if _flag(args.ctrl) is None \
        else _flag(args.ctrl)
    isi = scn.montecarlo.isi if _flag(getattr(args, "isi", None)) is None \
        else _flag(getattr(args, "isi", None))

    start = time.perf_counter()
    lod = None
    if with_lod:
        result = find_lod(scn, scheme, r, master, ctrl=ctrl)
        lod = result.lod
        n_m, est = result.trace[-1]
        for probed, probe_est in result.trace:
            if probed == result.lod:
                n_m, est = probed, probe_est
    else:
        est = estimate_ser(scn, scheme, n_m, r, isi, master, ctrl=ctrl)
    engine = SymbolEngine(scn, scheme, n_m, r=r, ctrl=ctrl, isi=isi)
    return ResultRow(
        axis="lod" if with_lod else "point", value=None, value2=None,
        scheme=scheme.value, ctrl="on" if ctrl else "off", nm=float(n_m),
        r=r, ts=engine.t_s, w=engine.w, errors=est.errors,
        symbols=est.symbols, ser=est.ser, wilson_lo=est.wilson_lo,
        wilson_hi=est.wilson_hi, seeds_used=est.seeds_used, lod=lod,
        runtime_s=time.perf_counter() - start, master_seed=master,
        id_errors=est.identity_errors, amp_errors=est.amplitude_errors)


def _parse_sweep_values(axis: str, text: str | None):
    if text is None:
        return None
    if axis == "device":
        pairs = []
        for tok in text.split(","):
            gm, ctot = tok.split(":")
            pairs.append((float(gm), float(ctot)))
        return tuple(pairs)
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        scn = _load(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate-scenario":
        print(f"ok: scenario valid (hash {scenario_hash(scn)})")
        return 0

    master = scn.montecarlo.seed if args.seed is None else args.seed
    try:
        if args.command in ("ser", "lod"):
            scheme = _SCHEME_CHOICES[args.scheme]
            row = _single_point_row(args, scn, scheme, master,
                                    with_lod=args.command == "lod")
            _emit([row], args.out, scn, master)
            print(f"{args.command} ser={row.ser:.6g} "
                  f"[{row.wilson_lo:.6g}, {row.wilson_hi:.6g}] "
                  f"seeds={row.seeds_used}"
                  + (f" lod={row.lod}" if row.lod else ""))
        elif args.command == "sweep":
            schemes = tuple(Scheme) if args.scheme == "all" \
                else (_SCHEME_CHOICES[args.scheme],)
            ctrl_options = {"on": (True,), "off": (False,),
                            "both": (True, False)}[args.ctrl]
            spec = SweepSpec(
                axis=args.axis, schemes=schemes, ctrl_options=ctrl_options,
                values=_parse_sweep_values(args.axis, args.values),
                n_m=args.nm, r=args.r, isi=_flag(args.isi),
                with_lod=args.lod, master_seed=master)
            done = []
            partial = args.out + ".partial.csv"

            def flush(row):
                done.append(row)
                write_results(done, partial, "csv")
                print(f"[{len(done)}] {row.axis}={row.value} "
                      f"scheme={row.scheme} ctrl={row.ctrl} "
                      f"ser={row.ser:.4g}", file=sys.stderr)

            rows = run_sweep(scn, spec, flush=flush)
            _emit(rows, args.out, scn, master)
            if os.path.exists(partial):
                os.remove(partial)
            print(f"sweep complete: {len(rows)} rows")
        elif args.command == "calibrate":
            scheme = _SCHEME_CHOICES[args.scheme]
            n_m = scn.modulation.n_m if args.nm is None else args.nm
            r = scn.medium.r if args.r is None else args.r
            ctrl = scn.modulation.ctrl if _flag(args.ctrl) is None \
                else _flag(args.ctrl)
            point = point_token(scenario_hash(scn), scheme.value, ctrl,
                                n_m, r, False, None, 1.0)
            bundle = RngBundle.derive(master, point, CALIBRATION_SEED_INDEX)
            cal = calibrate(scn, scheme, n_m, r, bundle, ctrl=ctrl)
            doc = {"metadata": _metadata(scn, master),
                   "operating_point": {"nm": n_m, "r": r,
                                       "ctrl": ctrl},
                   "calibration": cal.to_dict()}
            path = args.out + ".json"
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2)
                fh.write("\n")
            print(f"wrote {path}")
    except ScenarioError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
