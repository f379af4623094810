"""Command-line front end.

Subcommands
-----------
cycle       build the one-cycle process map, write it with a summary
sweep       field sweep producing the witness/length/rate CSV (+ figures)
tomography  generate a synthetic dataset or reconstruct a map from one
report      render figures from an existing sweep JSON

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 identifiability error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import cluster, tomography
from .centralspin import load_params
from .cycle import build_process_map
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateConditioningError,
    DomainError,
    EmptyRequestError,
    IdentifiabilityError,
    InvalidChannelError,
    InvalidStateError,
)
from .indist import load_indistinguishability_table
from .quantum import (
    ideal_cycle_map,
    load_process_map,
    process_fidelity,
    save_process_map,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IDENTIFIABILITY = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincluster",
        description="Spin-photon cluster-state protocol simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cycle = sub.add_parser("cycle", help="build the one-cycle process map")
    _common(cycle)
    cycle.add_argument("--out", required=True, help="output map JSON path")

    sweep = sub.add_parser("sweep", help="magnetic-field sweep")
    _common(sweep)
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.add_argument("--b-min", type=float, required=True)
    sweep.add_argument("--b-max", type=float, required=True)
    sweep.add_argument("--points", type=int, required=True)
    sweep.add_argument("--ind-table", default=None,
                       help="CSV b_tesla,i_nd with measured indistinguishability")
    sweep.add_argument("--figures", action="store_true",
                       help="render report figures next to the CSV")

    tomo = sub.add_parser("tomography", help="synthetic tomography")
    _common(tomo)
    tomo.add_argument("--mode", choices=("generate", "reconstruct"), required=True)
    tomo.add_argument("--out", required=True)
    tomo.add_argument("--map", dest="map_path", default=None,
                      help="process-map JSON (generate mode)")
    tomo.add_argument("--data", dest="data_path", default=None,
                      help="dataset JSONL (reconstruct mode)")
    tomo.add_argument("--shots", type=int, default=None,
                      help="photon counts per trace (omit for noiseless)")
    tomo.add_argument("--bins", type=int, default=tomography.DEFAULT_BINS)

    report = sub.add_parser("report", help="render figures from sweep JSON")
    report.add_argument("--sweep-json", required=True)
    report.add_argument("--out-prefix", required=True)
    return parser


def _common(sub) -> None:
    sub.add_argument("--params", required=False, default=None,
                     help="physical-parameter file (key = value)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--samples", type=int, default=20000)
    sub.add_argument("--time-steps", type=int, default=64)


def _summary_path(out_path: str) -> str:
    if out_path.endswith(".json"):
        return out_path[: -len(".json")] + ".summary.json"
    return out_path + ".summary.json"


def cmd_cycle(args) -> int:
    params = load_params(args.params)
    pmap = build_process_map(params, args.samples, args.seed, args.time_steps)
    save_process_map(pmap, args.out)
    ws = cluster.witnesses(pmap)
    summary = {
        "b_ext_tesla": params.b_ext,
        "t_pulse_ps": params.t_pulse,
        "witnesses": dict(zip(("w1", "w2", "w3", "w4"), ws.as_tuple())),
        "fidelity_to_ideal": process_fidelity(pmap, ideal_cycle_map()),
        "seed": args.seed,
        "n_samples": args.samples,
    }
    with open(_summary_path(args.out), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"wrote {args.out} (fidelity to ideal {summary['fidelity_to_ideal']:.4f})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = load_params(args.params)
    if args.points < 2:
        raise ConfigError("sweep needs at least two points")
    if args.b_min < 0.0 or args.b_max < args.b_min:
        raise ConfigError("field range must satisfy 0 <= b_min <= b_max")
    table = (
        load_indistinguishability_table(args.ind_table)
        if args.ind_table
        else None
    )
    b_values = np.linspace(args.b_min, args.b_max, args.points)
    rows = cluster.sweep_field(
        params,
        b_values,
        args.samples,
        args.seed,
        n_time_steps=args.time_steps,
        ind_table=table,
    )
    cluster.write_sweep_csv(rows, args.out)
    json_path = (args.out[:-4] if args.out.endswith(".csv") else args.out) + ".json"
    cluster.write_sweep_json(rows, json_path)
    written = [args.out, json_path]
    if args.figures:
        from .figures import render_sweep_figures

        prefix = args.out[:-4] if args.out.endswith(".csv") else args.out
        written.extend(render_sweep_figures(rows, prefix))
    flagged = sum(1 for r in rows if r.error is not None)
    print("wrote " + ", ".join(written) + (f" ({flagged} rows flagged)" if flagged else ""))
    return EXIT_OK


def cmd_tomography(args) -> int:
    if args.mode == "generate":
        if not args.map_path:
            raise ConfigError("generate mode needs --map")
        params = load_params(args.params)
        pmap = load_process_map(args.map_path)
        dataset = tomography.generate_dataset(
            params,
            pmap,
            bins=args.bins,
            seed=args.seed,
            shots=args.shots,
            n_samples=args.samples,
        )
        tomography.save_dataset_jsonl(dataset, args.out)
        print(f"wrote {args.out} ({len(dataset.traces)} traces)")
        return EXIT_OK
    if not args.data_path:
        raise ConfigError("reconstruct mode needs --data")
    dataset = tomography.load_dataset_jsonl(args.data_path)
    result = tomography.reconstruct_map(dataset)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(result.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out} (residual {result.residual:.3e})")
    return EXIT_OK


def cmd_report(args) -> int:
    from .figures import render_sweep_figures

    with open(args.sweep_json, encoding="utf-8") as fh:
        entries = json.load(fh)
    rows = []
    for entry in entries:
        ws = entry.get("witnesses")
        rows.append(
            cluster.SweepRow(
                b_ext=entry["b_tesla"],
                witnesses=None if ws is None else cluster.WitnessSet(**ws),
                zeta_le=entry.get("zeta_le", math.nan),
                indistinguishability=entry.get("indistinguishability", math.nan),
                rate_ghz=entry.get("rate_ghz", math.nan),
                t_pulse_ps=entry.get("t_pulse_ps", math.nan),
                error=entry.get("error"),
            )
        )
    written = render_sweep_figures(rows, args.out_prefix)
    print("wrote " + ", ".join(written))
    return EXIT_OK


_HANDLERS = {
    "cycle": cmd_cycle,
    "sweep": cmd_sweep,
    "tomography": cmd_tomography,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except IdentifiabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.missing:
            for label in exc.missing:
                print(f"  missing trace: {label}", file=sys.stderr)
        return EXIT_IDENTIFIABILITY
    except (ConfigError, InvalidStateError, FileNotFoundError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, DegenerateConditioningError, DomainError,
            EmptyRequestError, InvalidChannelError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
