"""Command-line front end.

Subcommands::

    mbmsim run <preset|config-path> [--out CSV] [--seed N] [--max-frames N]
               [--threads N] [--ber-targets 1e-3,1e-4] [--no-figures]
    mbmsim list-presets
    mbmsim flops <preset|config-path>
    mbmsim report <csv> [--ber-targets ...] [--no-figures]

``run`` simulates a sweep, writes the CSV, renders the BER and FLOP figures
next to it, and prints the text summary.  ``flops`` evaluates the
closed-form complexity models without simulating.  ``report`` re-renders
summary and figures from an existing CSV.  The ``MBMSIM_THREADS``
environment variable sets the default worker count.

Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import complexity
from .config_io import ConfigError, parse_config
from .csv_io import emit_csv, read_csv
from .figures import render_report_figures
from .presets import PRESETS, get_preset
from .reporting import report_summary
from .simulate import SweepConfig, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_sweep(target: str) -> SweepConfig:
    if target.strip().lower() in PRESETS:
        return get_preset(target).sweep
    path = Path(target)
    if not path.exists():
        raise ConfigError(target, None, "neither a preset name nor a config file")
    return parse_config(path)


def _parse_targets(raw: str) -> tuple[float, ...]:
    try:
        targets = tuple(float(t) for t in raw.split(",") if t.strip())
    except ValueError:
        raise ValueError(f"--ber-targets must be comma-separated numbers, got {raw!r}") from None
    if not targets or any(not 0 < t < 1 for t in targets):
        raise ValueError(f"--ber-targets must lie in (0, 1), got {raw!r}")
    return targets


def _cmd_run(args) -> int:
    sweep = _load_sweep(args.target)
    if args.seed is not None:
        sweep = replace(sweep, seed=args.seed)
    if args.max_frames is not None:
        sweep = replace(sweep, max_frames=args.max_frames)
    out = Path(args.out) if args.out else Path(f"{_stem_for(args.target)}_results.csv")
    records = run_sweep(sweep, threads=args.threads)
    emit_csv(records, out)
    written = [out]
    if not args.no_figures:
        written += render_report_figures(records, out)
    print(report_summary(records, targets=args.ber_targets))
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def _stem_for(target: str) -> str:
    if target.strip().lower() in PRESETS:
        return target.strip().lower()
    return Path(target).stem


def _cmd_list_presets(_args) -> int:
    width = max(len(name) for name in PRESETS)
    for name in sorted(PRESETS):
        preset = PRESETS[name]
        mbm = preset.sweep.mbm
        system = (
            f"{mbm.n_r}x{mbm.users}, n_rf={mbm.n_rf}, {mbm.constellation.name}, "
            f"{len(preset.sweep.snr_db)} SNR points"
        )
        print(f"{name:<{width}}  {system:<44} {preset.description}")
    return EXIT_OK


def _cmd_flops(args) -> int:
    sweep = _load_sweep(args.target)
    mbm = sweep.mbm
    n_r, u, m, a = mbm.n_r, mbm.users, mbm.maps, mbm.constellation.size
    print(f"closed-form FLOP models for N_r={n_r}, U={u}, M={m}, |A|={a}")
    print(f"  iic       per-iteration: {complexity.flops_iic_iter(n_r, u, m, a):,}")
    once, per_iter = complexity.flops_map_isd(n_r, u, m)
    print(f"  map-isd   once: {once:,}   per-iteration: {per_iter:,}")
    ks = sorted(
        {d.list_size for d in sweep.detectors if d.kind == "kmap-iic" and d.list_size}
    ) or sorted({1, m // 4, m // 2} - {0})
    for k in ks:
        once, per_iter = complexity.flops_kmap_iic(n_r, u, m, k)
        print(f"  kmap-iic  K={k:<3d} once: {once:,}   per-iteration: {per_iter:,}")
    return EXIT_OK


def _cmd_report(args) -> int:
    rows = read_csv(args.csv)
    print(report_summary(rows, targets=args.ber_targets))
    if not args.no_figures:
        for p in render_report_figures(rows, Path(args.csv)):
            print(f"wrote {p}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbmsim",
        description="Monte Carlo BER and complexity comparison of MBM-mMIMO uplink detectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a sweep; write CSV, figures and a summary")
    run.add_argument("target", help="preset name or config-file path")
    run.add_argument("--out", help="output CSV path (default: <name>_results.csv)")
    run.add_argument("--seed", type=int, help="override the sweep seed")
    run.add_argument("--max-frames", type=int, help="override the per-point frame cap")
    run.add_argument("--threads", type=int, default=None, help="worker processes (default: MBMSIM_THREADS or 1)")
    run.add_argument("--ber-targets", type=_parse_targets, default=(1e-3, 1e-4), help="targets for the gap report")
    run.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    run.set_defaults(func=_cmd_run)

    lp = sub.add_parser("list-presets", help="show the available experiment presets")
    lp.set_defaults(func=_cmd_list_presets)

    fl = sub.add_parser("flops", help="print the closed-form complexity models, no simulation")
    fl.add_argument("target", help="preset name or config-file path")
    fl.set_defaults(func=_cmd_flops)

    rp = sub.add_parser("report", help="summary and figures from an existing results CSV")
    rp.add_argument("csv", help="results CSV written by 'run'")
    rp.add_argument("--ber-targets", type=_parse_targets, default=(1e-3, 1e-4))
    rp.add_argument("--no-figures", action="store_true")
    rp.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
