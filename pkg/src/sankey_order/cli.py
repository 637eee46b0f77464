"""Command line: ``sankey-order layout|score|bench``.

Exit codes: 0 ok, 1 infeasible input or failed threshold, 2 unreadable input.
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .baselines import BudgetExceeded, brute_force_optimal, fraction, robust_test, write_report
from .graph import GraphError, crossing_report, log_transform
from .io import InputError, load_flows, load_ordering, save_ordering, write_crossing_csv
from .markov import Stage1Config, Stage1Error, run_stage1
from .refine import Stage2Config, run_stage2
from .svg import render_svg

log = logging.getLogger("sankey_order")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


@dataclass
class RunConfig:
    input: Path
    levels: Path | None = None
    cycle: bool | None = None
    log_weights: bool = False
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config = field(default_factory=Stage2Config)
    ordering_out: Path | None = None
    report_out: Path | None = None
    meta_out: Path | None = None
    svg_out: Path | None = None
    oracle: bool = False


def _add_stage_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha1", type=float, default=0.01, help="Stage 1 random mixing factor (default 0.01)")
    p.add_argument("--alpha2", type=float, default=0.1, help="Stage 2 random mixing factor (default 0.1)")
    p.add_argument("--repeats", "-N", type=int, default=100, help="Stage 1 best-in-N repeats (default 100)")
    p.add_argument("--max-sweeps", "-M", type=int, default=100, help="Stage 2 sweep cap (default 100)")
    p.add_argument("--stability-window", type=int, default=3, help="unchanged sweeps that end Stage 2 (default 3)")
    p.add_argument("--seed", type=int, default=0)


def _stage_configs(args) -> tuple[Stage1Config, Stage2Config]:
    return (
        Stage1Config(alpha1=args.alpha1, repeats=args.repeats, seed=args.seed),
        Stage2Config(alpha2=args.alpha2, max_sweeps=args.max_sweeps, stability_window=args.stability_window, seed=args.seed),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sankey-order", description="Weighted crossing reduction for Sankey diagrams.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", help="order the vertices of a flow file")
    p.add_argument("input", type=Path, help="flow JSON, or links CSV together with --levels")
    p.add_argument("--levels", type=Path, help="id,level CSV for CSV input")
    p.add_argument("--cycle", action="store_true", default=None, help="treat last->first links as binding links")
    p.add_argument("--log-weights", action="store_true", help="use max(log10(w), 1e-6) as edge weights")
    _add_stage_flags(p)
    p.add_argument("--out", type=Path, default=Path("ordering.json"), help="ordering JSON (default ordering.json)")
    p.add_argument("--report", type=Path, help="crossing report CSV")
    p.add_argument("--meta", type=Path, help="run metadata JSON (default: <out stem>.meta.json)")
    p.add_argument("--svg", type=Path, help="write an SVG drawing")
    p.add_argument("--oracle", action="store_true", help="also compute the exact optimum when feasible")

    p = sub.add_parser("score", help="crossings of a given ordering")
    p.add_argument("input", type=Path)
    p.add_argument("ordering", type=Path)
    p.add_argument("--levels", type=Path)
    p.add_argument("--cycle", action="store_true", default=None)
    p.add_argument("--log-weights", action="store_true")

    p = sub.add_parser("bench", help="robust test against the exact solver")
    p.add_argument("--grid", default="3x3,3x4,4x3,4x4", help="comma list of <levels>x<vertices> (default 3x3,3x4,4x3,4x4)")
    p.add_argument("--cases", type=int, default=10, help="random cases per grid cell")
    p.add_argument("--density", type=float, default=0.5)
    _add_stage_flags(p)
    p.add_argument("--csv", type=Path, default=Path("bench.csv"))
    p.add_argument("--stage1-ratio", type=float, default=2.0, help="Stage 1 must stay strictly below this ratio")
    p.add_argument("--stage2-ratio", type=float, default=1.5, help="Stage 2 must stay at or below this ratio")
    p.add_argument("--share", type=float, default=0.8, help="required share of passing cases")
    p.add_argument("--budget", type=int, default=10**7)
    return parser


def cmd_layout(cfg: RunConfig) -> int:
    g = load_flows(cfg.input, cfg.levels, cfg.cycle)
    if cfg.log_weights:
        g = log_transform(g)
    s1 = run_stage1(g, cfg.stage1)
    s2 = run_stage2(g, s1.ordering, cfg.stage2)
    print(f"stage 1: weighted {s1.report.weighted:.6g}  unweighted {s1.report.unweighted}")
    print(f"stage 2: weighted {s2.report.weighted:.6g}  unweighted {s2.report.unweighted}  sweeps {s2.sweeps_used}")

    meta = {
        "input": str(cfg.input),
        "cycle": g.is_cycle,
        "log_weights": cfg.log_weights,
        "stage1": asdict(cfg.stage1),
        "stage2": asdict(cfg.stage2),
        "block_base": "(|V_i| - rank) / |V_i|, rank 1 at the top (corrected base formula)",
        "stage1_result": {"weighted": s1.report.weighted, "unweighted": s1.report.unweighted, "best_repeat": s1.best_repeat},
        "stage2_result": {
            "weighted": s2.report.weighted,
            "unweighted": s2.report.unweighted,
            "per_level": list(s2.report.per_level),
            "sweeps_used": s2.sweeps_used,
            "sweeps_run": s2.sweeps_run,
            "best_sweep": s2.best_sweep,
        },
    }
    if cfg.oracle:
        try:
            _, opt = brute_force_optimal(g)
            meta["oracle"] = {"weighted": opt.weighted, "unweighted": opt.unweighted}
            print(f"optimum: weighted {opt.weighted:.6g}  unweighted {opt.unweighted}")
        except BudgetExceeded as exc:
            meta["oracle"] = None
            print(f"optimum: skipped ({exc})")

    if cfg.ordering_out is not None:
        save_ordering(s2.ordering, cfg.ordering_out)
    if cfg.report_out is not None:
        write_crossing_csv(s2.report, cfg.report_out, g.is_cycle)
    meta_out = cfg.meta_out
    if meta_out is None and cfg.ordering_out is not None:
        meta_out = cfg.ordering_out.with_suffix(".meta.json")
    if meta_out is not None:
        meta_out.write_text(json.dumps(meta, indent=1) + "\n")
    if cfg.svg_out is not None:
        render_svg(g, s2.ordering, cfg.svg_out)
    return EXIT_OK


def cmd_score(input_path: Path, ordering_path: Path, levels=None, cycle=None, log_weights=False):
    g = load_flows(input_path, levels, cycle)
    if log_weights:
        g = log_transform(g)
    ordering = load_ordering(ordering_path)
    try:
        report = crossing_report(g, ordering)
    except GraphError as exc:
        raise InputError(f"{ordering_path}: {exc}") from None
    print(f"weighted {report.weighted!r}")
    print(f"unweighted {report.unweighted}")
    return report


def parse_grid(text: str) -> list[tuple[int, int]]:
    cells = []
    for part in text.split(","):
        try:
            n, v = part.lower().split("x")
            cells.append((int(n), int(v)))
        except ValueError:
            raise InputError(f"bad grid cell {part!r}, expected <levels>x<vertices>") from None
    return cells


def cmd_bench(args) -> int:
    cfg1, cfg2 = _stage_configs(args)
    grid = parse_grid(args.grid)
    records = []
    for cell in grid:
        try:
            records += robust_test([cell], args.cases, cfg1, cfg2, args.density, args.budget)
        except BudgetExceeded as exc:
            print(f"cell {cell[0]}x{cell[1]} skipped: {exc}")
    if not records:
        print("no feasible cells")
        return EXIT_FAIL
    write_report(records, args.csv)
    s1 = fraction(records, "stage1", args.stage1_ratio, strict=True)
    s2 = fraction(records, "stage2", args.stage2_ratio, strict=False)
    med = {m: statistics.median(r.reports[m].weighted for r in records) for m in ("stage1", "stage2", "bc", "oracle")}
    ok1, ok2 = s1 >= args.share, s2 >= args.share
    print(f"cases: {len(records)}  report: {args.csv}")
    print(f"{'PASS' if ok1 else 'FAIL'} stage 1 ratio < {args.stage1_ratio}: {s1:.0%} (need {args.share:.0%})")
    print(f"{'PASS' if ok2 else 'FAIL'} stage 2 ratio <= {args.stage2_ratio}: {s2:.0%} (need {args.share:.0%})")
    print("median weighted: " + "  ".join(f"{k} {v:.6g}" for k, v in med.items()))
    return EXIT_OK if ok1 and ok2 else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "layout":
            cfg1, cfg2 = _stage_configs(args)
            return cmd_layout(
                RunConfig(
                    input=args.input, levels=args.levels, cycle=args.cycle, log_weights=args.log_weights,
                    stage1=cfg1, stage2=cfg2, ordering_out=args.out, report_out=args.report,
                    meta_out=args.meta, svg_out=args.svg, oracle=args.oracle,
                )
            )
        if args.command == "score":
            cmd_score(args.input, args.ordering, args.levels, args.cycle, args.log_weights)
            return EXIT_OK
        return cmd_bench(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GraphError, Stage1Error, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
