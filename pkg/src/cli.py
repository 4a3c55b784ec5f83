"""
命令行入口
python src/cli.py {gen,run,sweep,fit,validate,exact} ...

退出码: 0 成功; 1 要求见证却被拒绝，或验证套件未通过; 2 用法、解析或定义域错误;
3 运行失败（扫描单元格失败、承诺不成立、阈值超限、不变量被破坏）
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from bench import (
    ALGORITHMS,
    SWEEP_ALGORITHMS,
    fit_sweep,
    read_sweep_csv,
    read_values,
    run_algorithm,
    save_report,
    sweep,
)
from graph_core import FAMILIES, KnownGraph, format_edge_list, gen_graph, read_edge_list, read_pattern
from johnson_walk import element_distinctness_instance, sweep_exact
from run_pool import SweepPool
from triangle_walk import HPattern
from utils.run_utils import (
    CapabilityError,
    DomainError,
    HarnessConfig,
    ParseError,
    QtriError,
    get_logger,
    load_config,
    set_log_level,
)
from validation import SUITES, run_suite

logger = get_logger("qtri.cli")

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_FAILED = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtri", description="Quantum triangle-finding query-complexity lab")
    ap.add_argument("--config", type=str, default=None, help="YAML harness configuration.")
    ap.add_argument("--log-level", type=str, default=None, help="DEBUG, INFO, WARNING or ERROR.")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Write a random instance as an edge list.")
    gen.add_argument("--family", choices=FAMILIES, default="erdos_renyi")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--p", type=float, default=0.5, help="Edge probability.")
    gen.add_argument("--out", type=str, default=None, help="Output path (stdout if omitted).")

    run = sub.add_parser("run", help="Run one algorithm and emit a JSON report.")
    run.add_argument("--alg", choices=ALGORITHMS, required=True)
    run.add_argument("--n", type=int, default=None, help="Instance size when no file is given.")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--graph", type=str, default=None, help="Edge-list input (known graph for gc).")
    run.add_argument("--values", type=str, default=None, help="0/1 file with f for gc.")
    run.add_argument("--pattern", type=str, action="append", default=[], help="Pattern file (repeatable).")
    run.add_argument("--epsilon", type=float, default=None)
    run.add_argument("--delta", type=float, default=None)
    run.add_argument("--epsilon-prime", type=float, default=None)
    run.add_argument("--c0", type=float, default=None)
    run.add_argument("--grover-c", type=float, default=None)
    run.add_argument("--out", type=str, default=None, help="Report path (stdout if omitted).")
    run.add_argument("--timing", action="store_true", help="Record wall time in the report.")
    run.add_argument("--require-witness", action="store_true", help="Exit 1 on a reject outcome.")

    sw = sub.add_parser("sweep", help="Run an algorithm over an n grid and seeds, write CSV.")
    sw.add_argument("--alg", choices=SWEEP_ALGORITHMS, required=True)
    sw.add_argument("--grid", type=int, nargs="+", default=None)
    sw.add_argument("--seeds", type=int, default=None)
    sw.add_argument("--threads", type=int, default=None)
    sw.add_argument("--csv", type=str, required=True)
    sw.add_argument("--allow-partial", action="store_true",
                    help="Write the rows that succeeded even if some cells fail (still exits 3).")

    fit = sub.add_parser("fit", help="Fit log-log slopes from a sweep CSV.")
    fit.add_argument("--csv", type=str, required=True)
    fit.add_argument("--alg", type=str, default=None)

    val = sub.add_parser("validate", help="Run a numeric or Monte-Carlo validation suite.")
    val.add_argument("--lemma", choices=sorted(SUITES) + ["all"], required=True)
    val.add_argument("--grid", choices=["default"], default="default")
    val.add_argument("--csv", type=str, default=None, help="Write the suite table here.")

    ex = sub.add_parser("exact", help="Exact walk sweep on an element-distinctness instance.")
    ex.add_argument("--values", type=int, nargs="+", required=True, help="f(1..n), at most 14 values.")
    ex.add_argument("--r", type=int, required=True)
    ex.add_argument("--t1-max", type=int, default=12)
    ex.add_argument("--t2-max", type=int, default=8)
    ex.add_argument("--csv", type=str, default=None)
    return ap


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _config_with_overrides(config: HarnessConfig, args: argparse.Namespace) -> HarnessConfig:
    overrides = {
        name: getattr(args, name)
        for name in ("epsilon", "delta", "epsilon_prime", "c0", "grover_c")
        if getattr(args, name, None) is not None
    }
    return replace(config, **overrides)


def cmd_gen(args: argparse.Namespace, config: HarnessConfig) -> int:
    g = gen_graph(args.family, args.n, args.seed, args.p)
    _emit(format_edge_list(g), args.out)
    return EXIT_OK


def cmd_run(args: argparse.Namespace, config: HarnessConfig) -> int:
    config = _config_with_overrides(config, args)
    patterns = [HPattern(*read_pattern(path)) for path in args.pattern]
    graph = known = values = None
    if args.graph is not None:
        graph = read_edge_list(args.graph)
    if args.alg == "gc" and graph is not None:
        if args.values is None:
            raise DomainError("gc with --graph needs --values")
        known, values, graph = KnownGraph.from_graph(graph), read_values(args.values), None
    if graph is None and known is None and args.n is None:
        raise DomainError("run needs --n or an input file")

    report = run_algorithm(
        args.alg, args.n or 0, args.seed, config,
        graph=graph, known=known, values=values, patterns=patterns, timing=args.timing,
    )
    if args.out is None:
        sys.stdout.write(report.to_json())
    else:
        save_report(report, args.out)
    if args.require_witness and report.witness is None:
        logger.warning(f"{args.alg} rejected but a witness was required")
        return EXIT_REJECT
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: HarnessConfig) -> int:
    grids = {"combo": config.combo_grid, "walk": config.walk_grid, "gc": config.gc_grid}
    grid = args.grid or grids[args.alg]
    seeds = args.seeds or config.seeds
    # config.threads 已经带上 QTRI_THREADS，命令行参数优先
    pool = SweepPool(args.threads or config.threads)
    table = sweep(args.alg, grid, seeds, config, pool=pool, csv_path=args.csv, allow_partial=args.allow_partial)
    if len(table) < len(grid) * seeds:
        logger.error(f"Partial sweep: {len(table)} of {len(grid) * seeds} cells written to {args.csv}")
        return EXIT_FAILED
    return EXIT_OK


def cmd_fit(args: argparse.Namespace, config: HarnessConfig) -> int:
    fits = fit_sweep(read_sweep_csv(args.csv), args.alg)
    payload = {name: fit.to_dict() for name, fit in fits.items()}
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, config: HarnessConfig) -> int:
    names = sorted(SUITES) if args.lemma == "all" else [args.lemma]
    all_passed = True
    for name in names:
        table, passed = run_suite(name)
        all_passed &= passed
        if args.csv is not None:
            path = Path(args.csv)
            if len(names) > 1:
                path = path.with_name(f"{path.stem}_{name}{path.suffix}")
            path.parent.mkdir(parents=True, exist_ok=True)
            table.to_csv(path, index=False)
        sys.stdout.write(f"{name}: {'pass' if passed else 'FAIL'}\n")
    return EXIT_OK if all_passed else EXIT_REJECT


def cmd_exact(args: argparse.Namespace, config: HarnessConfig) -> int:
    instance = element_distinctness_instance(args.values)
    table = sweep_exact(instance, args.r, range(1, args.t1_max + 1), range(1, args.t2_max + 1))
    if args.csv is not None:
        table.to_csv(args.csv, index=False)
    best = table.loc[table["success_probability"].idxmax()]
    baseline = float(table.iloc[0]["success_probability"])
    summary = {
        "n": instance.n,
        "r": args.r,
        "baseline": baseline,
        "best": {"t1": int(best["t1"]), "t2": int(best["t2"]),
                 "success_probability": float(best["success_probability"])},
    }
    sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "validate": cmd_validate,
    "exact": cmd_exact,
}


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        config = load_config(args.config)
        if args.log_level or config.log_level:
            set_log_level(args.log_level or config.log_level)
        return COMMANDS[args.command](args, config)
    except ParseError as e:
        logger.error(f"Parse error: {e}")
        return EXIT_USAGE
    except (DomainError, CapabilityError, FileNotFoundError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except QtriError as e:
        logger.error(f"Run failed, {type(e).__name__}: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
