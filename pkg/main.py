"""
CCI Toolbox - command-line entry point.
Subcommands: generate, discover, evaluate, trace, replay, maag, sweep.
"""

import argparse
import logging
import sys
import time
import traceback
from pathlib import Path
from typing import List, Optional


def _excepthook(exc_type, exc_value, exc_tb):
    """Log unhandled exceptions to stderr instead of silent crash."""
    traceback.print_exception(exc_type, exc_value, exc_tb)


sys.excepthook = _excepthook

from ci import FisherZCi, OracleCi
from config import AppConfig, ensure_config_exists
from datagen import GenConfig, replicate_seed
from dsep_oracle import true_maag
from errors import CciError, InputError
from utils import (
    ALGORITHMS,
    ReportRow,
    SweepConfig,
    audit_soundness,
    evaluate_against_truth,
    export_dataset_to_csv,
    export_report_to_csv,
    export_report_to_excel,
    format_human_trace,
    format_mixed_graph,
    get_coef_range,
    get_default_jobs,
    get_default_out_dir,
    get_latents_max,
    get_max_cond_size,
    get_record_wall_time,
    get_select_max,
    read_dataset,
    read_graph_file,
    read_manifest,
    read_trace_lines,
    replay_trace,
    report_header,
    run_algorithm,
    run_sweep,
    simulate,
    summarize,
    write_graph_file,
    write_manifest,
    write_trace,
)

logger = logging.getLogger("cci")

_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warn": logging.WARNING, "error": logging.ERROR}


def _log_fn(msg: str, lvl: str = "info") -> None:
    logger.log(_LEVELS.get(lvl, logging.INFO), msg)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _out_dir(args) -> Path:
    path = Path(args.out_dir or get_default_out_dir())
    path.mkdir(parents=True, exist_ok=True)
    return path


def _record_wall_time(args) -> bool:
    return bool(args.timing or get_record_wall_time())


def _load(path: str, kind: str):
    graph, err = read_graph_file(path, kind)
    if err:
        raise InputError(err)
    return graph


# =============================================================================
# Subcommands
# =============================================================================


def _gen_config(args) -> GenConfig:
    return GenConfig(
        p=args.p,
        expected_neighborhood=args.en,
        cyclic=args.cyclic,
        coef_range=get_coef_range(),
        n_latent_max=args.latents_max if args.latents_max is not None else get_latents_max(),
        n_select_max=args.select_max if args.select_max is not None else get_select_max(),
        seed=args.seed,
    )


def cmd_generate(args) -> int:
    gen = _gen_config(args)
    if args.n < 1:
        raise InputError(f"Sample count must be positive, got {args.n}")
    start = time.perf_counter()
    sim = simulate(gen, args.n, args.replicate, log_fn=_log_fn)
    out = _out_dir(args)
    write_graph_file(out / AppConfig.GRAPH_FILE, sim.truth)
    export_dataset_to_csv(sim.data, out / AppConfig.DATA_FILE)
    manifest = {
        "command": "generate",
        "version": AppConfig.APP_VERSION,
        "p": gen.p,
        "en": gen.expected_neighborhood,
        "cyclic": gen.cyclic,
        "n": args.n,
        "seed": gen.seed,
        "replicate": "" if args.replicate is None else args.replicate,
        "replicate_seed": replicate_seed(gen.seed, args.replicate),
        "latents_max": gen.n_latent_max,
        "select_max": gen.n_select_max,
        "coef_range": gen.coef_range,
        "latent": sim.truth.latent,
        "selection": sim.truth.selection,
        "n_raw": sim.data.n_raw,
        "n_retained": sim.data.n,
        "graph_file": AppConfig.GRAPH_FILE,
        "data_file": AppConfig.DATA_FILE,
    }
    if _record_wall_time(args):
        manifest["wall_ms"] = int(round((time.perf_counter() - start) * 1000))
    write_manifest(manifest, out / AppConfig.MANIFEST_FILE)
    logger.info("Wrote %s, %s and %s to %s (%d of %d samples retained)",
                AppConfig.GRAPH_FILE, AppConfig.DATA_FILE, AppConfig.MANIFEST_FILE, out, sim.data.n, args.n)
    return 0


def cmd_discover(args) -> int:
    if bool(args.graph) == bool(args.data):
        raise InputError("Give exactly one of --graph (with --oracle) or --data")
    if args.graph and not args.oracle:
        raise InputError("--graph needs --oracle; discovery from data uses --data")
    if args.oracle and args.max_cond_size is not None:
        raise InputError("--max-cond-size applies to data runs only")
    if args.oracle:
        truth = _load(args.graph, "directed")
        ci = OracleCi(truth)
        names = truth.observed_names()
        source = {"graph_file": args.graph, "oracle": True}
        max_cond = None
    else:
        data, err = read_dataset(args.data)
        if err:
            raise InputError(err)
        ci = FisherZCi(data, args.alpha)
        names = [str(c) for c in data.frame.columns]
        source = {"data_file": args.data, "n": data.n, "alpha": ci.alpha}
        max_cond = args.max_cond_size if args.max_cond_size is not None else get_max_cond_size()
        logger.info("Fisher-z on %d samples, alpha=%g", data.n, ci.alpha)

    start = time.perf_counter()
    state = run_algorithm(args.algorithm, ci, ci.p_obs, names, max_cond, _log_fn)
    wall_ms = int(round((time.perf_counter() - start) * 1000))

    out = _out_dir(args)
    write_graph_file(out / AppConfig.OUTPUT_GRAPH_FILE, state.graph)
    write_trace(state.trace, out / AppConfig.TRACE_FILE)
    manifest = {"command": "discover", "version": AppConfig.APP_VERSION, "algorithm": args.algorithm, **source,
                "max_cond_size": "" if max_cond is None else max_cond,
                "n_ci_queries": ci.query_count, "n_edges": state.graph.edge_count(),
                "output_file": AppConfig.OUTPUT_GRAPH_FILE, "trace_file": AppConfig.TRACE_FILE}
    if _record_wall_time(args):
        manifest["wall_ms"] = wall_ms
    write_manifest(manifest, out / AppConfig.MANIFEST_FILE)
    sys.stdout.write(format_mixed_graph(state.graph))
    logger.info("%d CI queries; output written to %s", ci.query_count, out)
    return 0


def _sibling_manifest(path: str, command: str) -> dict:
    """Manifest the given subcommand wrote next to ``path``, or {} when there is none."""
    manifest = Path(path).parent / AppConfig.MANIFEST_FILE
    values = read_manifest(manifest) if manifest.is_file() else {}
    return values if values.get("command") == command else {}


def _manifest_int(manifest: dict, *keys: str) -> int:
    for key in keys:
        value = manifest.get(key, "")
        if value:
            try:
                return int(value)
            except ValueError:
                raise InputError(f"Manifest value {key}={value!r} is not an integer")
    return 0


def cmd_evaluate(args) -> int:
    """Report row on stdout; the corrections and audit findings go to stderr."""
    out_graph = _load(args.output, "mixed")
    truth = _load(args.truth, "directed")
    reference = _load(args.reference, "mixed") if args.reference else None
    run = _sibling_manifest(args.output, "discover")
    gen = _sibling_manifest(args.truth, "generate")
    algorithm = args.algorithm or run.get("algorithm") or "cci"
    if algorithm not in ALGORITHMS:
        raise InputError(f"Unknown algorithm {algorithm!r} in {AppConfig.MANIFEST_FILE}")
    result = evaluate_against_truth(out_graph, truth, algorithm, reference)

    seed = args.seed if args.seed is not None else _manifest_int(gen, "replicate_seed", "seed")
    n = args.n if args.n is not None else _manifest_int(run, "n")
    cyclic = gen["cyclic"] == "1" if gen.get("cyclic") else truth.has_cycle()
    row = ReportRow.build(seed, truth.p, n, cyclic, algorithm, result.shd,
                          _manifest_int(run, "n_ci_queries"), _manifest_int(run, "wall_ms"))
    sys.stdout.write(report_header() + "\n" + row.to_csv_line() + "\n")

    corr = result.correction
    details = [
        f"corrections: {corr.n_fixes} ({corr.n_arrow_fixed} arrowhead, {corr.n_tail_fixed} tail)",
        f"orientation_fraction={result.orientation_fraction:.4f}",
    ]
    for (i, j), v, old, new in corr.fixes:
        details.append(f"fix {out_graph.vertex_name(i)}-{out_graph.vertex_name(j)} at "
                       f"{out_graph.vertex_name(v)}: {old.value} -> {new.value}")
    if args.audit:
        details.extend(f"audit {problem}" for problem in audit_soundness(out_graph, truth))
    sys.stderr.write("\n".join(details) + "\n")
    return 0


def cmd_trace(args) -> int:
    truth = _load(args.graph, "directed")
    state = run_algorithm(args.algorithm, OracleCi(truth), len(truth.observed), truth.observed_names())
    sys.stdout.write("\n".join(format_human_trace(state)) + "\n")
    if args.out_dir:
        write_trace(state.trace, _out_dir(args) / AppConfig.TRACE_FILE)
    return 0


def cmd_replay(args) -> int:
    path = Path(args.trace)
    if not path.exists():
        raise InputError(f"File not found: {path}")
    entries = read_trace_lines(path.read_text(encoding="utf-8").splitlines())
    sys.stdout.write(format_mixed_graph(replay_trace(entries, args.p)))
    return 0


def cmd_maag(args) -> int:
    truth = _load(args.graph, "directed")
    sys.stdout.write(format_mixed_graph(true_maag(truth).graph))
    return 0


def cmd_sweep(args) -> int:
    algorithms = tuple(a.strip() for a in args.algorithm.split(",") if a.strip())
    cfg = SweepConfig(
        gen=_gen_config(args),
        n=args.n,
        replicates=args.replicates,
        algorithms=algorithms,
        oracle=args.oracle,
        alpha=args.alpha,
        max_cond_size=None if args.oracle else (args.max_cond_size if args.max_cond_size is not None
                                                 else get_max_cond_size()),
        record_wall_time=_record_wall_time(args),
        jobs=args.jobs or get_default_jobs(),
    )
    rows = run_sweep(cfg, _log_fn)
    out = _out_dir(args)
    export_report_to_csv(rows, out / AppConfig.REPORT_FILE)
    if args.xlsx:
        export_report_to_excel(rows, out / Path(AppConfig.REPORT_FILE).with_suffix(".xlsx").name)
    write_manifest({
        "command": "sweep",
        "version": AppConfig.APP_VERSION,
        "p": cfg.gen.p,
        "en": cfg.gen.expected_neighborhood,
        "cyclic": cfg.gen.cyclic,
        "n": cfg.n,
        "seed": cfg.gen.seed,
        "replicates": cfg.replicates,
        "algorithms": cfg.algorithms,
        "oracle": cfg.oracle,
        "alpha": "" if cfg.alpha is None else cfg.alpha,
        "max_cond_size": "" if cfg.max_cond_size is None else cfg.max_cond_size,
        "rows": len(rows),
        "report_file": AppConfig.REPORT_FILE,
    }, out / AppConfig.MANIFEST_FILE)
    for line in summarize(rows):
        logger.info(line)
    return 0


# =============================================================================
# Argument parsing
# =============================================================================


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _add_generation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=int, required=True, help="number of vertices (>= 2)")
    p.add_argument("--en", type=float, default=2.0, help="expected neighbourhood size")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--cyclic", dest="cyclic", action="store_true", default=True)
    group.add_argument("--acyclic", dest="cyclic", action="store_false")
    p.add_argument("--n", type=int, default=5000, help="samples before selection")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--latents-max", type=int, default=None)
    p.add_argument("--select-max", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cci", description=f"{AppConfig.APP_NAME} {AppConfig.APP_VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=AppConfig.APP_VERSION)
    parser.add_argument("--init-config", action="store_true", help="write a default config.json if missing")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", help="random system, samples and manifest")
    _add_generation_flags(p)
    p.add_argument("--replicate", type=int, default=None, help="regenerate one replicate of a sweep")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("discover", help="run a discovery algorithm")
    p.add_argument("--graph", help="directed system file (oracle mode)")
    p.add_argument("--data", help="dataset CSV (Fisher-z mode)")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--max-cond-size", type=int, default=None)
    p.add_argument("--algorithm", default="cci", choices=sorted(ALGORITHMS))
    p.add_argument("--out-dir", default=None)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("evaluate", help="score an output graph against a ground truth")
    p.add_argument("--output", required=True, help="mixed graph file")
    p.add_argument("--truth", required=True, help="directed system file")
    p.add_argument("--reference", default=None, help="reference mixed graph (default: corrected oracle run)")
    p.add_argument("--algorithm", default=None, choices=sorted(ALGORITHMS),
                   help="default: the discover manifest next to --output, else cci")
    p.add_argument("--seed", type=int, default=None, help="report seed (default: the generate manifest next to --truth)")
    p.add_argument("--n", type=int, default=None, help="report sample count (default: the discover manifest)")
    p.add_argument("--audit", action="store_true", help="also list soundness problems")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("trace", help="readable step-by-step oracle run")
    p.add_argument("--graph", required=True)
    p.add_argument("--algorithm", default="cci", choices=sorted(ALGORITHMS))
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("replay", help="rebuild an output graph from a trace log")
    p.add_argument("--trace", required=True)
    p.add_argument("--p", type=int, required=True, help="observed vertex count")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("maag", help="print the true MAAG of a directed system")
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_maag)

    p = sub.add_parser("sweep", help="seeded replicates scored against corrected oracle graphs")
    _add_generation_flags(p)
    p.add_argument("--replicates", type=_positive_int, default=10)
    p.add_argument("--algorithm", default="cci", help="comma-separated: " + ",".join(ALGORITHMS))
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--max-cond-size", type=int, default=None)
    p.add_argument("--jobs", type=_positive_int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--xlsx", action="store_true", help="also write the report as Excel")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    if args.init_config:
        ensure_config_exists()
    if not getattr(args, "func", None):
        if args.init_config:
            return 0
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except CciError as e:
        logger.error("%s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
