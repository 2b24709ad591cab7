"""max2sat command line.

Exit codes: 0 success, 2 config error, 3 capacity/validation error,
4 budget exhausted (partial results written).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .chimera import max_clause_density, select_variables, unsat_band
from .ensemble import CapacityError
from .formula import FormulaError
from .pipeline import (FIGURE_HELP, FIGURES, ValidationError, cmd_analyze, cmd_anneal,
                       cmd_generate, cmd_solve)

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_BUDGET = 0, 2, 3, 4

log = logging.getLogger("max2sat")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--seed", type=int, help="master seed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="max2sat", description="MAX 2-SAT benchmark harness")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write instance ensembles and manifest")
    _common(p)

    p = sub.add_parser("solve", help="exact optimum of every instance")
    _common(p)
    p.add_argument("--budget-ms", type=float, help="per-instance branch-and-bound budget")

    p = sub.add_parser("anneal", help="simulated-annealing runs against exact optima")
    _common(p)
    p.add_argument("--reads", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--noise-sigma-h", type=float)
    p.add_argument("--noise-sigma-j", type=float)

    figs = "\n".join(f"  {k:12s} {FIGURE_HELP[k]}" for k in FIGURES)
    p = sub.add_parser("analyze", help="emit analysis tables",
                       formatter_class=argparse.RawDescriptionHelpFormatter,
                       epilog="figures:\n" + figs)
    _common(p)
    p.add_argument("--figure", required=True, choices=FIGURES + ("all",))
    p.add_argument("--p-desired", type=float)

    p = sub.add_parser("graph-info", help="summarise the hardware graph")
    _common(p)
    p.add_argument("--n", type=int, action="append", help="report bounds for an N-variable subset")

    sub.add_parser("help", help="list subcommands and figure ids")
    return ap


def _load_config(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.ExperimentConfig()
    flags = {k: getattr(args, k, None) for k in
             ("out", "workers", "seed", "budget_ms", "reads", "sweeps", "noise_sigma_h",
              "noise_sigma_j", "p_desired")}
    cfg = cfgmod.override(cfg, **flags)
    if cfg.workers < 1:
        raise cfgmod.ConfigError("workers must be >= 1")
    return cfg


def _graph_info(cfg, ns) -> dict:
    g = cfgmod.make_graph(cfg)
    info = {"rows": g.rows, "cols": g.cols, "qubits": g.n_qubits,
            "active": len(g.active_qubits), "inactive": g.inactive_qubits,
            "edges": len(g.edges),
            "max_degree": max((g.degree(q) for q in g.active_qubits), default=0),
            "subsets": []}
    for n in ns or []:
        sub = select_variables(g, n, cfg.graph.policy, seed=cfg.seed)
        lo, hi = unsat_band(g, sub)
        info["subsets"].append({"n": n, "edges": len(g.internal_edges(sub)),
                                "max_clause_density": str(max_clause_density(g, sub)),
                                "unsat_band": [str(lo), str(hi)]})
    return info


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "help":
        ap.print_help()
        print("\nfigure ids:")
        for k in FIGURES:
            print(f"  {k:12s} {FIGURE_HELP[k]}")
        return EXIT_OK
    try:
        cfg = _load_config(args)
        log.info("seed %d, output %s", cfg.seed, cfg.out)
        if args.command == "generate":
            m = cmd_generate(cfg)
            print(f"{m['instances']} instances in {len(m['groups'])} groups -> {cfg.out}")
        elif args.command == "solve":
            res = cmd_solve(cfg)
            print(f"solved {res['solved']}, budget exhausted {res['exhausted']}")
            if res["exhausted"]:
                return EXIT_BUDGET
        elif args.command == "anneal":
            res = cmd_anneal(cfg)
            print(f"annealed {res['annealed']}, skipped {res['skipped']}")
        elif args.command == "analyze":
            which = FIGURES if args.figure == "all" else (args.figure,)
            for w in which:
                for path in cmd_analyze(cfg, w):
                    print(path)
        elif args.command == "graph-info":
            info = _graph_info(cfg, args.n)
            print(json.dumps(info, indent=1))
            if args.out:
                out = Path(cfg.out)
                out.mkdir(parents=True, exist_ok=True)
                g = cfgmod.make_graph(cfg)
                (out / "graph_edges.csv").write_text(g.edge_csv())
                (out / "graph_mask.json").write_text(json.dumps(g.to_mask_dict()) + "\n")
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, ValidationError, FormulaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
