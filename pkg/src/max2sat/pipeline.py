"""Batch pipeline behind the command line: generate, solve, anneal, analyze.

Everything lands under the config's output directory::

    manifest.json             ensemble groups, seeds, realized alpha
    instances/<label>.jsonl   one file per group
    exact.csv                 branch-and-bound results
    anneal.csv                annealer run statistics
    anneal_reads.jsonl        per-read violation counts
    analysis/<figure>.csv     tables (and .json for plotters)

Columns whose names contain "elapsed" or "cpu" hold wall or CPU times; all
other columns are functions of the config alone.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from . import analysis as an
from .anneal import AnnealSchedule, run_instance
from .config import ExperimentConfig, ensemble_specs
from .ensemble import CapacityError, EnsembleSpec, derive_seed, generate_instances
from .exact import branch_and_bound
from .formula import Instance, dumps_instance, read_jsonl
from .ising import ControlErrorModel

log = logging.getLogger(__name__)

FIGURES = ("psat", "window", "tts-scaling", "collapse", "percentiles", "correlation",
           "density", "rho")
TIMING_MARKERS = ("elapsed", "cpu")
EXACT_COLUMNS = ("instance_id", "optimum", "nodes_expanded", "elapsed_ns", "optimal_flag",
                 "lower_bound")
ANNEAL_COLUMNS = ("instance_id", "reads", "successes", "p_success", "t_f", "sweeps",
                  "noise_sigma_h", "noise_sigma_J", "seed", "scale_factor", "optimum",
                  "cpu_ns")


class ValidationError(ValueError):
    """Inputs exist but do not fit together (missing rows, bad ids, capacity)."""


def is_timing_column(name: str) -> bool:
    return any(m in name for m in TIMING_MARKERS)


# --- small io helpers ---------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns: Iterable[str], rows: Iterable[dict]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = list(columns)
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])
            count += 1
    return count


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if not math.isfinite(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=1, sort_keys=True) + "\n")


def _pool_map(fn: Callable, items: list, workers: int) -> list:
    """Order-preserving map, in-process for one worker."""
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (8 * workers))))


# --- generate -------------------------------------------------------------------------

def _group_record(spec: EnsembleSpec) -> dict:
    return {
        "label": spec.label, "file": f"instances/{spec.label}.jsonl",
        "kind": spec.kind, "ensemble": spec.ensemble_name, "n": spec.n,
        "alpha": spec.nominal_alpha, "m": spec.n_clauses,
        "realized_alpha": spec.realized_alpha, "count": spec.count, "seed": spec.seed,
        "capacity": spec.capacity, "unsat_by_construction": spec.unsat_by_construction,
        "subset": list(spec.subset) if spec.subset is not None else None,
    }


def _generate_group(args) -> int:
    spec, path = args
    with Path(path).open("w") as fh:
        count = 0
        for inst in generate_instances(spec):
            fh.write(dumps_instance(inst) + "\n")
            count += 1
    return count


def cmd_generate(cfg: ExperimentConfig) -> dict:
    """Write one JSONL file per ensemble group plus manifest.json."""
    specs = ensemble_specs(cfg)
    labels = [s.label for s in specs]
    dup = {x for x in labels if labels.count(x) > 1}
    if dup:
        raise ValidationError(f"duplicate ensemble groups: {sorted(dup)}")
    for s in specs:
        if s.n_clauses > s.capacity:
            raise CapacityError(
                f"{s.label}: M={s.n_clauses} exceeds the {s.capacity} distinct clauses "
                f"available on {len(s.pairs)} variable pairs (maximum clause density "
                f"{s.capacity}/{s.n})")
    out = Path(cfg.out)
    (out / "instances").mkdir(parents=True, exist_ok=True)
    jobs = [(s, str(out / "instances" / f"{s.label}.jsonl")) for s in specs]
    counts = _pool_map(_generate_group, jobs, cfg.workers)
    manifest = {"seed": cfg.seed, "config": cfg.to_dict(),
                "groups": [_group_record(s) for s in specs],
                "instances": int(sum(counts))}
    _write_json(out / "manifest.json", manifest)
    log.info("generated %d instances in %d groups (seed %d)", manifest["instances"],
             len(specs), cfg.seed)
    return manifest


# --- loading generated data -------------------------------------------------------------

@dataclass(frozen=True)
class Group:
    label: str
    kind: str
    ensemble: str
    n: int
    alpha: float
    m: int


def load_manifest(out: Path) -> dict:
    path = out / "manifest.json"
    if not path.exists():
        raise ValidationError(f"{path} not found; run generate first")
    return json.loads(path.read_text())


def iter_instances(out: Path) -> Iterator[tuple[Group, Instance]]:
    manifest = load_manifest(out)
    for g in manifest["groups"]:
        grp = Group(g["label"], g["kind"], g["ensemble"], g["n"], g["alpha"], g["m"])
        path = out / g["file"]
        if not path.exists():
            raise ValidationError(f"instance file {path} missing")
        with path.open() as fh:
            for inst in read_jsonl(fh):
                yield grp, inst


# --- solve ----------------------------------------------------------------------------------

def _solve_one(args) -> dict:
    rec, budget_s, repeats = args
    inst = Instance.from_record(rec)
    results = [branch_and_bound(inst.formula, budget_s) for _ in range(repeats)]
    first = results[0]
    return {"instance_id": inst.id, "optimum": first.optimum,
            "nodes_expanded": first.nodes_expanded,
            "elapsed_ns": int(round(statistics.median(r.elapsed for r in results) * 1e9)),
            "optimal_flag": first.optimal, "lower_bound": first.lower_bound}


def cmd_solve(cfg: ExperimentConfig) -> dict:
    """Exact optimum of every instance; returns counts incl. budget exhaustion."""
    out = Path(cfg.out)
    if cfg.solver.repeats < 1:
        raise ValidationError("solver.repeats must be >= 1")
    budget = None if cfg.solver.budget_ms is None else cfg.solver.budget_ms / 1000.0
    jobs = [(inst.to_record(), budget, cfg.solver.repeats) for _, inst in iter_instances(out)]
    rows = _pool_map(_solve_one, jobs, cfg.workers)
    _write_csv(out / "exact.csv", EXACT_COLUMNS, rows)
    exhausted = sum(1 for r in rows if not r["optimal_flag"])
    if exhausted:
        log.warning("%d of %d instances hit the budget; rows flagged optimal_flag=0",
                    exhausted, len(rows))
    return {"solved": len(rows) - exhausted, "exhausted": exhausted}


def load_exact(out: Path) -> dict[str, dict]:
    path = out / "exact.csv"
    if not path.exists():
        raise ValidationError(f"{path} not found; run solve first")
    rows = {}
    for r in _read_csv(path):
        if r["instance_id"] in rows:
            raise ValidationError(f"duplicate exact row {r['instance_id']}")
        rows[r["instance_id"]] = {
            "optimum": int(r["optimum"]), "nodes": int(r["nodes_expanded"]),
            "elapsed_ns": int(r["elapsed_ns"]), "optimal": r["optimal_flag"] == "1",
            "lower_bound": int(r["lower_bound"])}
    return rows


# --- anneal -------------------------------------------------------------------------------------

def _anneal_one(args) -> tuple[dict, dict]:
    rec, optimum, a, master = args
    inst = Instance.from_record(rec)
    lo, hi = inst.seed & 0xFFFFFFFF, inst.seed >> 32
    seed = derive_seed(master, lo, hi, 0)
    noise = None
    if a["noise_sigma_h"] or a["noise_sigma_j"]:
        noise = ControlErrorModel(a["noise_sigma_h"], a["noise_sigma_j"],
                                  derive_seed(master, lo, hi, 1))
    sched = AnnealSchedule(a["sweeps"], a["beta_initial"], a["beta_final"])
    st = run_instance(inst.formula, sched, a["reads"], noise, seed, optimum, a["t_f"])
    row = {"instance_id": inst.id, "reads": st.reads, "successes": st.successes,
           "p_success": st.p_success, "t_f": st.t_f, "sweeps": st.sweeps,
           "noise_sigma_h": st.noise_sigma_h, "noise_sigma_J": st.noise_sigma_J,
           "seed": st.seed, "scale_factor": st.scale_factor, "optimum": optimum,
           "cpu_ns": int(round(st.cpu_seconds * 1e9))}
    return row, {"id": inst.id, "violations": list(st.violations_per_read)}


def cmd_anneal(cfg: ExperimentConfig) -> dict:
    """Anneal every instance whose exact optimum is proven."""
    out = Path(cfg.out)
    exact = load_exact(out)
    a = cfg.anneal
    settings = {"sweeps": a.sweeps, "beta_initial": a.beta_initial,
                "beta_final": a.beta_final, "reads": a.reads,
                "noise_sigma_h": a.noise_sigma_h, "noise_sigma_j": a.noise_sigma_j,
                "t_f": a.t_f}
    jobs, missing, unproven = [], [], 0
    for _, inst in iter_instances(out):
        row = exact.get(inst.id)
        if row is None:
            missing.append(inst.id)
            continue
        if not row["optimal"]:
            unproven += 1
            continue
        jobs.append((inst.to_record(), row["optimum"], settings, cfg.seed))
    if missing:
        raise ValidationError(f"{len(missing)} instances have no exact result, "
                              f"e.g. {missing[:3]}")
    if unproven:
        log.warning("skipping %d instances without a proven optimum", unproven)
    results = _pool_map(_anneal_one, jobs, cfg.workers)
    _write_csv(out / "anneal.csv", ANNEAL_COLUMNS, (r for r, _ in results))
    with (out / "anneal_reads.jsonl").open("w") as fh:
        for _, reads in results:
            fh.write(json.dumps(reads, separators=(",", ":")) + "\n")
    return {"annealed": len(results), "skipped": unproven}


def load_anneal(out: Path) -> dict[str, dict]:
    path = out / "anneal.csv"
    if not path.exists():
        raise ValidationError(f"{path} not found; run anneal first")
    return {r["instance_id"]: {"p": float(r["p_success"]), "reads": int(r["reads"]),
                               "t_f": float(r["t_f"])} for r in _read_csv(path)}


def load_reads(out: Path) -> dict[str, list[int]]:
    path = out / "anneal_reads.jsonl"
    if not path.exists():
        raise ValidationError(f"{path} not found; run anneal first")
    with path.open() as fh:
        return {d["id"]: d["violations"] for d in map(json.loads, fh) if d}


# --- analyze -------------------------------------------------------------------------------------

@dataclass
class _Tables:
    groups: list[Group]
    members: dict[str, list[Instance]]
    exact: dict[str, dict] | None
    anneal: dict[str, dict] | None

    def need_exact(self) -> dict[str, dict]:
        if self.exact is None:
            raise ValidationError("exact.csv is required for this figure")
        return self.exact

    def need_anneal(self) -> dict[str, dict]:
        if self.anneal is None:
            raise ValidationError("anneal.csv is required for this figure")
        return self.anneal


def _load_tables(out: Path) -> _Tables:
    groups: dict[str, Group] = {}
    members: dict[str, list[Instance]] = {}
    for g, inst in iter_instances(out):
        groups.setdefault(g.label, g)
        members.setdefault(g.label, []).append(inst)
    exact = load_exact(out) if (out / "exact.csv").exists() else None
    anneal = load_anneal(out) if (out / "anneal.csv").exists() else None
    ids = {i.id for v in members.values() for i in v}
    for name, table in (("exact.csv", exact), ("anneal.csv", anneal)):
        if table is not None:
            stray = set(table) - ids
            if stray:
                raise ValidationError(f"{name} has rows for unknown instances, "
                                      f"e.g. {sorted(stray)[:3]}")
    return _Tables(list(groups.values()), members, exact, anneal)


def _group_key(g: Group) -> dict:
    return {"ensemble": g.ensemble, "n": g.n, "alpha": g.alpha, "m": g.m}


def _series(groups: list[Group], exclude_fixed: bool = True) -> dict[tuple[str, int], list[Group]]:
    out: dict[tuple[str, int], list[Group]] = {}
    for g in groups:
        if exclude_fixed and g.kind == "fixed_M":
            continue
        out.setdefault((g.ensemble, g.n), []).append(g)
    return {k: sorted(v, key=lambda g: g.alpha) for k, v in sorted(out.items())}


def _psat_rows(t: _Tables) -> list[dict]:
    exact = t.need_exact()
    rows = []
    for g in t.groups:
        opts = [exact[i.id] for i in t.members[g.label] if i.id in exact]
        decided = [r for r in opts if r["optimal"] or r["lower_bound"] > 0]
        sat = sum(1 for r in decided if r["optimum"] == 0)
        rows.append({**_group_key(g), "instances": len(t.members[g.label]),
                     "decided": len(decided), "sat": sat,
                     "psat": sat / len(decided) if decided else None})
    return rows


def _fig_psat(t: _Tables, cfg: ExperimentConfig):
    rows = _psat_rows(t)
    by = {(r["ensemble"], r["n"], r["alpha"]): r for r in rows}
    series = [{"label": f"{e} N={n}", "ensemble": e, "n": n,
               "x": [g.alpha for g in gs], "y": [by[(e, n, g.alpha)]["psat"] for g in gs]}
              for (e, n), gs in _series(t.groups).items()]
    cols = ("ensemble", "n", "alpha", "m", "instances", "decided", "sat", "psat")
    return cols, rows, {"series": series}


def _window_rows(curves: dict[tuple[str, int], list[tuple[float, float]]], source: str,
                 high: float, low: float) -> tuple[list[dict], dict]:
    rows, widths = [], {}
    for (e, n), curve in curves.items():
        w = an.scaling_window(curve, high, low)
        rows.append({"source": source, "ensemble": e, "n": n, "high": high, "low": low,
                     "alpha_left": w.alpha_left, "alpha_right": w.alpha_right,
                     "width": w.width})
        if w.width is not None and w.width > 0:
            widths.setdefault(e, []).append((n, w.width))
    fits = {}
    for e, pts in widths.items():
        if len(pts) >= 2:
            x, p = an.power_law_fit([a for a, _ in pts], [b for _, b in pts])
            fits[f"{source}/{e}"] = {"exponent": x, "prefactor": p, "points": len(pts)}
    return rows, fits


def _fig_window(t: _Tables, cfg: ExperimentConfig):
    cols = ("source", "ensemble", "n", "high", "low", "alpha_left", "alpha_right", "width")
    rows, fits = [], {}
    if t.exact is not None:
        psat = {(r["ensemble"], r["n"], r["alpha"]): r["psat"] for r in _psat_rows(t)}
        curves = {k: [(g.alpha, psat[(k[0], k[1], g.alpha)]) for g in gs
                      if psat[(k[0], k[1], g.alpha)] is not None]
                  for k, gs in _series(t.groups).items()}
        hi, lo = cfg.analysis.thresholds
        r, f = _window_rows(curves, "psat", hi, lo)
        rows += r
        fits.update(f)
    if t.anneal is not None and cfg.analysis.anneal_thresholds:
        curves = {}
        for k, gs in _series(t.groups).items():
            pts = []
            for g in gs:
                ps = [t.anneal[i.id]["p"] for i in t.members[g.label] if i.id in t.anneal]
                if ps:
                    pts.append((g.alpha, float(np.mean(ps))))
            curves[k] = pts
        hi, lo = cfg.analysis.anneal_thresholds
        r, f = _window_rows(curves, "anneal_p", hi, lo)
        rows += r
        fits.update(f)
    if not rows:
        raise ValidationError("window needs exact.csv, or anneal.csv with anneal_thresholds set")
    return cols, rows, {"windows": rows, "power_law": fits}


def _group_stats(t: _Tables, cfg: ExperimentConfig) -> list[dict]:
    rows = []
    pd = cfg.analysis.p_desired
    for g in t.groups:
        ids = [i.id for i in t.members[g.label]]
        row = {**_group_key(g), "instances": len(ids)}
        if t.anneal is not None:
            ps = [t.anneal[i]["p"] for i in ids if i in t.anneal]
            if ps:
                tf = t.anneal[ids[0]]["t_f"] if ids[0] in t.anneal else cfg.anneal.t_f
                rec = an.tts(float(np.mean(ps)), pd, tf)
                row.update(mean_p=float(np.mean(ps)), median_p=float(np.median(ps)),
                           k=rec.k, tts_s=rec.t_soln)
        if t.exact is not None:
            ex = [t.exact[i] for i in ids if i in t.exact and t.exact[i]["optimal"]]
            if ex:
                row.update(exact_mean_nodes=float(np.mean([r["nodes"] for r in ex])),
                           exact_mean_elapsed_s=float(np.mean([r["elapsed_ns"] for r in ex])) / 1e9)
        rows.append(row)
    return rows


def _fit_rows(stats: list[dict], column: str, ensemble: str) -> dict | None:
    pts = [r for r in stats if r["ensemble"] == ensemble and r.get(column) is not None
           and math.isfinite(r[column]) and r[column] > 0]
    if len(pts) < 5 or len({r["n"] for r in pts}) < 2:
        return None
    m = an.fit("tts_ansatz", [r["alpha"] for r in pts], [r["n"] for r in pts],
               [r[column] for r in pts], seed=0)
    return {**m.parameters, "r_squared": m.r_squared, "points": len(pts)}


def _fig_tts(t: _Tables, cfg: ExperimentConfig):
    stats = _group_stats(t, cfg)
    cols = ("ensemble", "n", "alpha", "m", "instances", "mean_p", "median_p", "k", "tts_s",
            "exact_mean_nodes", "exact_mean_elapsed_s")
    fits = {}
    for e in sorted({r["ensemble"] for r in stats if not r["ensemble"].startswith("fixed_M")}):
        for column, name in (("tts_s", "anneal_tts"), ("exact_mean_nodes", "exact_nodes"),
                             ("exact_mean_elapsed_s", "exact_elapsed")):
            fits[f"{e}/{name}"] = _fit_rows(stats, column, e)
    return cols, stats, {"groups": stats, "fits": fits}


def _fig_collapse(t: _Tables, cfg: ExperimentConfig):
    stats = [r for r in _group_stats(t, cfg) if not r["ensemble"].startswith("fixed_M")]
    grid = cfg.analysis.collapse_grid
    rows, summary = [], {}
    for e in sorted({r["ensemble"] for r in stats}):
        mine = [r for r in stats if r["ensemble"] == e]
        jobs = []
        pts = [r for r in mine if r.get("mean_p") is not None and 0 < r["mean_p"] < 1]
        if len({r["n"] for r in pts}) >= 2:
            jobs.append(("anneal_mean_p", "prob_ansatz", pts, "mean_p", None))
        fitted = _fit_rows(stats, "exact_mean_nodes", e)
        pts = [r for r in mine if r.get("exact_mean_nodes")]
        if fitted and len({r["n"] for r in pts}) >= 2:
            jobs.append(("exact_mean_nodes", "tts_ansatz", pts, "exact_mean_nodes",
                         {"A": fitted["A"]}))
        for quantity, form, pts, col, params in jobs:
            res = an.data_collapse([r["alpha"] for r in pts], [r["n"] for r in pts],
                                   [r[col] for r in pts], form, grid, params)
            summary[f"{e}/{quantity}"] = {"form": form, "exponent": res.exponent,
                                          "residual": res.residual}
            for x, resid in res.residuals.items():
                rows.append({"ensemble": e, "quantity": quantity, "form": form,
                             "exponent": x, "residual": resid,
                             "best": x == res.exponent})
    cols = ("ensemble", "quantity", "form", "exponent", "residual", "best")
    return cols, rows, {"best": summary, "grid": list(grid)}


def _fig_percentiles(t: _Tables, cfg: ExperimentConfig):
    target = cfg.analysis.alpha_target
    levels = cfg.analysis.percentiles
    pd = cfg.analysis.p_desired
    rows = []
    sel = [g for g in t.groups if g.kind != "fixed_M" and abs(g.alpha - target) < 1e-9]
    if not sel:
        raise ValidationError(f"no ensemble groups at alpha={target}")
    for e in sorted({g.ensemble for g in sel}):
        gs = sorted((g for g in sel if g.ensemble == e), key=lambda g: g.n)
        by_n = {g.n: [i.id for i in t.members[g.label]] for g in gs}
        out = {}
        if t.anneal is not None:
            p = {n: [t.anneal[i]["p"] for i in ids if i in t.anneal] for n, ids in by_n.items()}
            p = {n: v for n, v in p.items() if v}
            tf = cfg.anneal.t_f
            tr = lambda x: an.tts(x, pd, tf).t_soln  # noqa: E731
            out["tts_transform_first_s"] = an.percentile_scaling(p, levels, tr, "transform-first", True)
            out["tts_percentile_first_s"] = an.percentile_scaling(p, levels, tr, "percentile-first", True)
        if t.exact is not None:
            ex = {n: [t.exact[i] for i in ids if i in t.exact and t.exact[i]["optimal"]]
                  for n, ids in by_n.items()}
            ex = {n: v for n, v in ex.items() if v}
            out["nodes"] = an.percentile_scaling({n: [r["nodes"] for r in v] for n, v in ex.items()}, levels)
            out["elapsed_s"] = an.percentile_scaling(
                {n: [r["elapsed_ns"] / 1e9 for r in v] for n, v in ex.items()}, levels)
        for q in levels:
            for n in by_n:
                row = {"ensemble": e, "alpha": target, "n": n, "level": q}
                for col, curves in out.items():
                    row[col] = dict(curves[q]).get(n)
                rows.append(row)
    cols = ("ensemble", "alpha", "n", "level", "tts_transform_first_s",
            "tts_percentile_first_s", "nodes", "elapsed_s")
    return cols, rows, {"rows": rows}


def _fig_correlation(t: _Tables, cfg: ExperimentConfig):
    exact, anneal = t.need_exact(), t.need_anneal()
    rows, copulas = [], {}
    for g in t.groups:
        ids = [i.id for i in t.members[g.label]
               if i.id in anneal and i.id in exact and exact[i.id]["optimal"]]
        if len(ids) < 2:
            continue
        hard = [1.0 - anneal[i]["p"] for i in ids]
        nodes = [exact[i]["nodes"] for i in ids]
        elapsed = [exact[i]["elapsed_ns"] for i in ids]
        rn = an.rank_correlation(hard, nodes)
        re_ = an.rank_correlation(hard, elapsed)
        rows.append({**_group_key(g), "instances": len(ids), "spearman_nodes": rn.spearman,
                     "spearman_elapsed": re_.spearman})
        copulas[g.label] = rn.copula
    cols = ("ensemble", "n", "alpha", "m", "instances", "spearman_nodes", "spearman_elapsed")
    return cols, rows, {"rows": rows, "copula_nodes": copulas}


def _fig_density(t: _Tables, cfg: ExperimentConfig):
    bins = cfg.analysis.histogram_bins
    rows, hists = [], {}
    for e in sorted({g.ensemble for g in t.groups if g.kind != "fixed_M"}):
        gs = [g for g in t.groups if g.ensemble == e]
        quantities = []
        if t.anneal is not None:
            pts = [(g.alpha, 1.0 - t.anneal[i.id]["p"]) for g in gs
                   for i in t.members[g.label] if i.id in t.anneal]
            quantities.append(("anneal_failure", pts, (0.0, 1.0)))
        if t.exact is not None:
            pts = [(g.alpha, math.log10(1 + t.exact[i.id]["nodes"])) for g in gs
                   for i in t.members[g.label] if i.id in t.exact and t.exact[i.id]["optimal"]]
            if pts:
                quantities.append(("exact_log10_nodes", pts, (0.0, max(1.0, max(y for _, y in pts)))))
        alphas = sorted({g.alpha for g in gs})
        step = (alphas[1] - alphas[0]) if len(alphas) > 1 else 1.0
        xr = (alphas[0] - step / 2, alphas[-1] + step / 2)
        for name, pts, yr in quantities:
            if not pts:
                continue
            h = an.density_histogram([x for x, _ in pts], [y for _, y in pts],
                                     (len(alphas), bins), (xr, yr))
            hists[f"{e}/{name}"] = {"x_edges": h.x_edges.tolist(), "y_edges": h.y_edges.tolist(),
                                   "density": h.counts.tolist()}
            for ix in range(h.counts.shape[0]):
                for iy in range(h.counts.shape[1]):
                    rows.append({"ensemble": e, "quantity": name,
                                 "x_lo": float(h.x_edges[ix]), "x_hi": float(h.x_edges[ix + 1]),
                                 "y_lo": float(h.y_edges[iy]), "y_hi": float(h.y_edges[iy + 1]),
                                 "density": float(h.counts[ix, iy])})
    if not rows:
        raise ValidationError("density needs exact.csv or anneal.csv")
    cols = ("ensemble", "quantity", "x_lo", "x_hi", "y_lo", "y_hi", "density")
    return cols, rows, {"histograms": hists}


def _fig_rho(t: _Tables, cfg: ExperimentConfig):
    exact = t.need_exact()
    t.need_anneal()
    reads = load_reads(Path(cfg.out))
    rows = []
    for g in t.groups:
        ratios, failed_instances = [], 0
        for inst in t.members[g.label]:
            if inst.id not in reads:
                continue
            opt = exact[inst.id]["optimum"]
            m = inst.formula.m
            bad = [v for v in reads[inst.id] if v > opt]
            if bad:
                failed_instances += 1
            if m - opt > 0:
                ratios += [an.rho_from_violations(m, v, opt) for v in bad]
        rows.append({**_group_key(g), "instances": len(t.members[g.label]),
                     "failed_instances": failed_instances, "failed_reads": len(ratios),
                     "mean_rho": float(np.mean(ratios)) if ratios else None,
                     "min_rho": float(np.min(ratios)) if ratios else None,
                     "frac_ge_inapprox": (float(np.mean([r >= an.INAPPROX_RHO for r in ratios]))
                                          if ratios else None),
                     "frac_ge_ptas": (float(np.mean([r >= an.PTAS_RHO for r in ratios]))
                                      if ratios else None)})
    cols = ("ensemble", "n", "alpha", "m", "instances", "failed_instances", "failed_reads",
            "mean_rho", "min_rho", "frac_ge_inapprox", "frac_ge_ptas")
    return cols, rows, {"rows": rows, "inapprox_rho": an.INAPPROX_RHO,
                        "ptas_rho": an.PTAS_RHO}


_FIGURE_FUNCS = {
    "psat": _fig_psat, "window": _fig_window, "tts-scaling": _fig_tts,
    "collapse": _fig_collapse, "percentiles": _fig_percentiles,
    "correlation": _fig_correlation, "density": _fig_density, "rho": _fig_rho,
}
FIGURE_HELP = {
    "psat": "fraction of satisfiable instances per (N, alpha)",
    "window": "scaling-window edges and width vs N, with a power-law fit",
    "tts-scaling": "time to solution and exact-solver effort per group, with ansatz fits",
    "collapse": "best collapse exponent on the configured grid",
    "percentiles": "percentile curves vs N at the target alpha",
    "correlation": "Spearman rank correlation and copula ranks, annealer vs exact",
    "density": "column-normalised 2-D histograms over alpha",
    "rho": "empirical approximation ratio of failed annealer reads",
}


def cmd_analyze(cfg: ExperimentConfig, which: str) -> list[Path]:
    if which not in _FIGURE_FUNCS:
        raise ValueError(f"unknown figure id {which!r}; choose from {', '.join(FIGURES)}")
    out = Path(cfg.out)
    tables = _load_tables(out)
    cols, rows, data = _FIGURE_FUNCS[which](tables, cfg)
    csv_path = out / "analysis" / f"{which}.csv"
    json_path = out / "analysis" / f"{which}.json"
    _write_csv(csv_path, cols, rows)
    _write_json(json_path, {"figure": which, "seed": cfg.seed, **data})
    return [csv_path, json_path]
