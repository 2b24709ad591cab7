"""Experiment configuration: one JSON document, CLI flags override fields."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

from .analysis import DEFAULT_EXPONENT_GRID, DEFAULT_PERCENTILES
from .chimera import ChimeraGraph, GraphError, build, load_mask, pseudo_dw1
from .chimera import select_variables
from .ensemble import (STANDARD_ALPHA, STANDARD_N, CapacityError, EnsembleSpec, fixed_M_grid,
                       standard_grid, spec_seed)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GraphConfig:
    mask: str | None = None
    default: str = "pseudo-dw1"  # or "ideal"
    policy: str = "cell-major-prefix"
    rows: int = 4
    cols: int = 4


@dataclass(frozen=True)
class SolverConfig:
    budget_ms: float | None = None
    repeats: int = 10


@dataclass(frozen=True)
class AnnealConfig:
    sweeps: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 5.0
    reads: int = 100
    noise_sigma_h: float = 0.0
    noise_sigma_j: float = 0.0
    t_f: float = 1e-3


@dataclass(frozen=True)
class AnalysisConfig:
    p_desired: float = 0.99
    thresholds: tuple[float, float] = (0.98, 0.3)
    # window thresholds for annealer p-curves; off unless configured
    anneal_thresholds: tuple[float, float] | None = None
    percentiles: tuple[float, ...] = DEFAULT_PERCENTILES
    alpha_target: float = 2.0
    collapse_grid: tuple[float, ...] = DEFAULT_EXPONENT_GRID
    histogram_bins: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "results"
    workers: int = 1
    graph: GraphConfig = GraphConfig()
    ensembles: tuple[dict, ...] = ()
    solver: SolverConfig = SolverConfig()
    anneal: AnnealConfig = AnnealConfig()
    analysis: AnalysisConfig = AnalysisConfig()

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {"graph": GraphConfig, "solver": SolverConfig, "anneal": AnnealConfig,
             "analysis": AnalysisConfig}


def _section(cls, data: dict | None, base_dir: Path):
    data = dict(data or {})
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    for k, v in data.items():
        if isinstance(v, list):
            data[k] = tuple(v)
    if cls is GraphConfig and data.get("mask"):
        p = Path(data["mask"])
        if not p.is_absolute():
            p = base_dir / p
        if not p.exists():
            raise ConfigError(f"mask file {p} does not exist")
        data["mask"] = str(p)
    return cls(**data)


def from_dict(data: dict[str, Any], base_dir: Path | str = ".") -> ExperimentConfig:
    base_dir = Path(base_dir)
    top = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for k, v in data.items():
        if k in _SECTIONS:
            kwargs[k] = _section(_SECTIONS[k], v, base_dir)
        elif k == "ensembles":
            if not isinstance(v, list):
                raise ConfigError("ensembles must be a list")
            kwargs[k] = tuple(dict(e) for e in v)
        else:
            kwargs[k] = v
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    return cfg


def load(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return from_dict(data, path.parent)


def override(cfg: ExperimentConfig, **flags) -> ExperimentConfig:
    """Apply CLI flag values that are not None."""
    top, solver, anneal, analysis = {}, {}, {}, {}
    for key, val in flags.items():
        if val is None:
            continue
        if key in ("out", "workers", "seed"):
            top[key] = val
        elif key == "budget_ms":
            solver[key] = val
        elif key in ("reads", "sweeps", "noise_sigma_h", "noise_sigma_j"):
            anneal[key] = val
        elif key == "p_desired":
            analysis[key] = val
        else:
            raise ConfigError(f"unknown override {key}")
    return replace(cfg, **top, solver=replace(cfg.solver, **solver),
                   anneal=replace(cfg.anneal, **anneal),
                   analysis=replace(cfg.analysis, **analysis))


def make_graph(cfg: ExperimentConfig) -> ChimeraGraph:
    g = cfg.graph
    try:
        if g.mask:
            return load_mask(g.mask)
        if g.default == "pseudo-dw1":
            return pseudo_dw1()
        if g.default == "ideal":
            return build(g.rows, g.cols)
    except GraphError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown graph default {g.default!r}")


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def ensemble_specs(cfg: ExperimentConfig) -> list[EnsembleSpec]:
    """Expand the config's ensemble entries into concrete specs.

    Entry kinds: "chimera", "random", "fixed_M" (grid over n x alpha or
    n x m) and "standard" (the full 13 x 20 grid, counts configurable, 0 skips).
    """
    graph = None
    specs: list[EnsembleSpec] = []
    for entry in cfg.ensembles:
        kind = entry.get("kind")
        try:
            if kind == "standard":
                graph = graph or make_graph(cfg)
                cc = int(entry.get("chimera_count", 500))
                rc = int(entry.get("random_count", 1000))
                grid = standard_grid(graph, cfg.seed, tuple(entry.get("n", STANDARD_N)),
                                  tuple(entry.get("alpha", STANDARD_ALPHA)),
                                  max(cc, 1), max(rc, 1), cfg.graph.policy)
                specs += [s for s in grid
                          if (s.kind == "chimera" and cc) or (s.kind == "random" and rc)]
            elif kind in ("chimera", "random"):
                count = int(entry["count"])
                for n in _as_list(entry["n"]):
                    subset = None
                    if kind == "chimera":
                        graph = graph or make_graph(cfg)
                        subset = tuple(select_variables(graph, n, cfg.graph.policy, seed=cfg.seed))
                    for a in _as_list(entry["alpha"]):
                        specs.append(EnsembleSpec(
                            kind, int(n), count, spec_seed(cfg.seed, kind, int(n), a),
                            alpha=float(a), graph=graph if kind == "chimera" else None,
                            subset=subset))
            elif kind == "fixed_M":
                g = None
                if entry.get("restricted", False):
                    graph = graph or make_graph(cfg)
                    g = graph
                specs += fixed_M_grid(_as_list(entry["m"]), _as_list(entry["n"]),
                                      int(entry["count"]), cfg.seed, g, cfg.graph.policy)
            else:
                raise ConfigError(f"unknown ensemble kind {kind!r}")
        except KeyError as exc:
            raise ConfigError(f"ensemble entry {entry} missing key {exc}") from None
        except CapacityError:
            raise
        except (GraphError, ValueError, TypeError) as exc:
            raise ConfigError(f"ensemble entry {entry}: {exc}") from None
    return specs
