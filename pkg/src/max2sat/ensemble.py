"""Seeded generation of fixed-density random MAX 2-SAT ensembles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .chimera import ChimeraGraph, select_variables
from .formula import Clause, Formula, Instance, Literal

STANDARD_N = (16, 24, 32, 39, 46, 53, 60, 67, 75, 80, 87, 98, 108)
STANDARD_ALPHA = tuple(round(0.1 * k, 1) for k in range(1, 21))
STANDARD_CHIMERA_COUNT = 500
STANDARD_RANDOM_COUNT = 1000

KINDS = ("random", "chimera", "fixed_M")
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}

# above this fill fraction shuffle the clause universe instead of rejecting
_DENSE_FILL = 0.5


class CapacityError(ValueError):
    """More clauses requested than distinct clauses exist."""


def clause_count(alpha: float, n: int) -> int:
    """round(alpha*n), halves rounded up, using alpha's decimal value."""
    x = Fraction(str(alpha)) * n
    return math.floor(x + Fraction(1, 2))


def derive_seed(*key: int) -> int:
    """Stable 64-bit seed from a tuple of non-negative ints."""
    state = np.random.SeedSequence(list(key)).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n: int
    count: int
    seed: int
    alpha: float | None = None
    m: int | None = None
    graph: ChimeraGraph | None = field(default=None, compare=False, repr=False)
    subset: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "fixed_M":
            if self.m is None or self.m < 0:
                raise ValueError("fixed_M ensembles need m >= 0")
        elif self.alpha is None or self.alpha < 0:
            raise ValueError(f"{self.kind} ensembles need alpha >= 0")
        if self.kind == "chimera" and self.graph is None:
            raise ValueError("chimera ensembles need a graph")
        if self.graph is not None:
            if self.subset is None:
                object.__setattr__(self, "subset", tuple(select_variables(self.graph, self.n)))
            object.__setattr__(self, "subset", tuple(sorted(self.subset)))
            if len(self.subset) != self.n:
                raise ValueError(f"subset has {len(self.subset)} qubits, n={self.n}")
        if self.n_clauses > self.capacity:
            raise CapacityError(
                f"{self.label}: M={self.n_clauses} exceeds the {self.capacity} distinct "
                f"clauses available (max clause density 4c/n = {4 * len(self.pairs)}/{self.n})")

    @property
    def restricted(self) -> bool:
        return self.graph is not None

    @property
    def n_clauses(self) -> int:
        return self.m if self.kind == "fixed_M" else clause_count(self.alpha, self.n)

    @property
    def nominal_alpha(self) -> float:
        return self.alpha if self.kind != "fixed_M" else self.m / self.n

    @property
    def realized_alpha(self) -> float:
        return self.n_clauses / self.n

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """Variable pairs that may share a clause, in local 0..n-1 indices."""
        cached = self.__dict__.get("_pairs")
        if cached is not None:
            return cached
        if self.graph is None:
            pairs = [(i, j) for i in range(self.n) for j in range(i + 1, self.n)]
        else:
            local = {q: i for i, q in enumerate(self.subset)}
            pairs = [(local[a], local[b]) for a, b in self.graph.internal_edges(self.subset)]
        object.__setattr__(self, "_pairs", pairs)
        return pairs

    @property
    def capacity(self) -> int:
        return 4 * len(self.pairs)

    @property
    def unsat_by_construction(self) -> bool:
        # pigeonhole: more than 3 clauses per pair forces a complete pair
        return self.n_clauses > 3 * len(self.pairs)

    @property
    def ensemble_name(self) -> str:
        if self.kind == "fixed_M":
            return "fixed_M/chimera" if self.restricted else "fixed_M/random"
        return self.kind

    @property
    def label(self) -> str:
        if self.kind == "fixed_M":
            base = "fixed_M-chimera" if self.restricted else "fixed_M-random"
            return f"{base}-n{self.n:03d}-m{self.m:04d}"
        return f"{self.kind}-n{self.n:03d}-a{self.alpha:.3f}"

    def instance_seed(self, index: int) -> int:
        return derive_seed(self.seed & 0xFFFFFFFF, self.seed >> 32, index)


def _sample_clauses(pairs: Sequence[tuple[int, int]], m: int,
                    rng: np.random.Generator) -> list[Clause]:
    universe = 4 * len(pairs)
    if m > universe:
        raise CapacityError(f"M={m} exceeds {universe} distinct clauses")
    if m == 0:
        return []
    if m > _DENSE_FILL * universe:
        codes = rng.permutation(universe)[:m].tolist()
    else:
        seen: set[int] = set()
        codes = []
        while len(codes) < m:
            code = int(rng.integers(universe))
            if code not in seen:
                seen.add(code)
                codes.append(code)
    out = []
    for code in codes:
        i, j = pairs[code >> 2]
        out.append(Clause(Literal(i, bool(code & 2)), Literal(j, bool(code & 1))))
    return out


def generate_formula(spec: EnsembleSpec, index: int) -> Formula:
    rng = np.random.default_rng(spec.instance_seed(index))
    return Formula(spec.n, tuple(_sample_clauses(spec.pairs, spec.n_clauses, rng)))


def generate_instances(spec: EnsembleSpec) -> Iterator[Instance]:
    for i in range(spec.count):
        yield Instance(f"{spec.label}-{i:05d}", spec.instance_seed(i), spec.nominal_alpha,
                       spec.ensemble_name, generate_formula(spec, i))


def generate(spec: EnsembleSpec) -> Iterator[Formula]:
    for i in range(spec.count):
        yield generate_formula(spec, i)


def spec_seed(master: int, kind: str, n: int, key: float | int) -> int:
    return derive_seed(master & 0xFFFFFFFF, master >> 32, _KIND_CODE[kind], n,
                       int(round(float(key) * 1000)))


def standard_grid(graph: ChimeraGraph, seed: int = 0,
               n_values: Sequence[int] = STANDARD_N, alphas: Sequence[float] = STANDARD_ALPHA,
               chimera_count: int = STANDARD_CHIMERA_COUNT,
               random_count: int = STANDARD_RANDOM_COUNT,
               policy: str = "cell-major-prefix") -> list[EnsembleSpec]:
    """Chimera-restricted specs for every (N, alpha) followed by unrestricted ones."""
    specs = []
    for n in n_values:
        subset = tuple(select_variables(graph, n, policy, seed=seed))
        for a in alphas:
            specs.append(EnsembleSpec("chimera", n, chimera_count, spec_seed(seed, "chimera", n, a),
                                      alpha=a, graph=graph, subset=subset))
    for n in n_values:
        for a in alphas:
            specs.append(EnsembleSpec("random", n, random_count, spec_seed(seed, "random", n, a),
                                      alpha=a))
    return specs


def fixed_M_grid(m_values: Sequence[int], n_values: Sequence[int], count: int = 500,
                 seed: int = 0, graph: ChimeraGraph | None = None,
                 policy: str = "cell-major-prefix") -> list[EnsembleSpec]:
    specs = []
    for n in n_values:
        subset = None if graph is None else tuple(select_variables(graph, n, policy, seed=seed))
        for m in m_values:
            specs.append(EnsembleSpec("fixed_M", n, count, spec_seed(seed, "fixed_M", n, m),
                                      m=m, graph=graph, subset=subset))
    return specs
