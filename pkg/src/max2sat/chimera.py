"""Chimera connectivity graph with active-qubit masks and clause-capacity bounds.

Qubit ``q = (row*cols + col)*8 + side*4 + k``. Side 0 qubits couple to the
same ``k`` in the cells above and below, side 1 qubits to the cells left and
right; inside a cell every side-0 qubit couples to every side-1 qubit.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

CELL_SIZE = 8
SHORE = 4

# Fixed search seed for the default 108-qubit / 255-coupler mask.
PSEUDO_DW1_SEED = 1108
PSEUDO_DW1_INACTIVE = 20
PSEUDO_DW1_EDGES = 255


class GraphError(ValueError):
    pass


def qubit_index(row: int, col: int, side: int, k: int, cols: int) -> int:
    return (row * cols + col) * CELL_SIZE + side * SHORE + k


def ideal_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            for k in range(SHORE):
                for k2 in range(SHORE):
                    edges.append((qubit_index(r, c, 0, k, cols),
                                  qubit_index(r, c, 1, k2, cols)))
                if r + 1 < rows:
                    edges.append((qubit_index(r, c, 0, k, cols),
                                  qubit_index(r + 1, c, 0, k, cols)))
                if c + 1 < cols:
                    edges.append((qubit_index(r, c, 1, k, cols),
                                  qubit_index(r, c + 1, 1, k, cols)))
    return sorted(edges)


@dataclass(frozen=True)
class ChimeraGraph:
    rows: int
    cols: int
    active: tuple[bool, ...]
    edges: frozenset[tuple[int, int]]

    @property
    def n_qubits(self) -> int:
        return self.rows * self.cols * CELL_SIZE

    @property
    def active_qubits(self) -> list[int]:
        return [q for q, on in enumerate(self.active) if on]

    @property
    def inactive_qubits(self) -> list[int]:
        return [q for q, on in enumerate(self.active) if not on]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degree(self, q: int) -> int:
        return sum(1 for e in self.edges if q in e)

    def internal_edges(self, subset: Iterable[int]) -> list[tuple[int, int]]:
        s = set(subset)
        return sorted(e for e in self.edges if e[0] in s and e[1] in s)

    def neighbours(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {q: [] for q in self.active_qubits}
        for a, b in self.sorted_edges():
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def to_mask_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "inactive": self.inactive_qubits}

    def edge_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["qubit_a", "qubit_b"])
        w.writerows(self.sorted_edges())
        return buf.getvalue()


def build(rows: int = 4, cols: int = 4, mask: Iterable[bool] | None = None) -> ChimeraGraph:
    if rows < 1 or cols < 1:
        raise GraphError("rows and cols must be positive")
    n = rows * cols * CELL_SIZE
    active = tuple(True for _ in range(n)) if mask is None else tuple(bool(x) for x in mask)
    if len(active) != n:
        raise GraphError(f"mask length {len(active)} != rows*cols*8 = {n}")
    edges = frozenset(e for e in ideal_edges(rows, cols) if active[e[0]] and active[e[1]])
    return ChimeraGraph(rows, cols, active, edges)


def from_inactive(rows: int, cols: int, inactive: Iterable[int]) -> ChimeraGraph:
    n = rows * cols * CELL_SIZE
    off = set(int(q) for q in inactive)
    bad = [q for q in off if not 0 <= q < n]
    if bad:
        raise GraphError(f"inactive qubit indices out of range: {sorted(bad)}")
    return build(rows, cols, [q not in off for q in range(n)])


def load_mask(path: str | Path) -> ChimeraGraph:
    try:
        spec = json.loads(Path(path).read_text())
        return from_inactive(int(spec["rows"]), int(spec["cols"]), spec.get("inactive", []))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise GraphError(f"bad mask file {path}: {exc}") from None


@lru_cache(maxsize=None)
def pseudo_dw1(seed: int = PSEUDO_DW1_SEED) -> ChimeraGraph:
    """4x4 graph with 20 qubits switched off so that 255 couplers remain.

    Candidates are drawn from a fixed-seed generator until one hits the
    target coupler count; the inactive set is not the real chip's.
    """
    rng = np.random.default_rng(seed)
    n = 4 * 4 * CELL_SIZE
    for _ in range(100_000):
        off = rng.choice(n, size=PSEUDO_DW1_INACTIVE, replace=False)
        g = from_inactive(4, 4, off.tolist())
        if len(g.edges) == PSEUDO_DW1_EDGES:
            return g
    raise GraphError("no mask with 255 couplers found")


def _check_subset(g: ChimeraGraph, subset: Iterable[int]) -> tuple[int, int]:
    s = set(subset)
    if not s:
        raise GraphError("empty subset")
    inactive = [q for q in s if not (0 <= q < g.n_qubits and g.active[q])]
    if inactive:
        raise GraphError(f"subset contains inactive qubits {sorted(inactive)}")
    return len(s), len(g.internal_edges(s))


def max_clause_density(g: ChimeraGraph, subset: Iterable[int]) -> Fraction:
    """4c/n: every internal coupler carries at most four distinct clauses."""
    n, c = _check_subset(g, subset)
    if n < 2:
        raise GraphError("need at least two qubits")
    return Fraction(4 * c, n)


def unsat_band(g: ChimeraGraph, subset: Iterable[int]) -> tuple[Fraction, Fraction]:
    """Densities in ``(3c/n, 4c/n]`` force some coupler to carry all four clauses."""
    n, c = _check_subset(g, subset)
    return Fraction(3 * c, n), Fraction(4 * c, n)


def select_variables(g: ChimeraGraph, n: int, policy: str = "cell-major-prefix",
                     seed: int | None = None) -> list[int]:
    active = g.active_qubits
    if n > len(active):
        raise GraphError(f"requested {n} qubits but only {len(active)} are active")
    if n < 0:
        raise GraphError("n must be non-negative")
    if policy == "cell-major-prefix":
        return active[:n]
    if policy != "random":
        raise GraphError(f"unknown selection policy {policy!r}")
    if n == 0:
        return []
    rng = np.random.default_rng(seed)
    adj = g.neighbours()
    # grow a connected region from a random start; restart on a fresh
    # component if the current one is exhausted
    chosen: list[int] = []
    chosen_set: set[int] = set()
    frontier: list[int] = []
    while len(chosen) < n:
        if not frontier:
            rest = [q for q in active if q not in chosen_set]
            start = rest[int(rng.integers(len(rest)))]
            frontier = [start]
        q = frontier.pop(int(rng.integers(len(frontier))))
        if q in chosen_set:
            continue
        chosen.append(q)
        chosen_set.add(q)
        frontier.extend(w for w in adj[q] if w not in chosen_set and w not in frontier)
    return sorted(chosen)
