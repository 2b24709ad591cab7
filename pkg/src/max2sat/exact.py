"""Exact MAX 2-SAT: exhaustive oracle and branch-and-bound.

Literals inside the solvers are packed ints ``2*var + negated``; the
complement of ``l`` is ``l ^ 1`` and making ``l`` true sets ``x[var] = l & 1``.
"""
from __future__ import annotations

import sys
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np
from numba import njit

from .formula import Assignment, Formula, count_violations

BRUTE_FORCE_LIMIT = 26


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveResult:
    optimum: int
    assignment: Assignment
    nodes_expanded: int
    elapsed: float
    optimal: bool = True
    lower_bound: int = 0

    @property
    def satisfiable(self) -> bool | None:
        """True/False when decided, None when a budgeted run left it open."""
        if self.optimum == 0:
            return True
        if self.lower_bound > 0:
            return False
        return None


# --- exhaustive oracle ----------------------------------------------------

@njit(cache=True)
def _gray_walk(k, var_a, neg_a, var_b, neg_b, occ_ptr, occ_clause, occ_neg):
    """Visit assignments in Gray-code order; return (best, code, visited).

    Stops early once a satisfying assignment turns up.
    """
    m = var_a.shape[0]
    bits = np.zeros(k, dtype=np.int64)
    ntrue = np.zeros(m, dtype=np.int64)
    viol = 0
    for c in range(m):
        ntrue[c] = (bits[var_a[c]] == neg_a[c]) + (bits[var_b[c]] == neg_b[c])
        if ntrue[c] == 0:
            viol += 1
    best, best_code = viol, 0
    if best == 0:
        return best, best_code, 1
    g = 0
    for g in range(1, 1 << k):
        j = 0
        while not (g >> j) & 1:
            j += 1
        bits[j] ^= 1
        for p in range(occ_ptr[j], occ_ptr[j + 1]):
            c = occ_clause[p]
            if bits[j] == occ_neg[p]:
                ntrue[c] += 1
                if ntrue[c] == 1:
                    viol -= 1
            else:
                ntrue[c] -= 1
                if ntrue[c] == 0:
                    viol += 1
        if viol < best:
            best, best_code = viol, g ^ (g >> 1)
            if best == 0:
                break
    return best, best_code, g + 1


def brute_force(f: Formula) -> SolveResult:
    """Enumerate every assignment of the used variables; unused stay TRUE.

    Gray-code order, so each step flips one variable and touches only its
    clauses.
    """
    t0 = time.perf_counter()
    used = sorted(f.used_variables)
    k = len(used)
    if k > BRUTE_FORCE_LIMIT:
        raise SolverError(f"{k} used variables exceeds brute-force limit {BRUTE_FORCE_LIMIT}")
    pos = {v: i for i, v in enumerate(used)}
    var_a = np.array([pos[c.first.variable] for c in f.clauses], dtype=np.int64)
    var_b = np.array([pos[c.second.variable] for c in f.clauses], dtype=np.int64)
    neg_a = np.array([int(c.first.negated) for c in f.clauses], dtype=np.int64)
    neg_b = np.array([int(c.second.negated) for c in f.clauses], dtype=np.int64)
    occ: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    for ci in range(f.m):
        occ[var_a[ci]].append((ci, neg_a[ci]))
        occ[var_b[ci]].append((ci, neg_b[ci]))
    occ_ptr = np.zeros(k + 1, dtype=np.int64)
    for i, o in enumerate(occ):
        occ_ptr[i + 1] = occ_ptr[i] + len(o)
    occ_clause = np.array([c for o in occ for c, _ in o], dtype=np.int64)
    occ_neg = np.array([n for o in occ for _, n in o], dtype=np.int64)
    best, code, visited = _gray_walk(k, var_a, neg_a, var_b, neg_b, occ_ptr, occ_clause, occ_neg)
    values = [0] * f.n_declared
    for i, v in enumerate(used):
        values[v] = (int(code) >> i) & 1
    a = Assignment(values)
    if count_violations(f, a) != best:
        raise SolverError("exhaustive walk lost track of the violation count")
    return SolveResult(int(best), a, int(visited), time.perf_counter() - t0, True, int(best))


# --- 2-SAT ------------------------------------------------------------------

def two_sat(units, binaries) -> dict[int, int] | None:
    """Satisfy unit and binary clauses over packed literals, or return None.

    Returns a bit for every variable mentioned. Iterative Tarjan SCC on the
    implication graph; components come out in reverse topological order, so
    a literal is true when its component index is smaller than its negation's.
    """
    graph: dict[int, list[int]] = {}
    for l in units:
        graph.setdefault(l ^ 1, []).append(l)
        graph.setdefault(l, [])
    for a, b in binaries:
        graph.setdefault(a ^ 1, []).append(b)
        graph.setdefault(b ^ 1, []).append(a)
        graph.setdefault(a, [])
        graph.setdefault(b, [])
    for l in list(graph):
        graph.setdefault(l ^ 1, [])

    index: dict[int, int] = {}
    low: dict[int, int] = {}
    comp: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in sorted(graph):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work[-1]
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            succ = graph[v]
            if i < len(succ):
                work[-1] = (v, i + 1)
                w = succ[i]
                if w not in index:
                    work.append((w, 0))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    out: dict[int, int] = {}
    for l in graph:
        if l & 1:
            continue
        cp, cn = comp[l], comp[l ^ 1]
        if cp == cn:
            return None
        # positive literal true -> bit 0
        out[l >> 1] = 0 if cp < cn else 1
    return out


# --- branch and bound -------------------------------------------------------

class _Budget(Exception):
    pass


def _split_quads(f: Formula) -> tuple[int, list[tuple[int, int]]]:
    """Drop variable pairs carrying all four sign patterns.

    Every assignment violates exactly one clause of such a pair, so each
    contributes a constant 1. Returns (constant, remaining packed clauses).
    """
    by_pair: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for c in f.clauses:
        by_pair.setdefault(c.pair, []).append((c.first.code, c.second.code))
    forced, rest = 0, []
    for pair in sorted(by_pair):
        group = by_pair[pair]
        if len(group) == 4:
            forced += 1
        else:
            rest += group
    return forced, rest


def _components(n: int, clauses) -> list[list[tuple[int, int]]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in clauses:
        ra, rb = find(a >> 1), find(b >> 1)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[tuple[int, int]]] = {}
    for a, b in clauses:
        groups.setdefault(find(a >> 1), []).append((a, b))
    return [groups[r] for r in sorted(groups)]


def _eval(clauses, bits) -> int:
    return sum(1 for a, b in clauses
               if bits[a >> 1] != (a & 1) and bits[b >> 1] != (b & 1))


def _local_search(clauses, variables) -> tuple[int, dict[int, int]]:
    """Deterministic best-improvement descent from the all-TRUE point."""
    bits = {v: 0 for v in variables}
    occ: dict[int, list[int]] = {v: [] for v in variables}
    for k, (a, b) in enumerate(clauses):
        occ[a >> 1].append(k)
        occ[b >> 1].append(k)
    cost = _eval(clauses, bits)
    while cost:
        best_gain, best_v = 0, None
        for v in variables:
            before = after = 0
            for k in occ[v]:
                a, b = clauses[k]
                fa = bits[a >> 1] != (a & 1)
                fb = bits[b >> 1] != (b & 1)
                before += fa and fb
                bits[v] ^= 1
                fa = bits[a >> 1] != (a & 1)
                fb = bits[b >> 1] != (b & 1)
                bits[v] ^= 1
                after += fa and fb
            gain = before - after
            if gain > best_gain:
                best_gain, best_v = gain, v
        if best_v is None:
            break
        bits[best_v] ^= 1
        cost -= best_gain
    return cost, bits


class _Search:
    def __init__(self, clauses, deadline, ub, ub_bits):
        self.clauses = clauses
        self.deadline = deadline
        self.nodes = 0
        self.ub = ub
        self.best_bits = dict(ub_bits)

    def run(self):
        self._node(0, [], list(self.clauses), None)

    @staticmethod
    def _fix(lit, viol, units, bins):
        """Make ``lit`` true; returns the reduced residual."""
        neg = lit ^ 1
        new_units = []
        for u in units:
            if u == neg:
                viol += 1
            elif u != lit:
                new_units.append(u)
        new_bins = []
        for a, b in bins:
            if a == lit or b == lit:
                continue
            if a == neg:
                new_units.append(b)
            elif b == neg:
                new_units.append(a)
            else:
                new_bins.append((a, b))
        return viol, new_units, new_bins

    @staticmethod
    def _simplify(viol, units, bins, trail):
        while True:
            ucount = Counter(units)
            # complementary units: exactly one of each pair is violated
            paired = False
            for l in sorted(ucount):
                if l & 1 == 0 and (l ^ 1) in ucount:
                    k = min(ucount[l], ucount[l ^ 1])
                    viol += k
                    ucount[l] -= k
                    ucount[l ^ 1] -= k
                    paired = True
            if paired:
                units = [l for l in sorted(ucount) for _ in range(ucount[l])]
                ucount = Counter(units)
            occ = Counter(units)
            for a, b in bins:
                occ[a] += 1
                occ[b] += 1
            # dominance: l true costs at most occ(~l), l false costs >= units(l)
            forced = None
            for l in sorted(occ):
                if occ[l] and ucount[l] >= occ[l ^ 1]:
                    forced = l
                    break
            if forced is None:
                return viol, units, bins, trail
            trail = (forced >> 1, forced & 1, trail)
            viol, units, bins = _Search._fix(forced, viol, units, bins)

    def _node(self, viol, units, bins, trail):
        self.nodes += 1
        if self.deadline is not None and (self.nodes & 63) == 0 \
                and time.perf_counter() > self.deadline:
            raise _Budget
        viol, units, bins, trail = self._simplify(viol, units, bins, trail)
        if viol >= self.ub:
            return
        sol = two_sat(units, bins)
        if sol is not None:
            self.ub = viol
            bits = dict(sol)
            t = trail
            while t is not None:
                bits[t[0]] = t[1]
                t = t[2]
            self.best_bits = bits
            return
        if viol + 1 >= self.ub:
            return
        occ = Counter()
        for u in units:
            occ[u] += 2
        for a, b in bins:
            occ[a] += 1
            occ[b] += 1
        var_occ = Counter()
        for l, c in occ.items():
            var_occ[l >> 1] += c
        var = min(var_occ, key=lambda v: (-var_occ[v], v))
        pos, neg = 2 * var, 2 * var + 1
        first = pos if occ[pos] >= occ[neg] else neg
        for lit in (first, first ^ 1):
            v2, u2, b2 = self._fix(lit, viol, units, bins)
            if v2 < self.ub:
                self._node(v2, u2, b2, (var, lit & 1, trail))
            if viol + 1 >= self.ub:
                return


def node_lower_bound(units, binaries) -> int:
    """Bound used to prune a residual of packed unit and binary clauses.

    Forced violations from simplification, plus one when the simplified
    residual is not 2-satisfiable.
    """
    viol, u, b, _ = _Search._simplify(0, list(units), list(binaries), None)
    return viol + (0 if two_sat(u, b) is not None else 1)


def branch_and_bound(f: Formula, budget: float | None = None) -> SolveResult:
    """Exact optimum by depth-first branch and bound.

    ``budget`` is wall seconds. When it runs out the best assignment found
    so far is returned with ``optimal=False``.
    """
    t0 = time.perf_counter()
    deadline = None if budget is None else t0 + budget
    bits = [0] * f.n_declared
    forced, clauses = _split_quads(f)
    total = lower = forced
    nodes = 0
    optimal = True
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * f.n_declared + 1000))
    try:
        for comp in _components(f.n_declared, clauses):
            variables = sorted({l >> 1 for c in comp for l in c})
            sol = two_sat([], comp)
            if sol is not None:
                for v, b in sol.items():
                    bits[v] = b
                continue
            ub, ub_bits = _local_search(comp, variables)
            search = _Search(comp, deadline, ub, ub_bits)
            try:
                search.run()
                lower += search.ub
            except _Budget:
                optimal = False
                lower += 1
            nodes += search.nodes
            total += search.ub
            for v, b in search.best_bits.items():
                bits[v] = b
    finally:
        sys.setrecursionlimit(limit)
    a = Assignment(bits)
    opt = count_violations(f, a)
    if opt != total:
        raise SolverError(f"internal inconsistency: {opt} != {total}")
    return SolveResult(opt, a, nodes, time.perf_counter() - t0, optimal,
                       opt if optimal else lower)


# --- Ising ground states ----------------------------------------------------

def solve_ising_ground(p, budget: float | None = None):
    """Exact minimum energy and one minimising spin vector.

    Unperturbed problems that remember their formula go through
    branch_and_bound; anything else is enumerated over the used spins.
    """
    from .ising import energies, encode

    if p.source is not None and not p.perturbed:
        res = branch_and_bound(p.source, budget)
        if not res.optimal:
            raise SolverError("budget exhausted before the ground state was proven")
        e = (4 * res.optimum - p.source.m) / p.scale_factor
        return e, encode(res.assignment)
    used = p.used
    k = len(used)
    if k > BRUTE_FORCE_LIMIT:
        raise SolverError(f"{k} spins exceeds exhaustive limit {BRUTE_FORCE_LIMIT}")
    best_e, best_s = np.inf, None
    total = 1 << k
    step = 1 << min(k, 16)
    shifts = np.arange(k, dtype=np.int64)
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        spins = np.ones((len(idx), p.n))
        spins[:, used] = 1 - 2 * ((idx[:, None] >> shifts) & 1)
        e = energies(p, spins)
        j = int(np.argmin(e))
        if e[j] < best_e:
            best_e, best_s = float(e[j]), spins[j].astype(np.int64)
    if best_s is None:
        best_e, best_s = 0.0, np.ones(p.n, dtype=np.int64)
    return best_e, best_s
