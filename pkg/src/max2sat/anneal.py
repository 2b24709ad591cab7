"""Metropolis simulated annealing on mapped Ising problems.

Stands in for the hardware annealer: a read is one annealing run ending in
a measured spin configuration, and an instance's success probability is
the fraction of reads landing on an exact optimum.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .ensemble import derive_seed
from .formula import Formula, violations_matrix
from .ising import ControlErrorModel, IsingProblem, autoscale, map_formula, perturb


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 5.0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not 0 < self.beta_initial <= self.beta_final:
            raise ValueError("need 0 < beta_initial <= beta_final")
        if np.isinf(self.beta_final) and self.beta_initial != self.beta_final:
            raise ValueError("an infinite beta ramp must be frozen (initial == final)")

    def betas(self) -> np.ndarray:
        if self.beta_initial == self.beta_final:
            return np.full(self.sweeps, self.beta_initial)
        return np.linspace(self.beta_initial, self.beta_final, self.sweeps)


@dataclass(frozen=True)
class RunStats:
    reads: int
    successes: int
    best_energy_per_read: tuple[float, ...]
    violations_per_read: tuple[int, ...]
    t_f: float = 1e-3
    sweeps: int = 1000
    noise_sigma_h: float = 0.0
    noise_sigma_J: float = 0.0
    seed: int = 0
    scale_factor: float = 1.0
    cpu_seconds: float = field(default=0.0, compare=False)

    @property
    def p_success(self) -> float:
        return self.successes / self.reads


@njit(cache=True)
def _metropolis(h, indptr, nbr, w, spins, betas, uniforms):
    k = spins.shape[0]
    for t in range(betas.shape[0]):
        beta = betas[t]
        for i in range(k):
            local = h[i]
            for p in range(indptr[i], indptr[i + 1]):
                local += w[p] * spins[nbr[p]]
            de = -2.0 * spins[i] * local
            if de <= 0.0 or uniforms[t, i] < np.exp(-beta * de):
                spins[i] = -spins[i]
    return spins


@dataclass(frozen=True)
class _Compiled:
    used: np.ndarray
    h: np.ndarray
    indptr: np.ndarray
    nbr: np.ndarray
    w: np.ndarray


def _compile(p: IsingProblem) -> _Compiled:
    used = np.asarray(p.used, dtype=np.int64)
    pos = {int(v): i for i, v in enumerate(used)}
    k = len(used)
    rows: list[list[tuple[int, float]]] = [[] for _ in range(k)]
    for (i, j), v in sorted(p.J.items()):
        rows[pos[i]].append((pos[j], v))
        rows[pos[j]].append((pos[i], v))
    indptr = np.zeros(k + 1, dtype=np.int64)
    for i, r in enumerate(rows):
        indptr[i + 1] = indptr[i] + len(r)
    nbr = np.array([j for r in rows for j, _ in r], dtype=np.int64)
    w = np.array([v for r in rows for _, v in r], dtype=np.float64)
    return _Compiled(used, p.h[used].astype(np.float64), indptr, nbr, w)


def _read(c: _Compiled, n: int, betas: np.ndarray, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    k = len(c.used)
    spins = np.ones(n, dtype=np.int64)
    if k == 0:
        return spins
    local = (1 - 2 * rng.integers(0, 2, size=k)).astype(np.float64)
    uniforms = rng.random((len(betas), k))
    _metropolis(c.h, c.indptr, c.nbr, c.w, local, betas, uniforms)
    spins[c.used] = local.astype(np.int64)
    return spins


def anneal_read(p: IsingProblem, sched: AnnealSchedule, seed: int) -> np.ndarray:
    """One read: random start, sequential single-spin Metropolis sweeps.

    Unused variables come back as +1 (TRUE).
    """
    return _read(_compile(p), p.n, sched.betas(), seed)


def anneal_reads(p: IsingProblem, sched: AnnealSchedule, reads: int, seed: int) -> np.ndarray:
    c = _compile(p)
    betas = sched.betas()
    return np.stack([_read(c, p.n, betas, derive_seed(seed, r)) for r in range(reads)]) \
        if reads else np.zeros((0, p.n), dtype=np.int64)


def run_instance(f: Formula, sched: AnnealSchedule = AnnealSchedule(), reads: int = 100,
                 noise: ControlErrorModel | None = None, seed: int = 0,
                 optimum: int | None = None, t_f: float = 1e-3) -> RunStats:
    """Anneal ``reads`` times and count reads that reach ``optimum``.

    Success is judged on the noiseless formula even when ``noise`` is on.
    """
    if optimum is None:
        raise ValueError("an exact optimum is required to judge success")
    if reads < 1:
        raise ValueError("reads must be >= 1")
    t0 = time.process_time()
    p = autoscale(map_formula(f))
    if noise is not None:
        p = perturb(p, noise)
    spins = anneal_reads(p, sched, reads, seed)
    bits = (1 - spins) // 2
    viol = violations_matrix(f, bits)
    successes = int(np.sum(viol == optimum))
    if np.any(viol < optimum):
        raise ValueError(f"a read beat the supplied optimum {optimum}; it is not exact")
    return RunStats(
        reads=reads, successes=successes,
        best_energy_per_read=tuple(float(4 * v - f.m) for v in viol),
        violations_per_read=tuple(int(v) for v in viol),
        t_f=t_f, sweeps=sched.sweeps,
        noise_sigma_h=noise.sigma_h if noise else 0.0,
        noise_sigma_J=noise.sigma_J if noise else 0.0,
        seed=seed, scale_factor=p.scale_factor,
        cpu_seconds=time.process_time() - t0)


def success_histogram(p_values, reads: int) -> list[tuple[float, float]]:
    """Fraction of instances at each attainable success probability k/reads."""
    p = np.asarray(p_values, dtype=float)
    if reads < 1:
        raise ValueError("reads must be >= 1")
    if p.size == 0:
        return [(k / reads, 0.0) for k in range(reads + 1)]
    counts = np.bincount(np.rint(p * reads).astype(int), minlength=reads + 1)
    return [(k / reads, float(c) / p.size) for k, c in enumerate(counts)]
