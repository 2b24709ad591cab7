"""Formula -> Ising problem, hardware autoscale and control-error model.

Each clause contributes ``(1 - v_a s_a)(1 - v_b s_b)`` (four times its 0/1
penalty) with ``v = +1`` for a plain literal and ``-1`` for a negated one, so
``energy(s) = 4 * violations - M`` before scaling.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .formula import Assignment, Formula

H_RANGE = 2.0
J_RANGE = 1.0


@dataclass(frozen=True, eq=False)
class IsingProblem:
    n: int
    h: np.ndarray
    J: dict[tuple[int, int], float]
    offset: float = 0.0
    scale_factor: float = 1.0
    perturbed: bool = False
    source: Formula | None = field(default=None, compare=False, repr=False)

    @property
    def used(self) -> list[int]:
        """Variables carrying any term (field or coupler key)."""
        s = set(int(i) for i in np.flatnonzero(self.h))
        for i, j in self.J:
            s.add(i)
            s.add(j)
        if self.source is not None:
            s |= self.source.used_variables
        return sorted(s)

    def violations(self, energy_value: float) -> float:
        """Violated-clause count implied by an energy of this (scaled) problem."""
        return energy_value * self.scale_factor / 4.0 + self.offset

    def to_text(self) -> str:
        lines = [str(self.n)]
        lines += [f"{j} {_num(self.h[j])}" for j in range(self.n)]
        lines += [f"{i} {j} {_num(v)}" for (i, j), v in sorted(self.J.items())]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "h": [float(x) for x in self.h],
            "J": [[i, j, float(v)] for (i, j), v in sorted(self.J.items())],
            "offset": self.offset,
            "scale_factor": self.scale_factor,
        })


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


@dataclass(frozen=True)
class ControlErrorModel:
    sigma_h: float = 0.1
    sigma_J: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.sigma_h < 0 or self.sigma_J < 0:
            raise ValueError("noise sigmas must be non-negative")


def map_formula(f: Formula) -> IsingProblem:
    h = np.zeros(f.n_declared)
    J: dict[tuple[int, int], float] = {}
    for c in f.clauses:
        va = -1.0 if c.first.negated else 1.0
        vb = -1.0 if c.second.negated else 1.0
        h[c.first.variable] -= va
        h[c.second.variable] -= vb
        J[c.pair] = J.get(c.pair, 0.0) + va * vb
    # violations = energy/4 + M/4
    return IsingProblem(f.n_declared, h, J, offset=f.m / 4.0, source=f)


def energy(p: IsingProblem, spins) -> float:
    s = np.asarray(spins, dtype=float)
    if s.shape != (p.n,):
        raise ValueError(f"spin vector length {s.shape} != n={p.n}")
    e = float(p.h @ s)
    for (i, j), v in p.J.items():
        e += v * s[i] * s[j]
    return e


def energies(p: IsingProblem, spins: np.ndarray) -> np.ndarray:
    """Energies of each row of a (k, n) spin matrix."""
    s = np.asarray(spins, dtype=float)
    if s.ndim != 2 or s.shape[1] != p.n:
        raise ValueError(f"spin matrix shape {s.shape} does not match n={p.n}")
    e = s @ p.h
    if p.J:
        # dense symmetric couplings: one matmul instead of a loop over pairs
        w = np.zeros((p.n, p.n))
        for (i, j), v in p.J.items():
            w[i, j] = w[j, i] = v
        e += 0.5 * np.einsum("ki,ki->k", s @ w, s)
    return e


def autoscale(p: IsingProblem) -> IsingProblem:
    hmax = float(np.max(np.abs(p.h))) if p.n else 0.0
    jmax = max((abs(v) for v in p.J.values()), default=0.0)
    factor = max(hmax / H_RANGE, jmax / J_RANGE)
    if factor <= 1.0:
        return replace(p, scale_factor=p.scale_factor)
    return replace(p, h=p.h / factor, J={k: v / factor for k, v in p.J.items()},
                   scale_factor=p.scale_factor * factor)


def perturb(p: IsingProblem, model: ControlErrorModel) -> IsingProblem:
    """Add independent Gaussian noise to every programmed field and coupler.

    Unused variables carry no field and are left alone. Values are not
    clipped back into the hardware range.
    """
    if model.sigma_h == 0 and model.sigma_J == 0:
        return p
    rng = np.random.default_rng(model.seed)
    used = p.used
    h = p.h.copy()
    h[used] += rng.normal(0.0, model.sigma_h, size=len(used))
    keys = sorted(p.J)
    noise = rng.normal(0.0, model.sigma_J, size=len(keys))
    J = {k: p.J[k] + float(d) for k, d in zip(keys, noise)}
    return replace(p, h=h, J=J, perturbed=True)


def encode(a: Assignment | list[int]) -> np.ndarray:
    bits = np.asarray(a.values if isinstance(a, Assignment) else a, dtype=np.int64)
    return 1 - 2 * bits


def decode(spins) -> Assignment:
    s = np.asarray(spins)
    if not np.all(np.abs(s) == 1):
        raise ValueError("spins must be +1 or -1")
    return Assignment(((1 - s) // 2).astype(int).tolist())
