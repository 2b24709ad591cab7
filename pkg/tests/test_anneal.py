import math

import numpy as np
import pytest

from max2sat.anneal import (AnnealSchedule, _compile, _metropolis, anneal_read, anneal_reads,
                            run_instance, success_histogram)
from max2sat.ensemble import EnsembleSpec, generate
from max2sat.exact import branch_and_bound
from max2sat.formula import Formula
from max2sat.ising import ControlErrorModel, IsingProblem, energies, energy, map_formula

X12 = Formula.from_dimacs(2, [(1, 2)])


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(sweeps=0)
    with pytest.raises(ValueError):
        AnnealSchedule(beta_initial=2, beta_final=1)
    assert AnnealSchedule(3, 1, 1).betas().tolist() == [1, 1, 1]


def test_zero_problem_read():
    p = IsingProblem(4, np.zeros(4), {})
    assert energy(p, anneal_read(p, AnnealSchedule(10), 0)) == 0


def test_single_clause_reads_hit_ground_state():
    p = map_formula(X12)
    s = anneal_reads(p, AnnealSchedule(1000), 10_000, seed=5)
    assert np.mean(energies(p, s) == -1) >= 0.99


def test_frozen_schedule_never_raises_energy():
    rng = np.random.default_rng(0)
    f = next(generate(EnsembleSpec("random", 30, 1, seed=3, alpha=2.0)))
    p = map_formula(f)
    c = _compile(p)
    spins = (1 - 2 * rng.integers(0, 2, size=len(c.used))).astype(np.float64)
    full = np.ones(p.n)

    def e(local):
        full[c.used] = local
        return energy(p, full)

    last = e(spins)
    for _ in range(20):
        _metropolis(c.h, c.indptr, c.nbr, c.w, spins, np.array([math.inf]), rng.random((1, len(c.used))))
        now = e(spins)
        assert now <= last
        last = now


def test_detailed_balance_two_spins():
    p = IsingProblem(2, np.array([0.3, -0.5]), {(0, 1): 0.7})
    c = _compile(p)
    beta = 1.0
    rng = np.random.default_rng(42)
    spins = np.ones(2)
    steps = 200_000
    counts = {}
    uniforms = rng.random((steps, 2))
    betas = np.full(1, beta)
    for t in range(steps):
        _metropolis(c.h, c.indptr, c.nbr, c.w, spins, betas, uniforms[t:t + 1])
        key = (int(spins[0]), int(spins[1]))
        counts[key] = counts.get(key, 0) + 1
    states = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    w = np.array([math.exp(-beta * energy(p, s)) for s in states])
    expected = w / w.sum() * steps
    observed = np.array([counts.get(s, 0) for s in states])
    # successive sweeps are correlated; compare frequencies at a loose but meaningful level
    assert np.allclose(observed / steps, expected / steps, atol=0.01)


def test_run_instance_requires_optimum_and_reads():
    with pytest.raises(ValueError):
        run_instance(X12, reads=10)
    with pytest.raises(ValueError):
        run_instance(X12, reads=0, optimum=0)


def test_run_instance_deterministic_and_bounded():
    f = next(generate(EnsembleSpec("random", 40, 1, seed=9, alpha=1.5)))
    opt = branch_and_bound(f).optimum
    a = run_instance(f, AnnealSchedule(200), 30, ControlErrorModel(0.1, 0.1, 3), 17, opt)
    b = run_instance(f, AnnealSchedule(200), 30, ControlErrorModel(0.1, 0.1, 3), 17, opt)
    assert a == b
    assert 0 <= a.p_success <= 1
    assert min(a.violations_per_read) >= opt


def test_run_instance_rejects_wrong_optimum():
    f = next(generate(EnsembleSpec("random", 20, 1, seed=2, alpha=0.3)))
    with pytest.raises(ValueError):
        run_instance(f, AnnealSchedule(200), 10, optimum=1)


def test_more_sweeps_do_not_hurt_on_average():
    fs = list(generate(EnsembleSpec("random", 60, 25, seed=4, alpha=2.0)))
    opts = [branch_and_bound(f).optimum for f in fs]

    def mean_p(sweeps):
        return np.mean([run_instance(f, AnnealSchedule(sweeps), 40, None, i, o).p_success
                        for i, (f, o) in enumerate(zip(fs, opts))])

    assert mean_p(20) <= mean_p(400)


def test_success_histogram():
    assert success_histogram([1.0, 1.0], 100)[-1] == (1.0, 1.0)
    h = success_histogram([0.5, 0.25, 1.0, 0.97], 100)
    assert math.isclose(sum(v for _, v in h), 1.0)
    assert len(h) == 101
