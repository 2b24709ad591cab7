"""MAX 2-SAT benchmark harness.

Random and hardware-graph-restricted ensembles, an exact branch-and-bound
solver, the Ising mapping used to program an annealer, a simulated-annealing
stand-in for the hardware, and the scaling analyses built on top of them.
"""
from .formula import (FALSE, TRUE, Assignment, Clause, Formula, Instance, Literal,
                      count_satisfied, count_violations, read_wcnf, write_wcnf)
from .exact import SolveResult, branch_and_bound, brute_force
from .ising import IsingProblem, autoscale, energy, map_formula, perturb

__version__ = "0.1.0"

__all__ = ["FALSE", "TRUE", "Assignment", "Clause", "Formula", "Instance", "Literal",
           "count_satisfied", "count_violations", "read_wcnf", "write_wcnf", "SolveResult",
           "branch_and_bound", "brute_force", "IsingProblem", "autoscale", "energy",
           "map_formula", "perturb"]
