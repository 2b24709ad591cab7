"""MAX 2-SAT data model, evaluation and file I/O.

Variables are 0-indexed internally and 1-indexed in DIMACS / JSON Lines.
Assignments follow the TRUE=0 / FALSE=1 bit convention, so a literal is
true exactly when its variable's bit equals the literal's negation flag.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

TRUE = 0
FALSE = 1


class FormulaError(ValueError):
    """Raised for malformed formulas or assignments."""


class ParseError(FormulaError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, order=True)
class Literal:
    variable: int
    negated: bool = False

    def __post_init__(self):
        if self.variable < 0:
            raise FormulaError(f"negative variable index {self.variable}")

    @property
    def code(self) -> int:
        """Packed form ``2*variable + negated`` used by the solvers."""
        return 2 * self.variable + int(self.negated)

    @classmethod
    def from_code(cls, code: int) -> Literal:
        return cls(code >> 1, bool(code & 1))

    def to_dimacs(self) -> int:
        return -(self.variable + 1) if self.negated else self.variable + 1

    @classmethod
    def from_dimacs(cls, value: int) -> Literal:
        if value == 0:
            raise FormulaError("0 is not a literal")
        return cls(abs(value) - 1, value < 0)

    def is_true(self, bit: int) -> bool:
        return int(bit) == int(self.negated)

    def __neg__(self) -> Literal:
        return Literal(self.variable, not self.negated)


@dataclass(frozen=True, order=True, init=False)
class Clause:
    """Disjunction of two literals on distinct variables, stored canonically."""

    first: Literal
    second: Literal

    def __init__(self, a: Literal, b: Literal):
        if a.variable == b.variable:
            raise FormulaError(f"self-paired clause on variable {a.variable}")
        if b.variable < a.variable:
            a, b = b, a
        object.__setattr__(self, "first", a)
        object.__setattr__(self, "second", b)

    @property
    def pair(self) -> tuple[int, int]:
        return self.first.variable, self.second.variable

    @property
    def pattern(self) -> int:
        """Negation pattern in 0..3 (bit 1: first negated, bit 0: second)."""
        return 2 * int(self.first.negated) + int(self.second.negated)

    def violated_by(self, values: Sequence[int]) -> bool:
        return not (self.first.is_true(values[self.first.variable])
                    or self.second.is_true(values[self.second.variable]))

    def to_dimacs(self) -> tuple[int, int]:
        return self.first.to_dimacs(), self.second.to_dimacs()

    @classmethod
    def from_dimacs(cls, a: int, b: int) -> Clause:
        return cls(Literal.from_dimacs(a), Literal.from_dimacs(b))


@dataclass(frozen=True)
class Formula:
    n_declared: int
    clauses: tuple[Clause, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if self.n_declared < 0:
            raise FormulaError("n_declared must be non-negative")
        seen = set()
        for c in self.clauses:
            if c.second.variable >= self.n_declared:
                raise FormulaError(
                    f"variable {c.second.variable} out of range for n={self.n_declared}")
            if c in seen:
                raise FormulaError(f"duplicate clause {c.to_dimacs()}")
            seen.add(c)

    @classmethod
    def from_dimacs(cls, n: int, pairs: Iterable[Sequence[int]]) -> Formula:
        return cls(n, tuple(Clause.from_dimacs(a, b) for a, b in pairs))

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def clause_density(self) -> float:
        return self.m / self.n_declared if self.n_declared else 0.0

    @property
    def used_variables(self) -> frozenset[int]:
        return frozenset(v for c in self.clauses for v in c.pair)

    def canonical(self) -> Formula:
        return Formula(self.n_declared, tuple(sorted(self.clauses)))

    def same_clauses(self, other: Formula) -> bool:
        return (self.n_declared == other.n_declared
                and set(self.clauses) == set(other.clauses))

    def literal_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(var_a, neg_a, var_b, neg_b) as int arrays, one entry per clause."""
        m = self.m
        out = np.zeros((4, m), dtype=np.int64)
        for k, c in enumerate(self.clauses):
            out[:, k] = (c.first.variable, c.first.negated,
                         c.second.variable, c.second.negated)
        return out[0], out[1], out[2], out[3]

    def dimacs_pairs(self) -> list[list[int]]:
        return [list(c.to_dimacs()) for c in self.clauses]


@dataclass(frozen=True)
class Assignment:
    values: tuple[int, ...] = field(default=())

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v not in (TRUE, FALSE) for v in vals):
            raise FormulaError("assignment bits must be 0 (TRUE) or 1 (FALSE)")
        object.__setattr__(self, "values", vals)

    @classmethod
    def all_true(cls, n: int) -> Assignment:
        return cls((TRUE,) * n)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _check_length(f: Formula, a: Assignment | Sequence[int]) -> None:
    if len(a) != f.n_declared:
        raise FormulaError(
            f"assignment length {len(a)} does not match n_declared={f.n_declared}")


def count_violations(f: Formula, a: Assignment | Sequence[int]) -> int:
    _check_length(f, a)
    values = a.values if isinstance(a, Assignment) else a
    return sum(1 for c in f.clauses if c.violated_by(values))


def count_satisfied(f: Formula, a: Assignment | Sequence[int]) -> int:
    return f.m - count_violations(f, a)


def is_satisfiable(f: Formula, optimum: int) -> bool:
    if optimum < 0 or optimum > f.m:
        raise FormulaError(f"optimum {optimum} outside [0, {f.m}]")
    return optimum == 0


def violations_matrix(f: Formula, bits: np.ndarray) -> np.ndarray:
    """Violation counts for each row of a (k, n) bit matrix."""
    bits = np.asarray(bits, dtype=np.int8)
    if not f.clauses:
        return np.zeros(bits.shape[0], dtype=np.int64)
    va, na, vb, nb = f.literal_arrays()
    return ((bits[:, va] != na) & (bits[:, vb] != nb)).sum(axis=1, dtype=np.int64)


# --- DIMACS WCNF ---------------------------------------------------------

def read_wcnf(source: str | bytes | IO) -> Formula:
    """Parse a unit-weight, two-literal DIMACS WCNF document."""
    if isinstance(source, bytes):
        text = source.decode()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode()

    n = m = None
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        if toks[0] == "p":
            if n is not None:
                raise ParseError(lineno, "duplicate header")
            if len(toks) != 5 or toks[1] != "wcnf":
                raise ParseError(lineno, f"malformed header {line!r}")
            try:
                n, m, _ = int(toks[2]), int(toks[3]), int(toks[4])
            except ValueError:
                raise ParseError(lineno, f"malformed header {line!r}") from None
            if n < 0 or m < 0:
                raise ParseError(lineno, "negative counts in header")
            continue
        if n is None:
            raise ParseError(lineno, "clause before header")
        try:
            nums = [int(t) for t in toks]
        except ValueError:
            raise ParseError(lineno, f"non-integer token in {line!r}") from None
        if nums[-1] != 0:
            raise ParseError(lineno, "clause not terminated by 0")
        weight, lits = nums[0], nums[1:-1]
        if weight != 1:
            raise ParseError(lineno, f"weight {weight} != 1")
        if len(lits) != 2:
            raise ParseError(lineno, f"clause length {len(lits)} != 2")
        for lit in lits:
            if lit == 0 or abs(lit) > n:
                raise ParseError(lineno, f"variable index {lit} out of range 1..{n}")
        if abs(lits[0]) == abs(lits[1]):
            raise ParseError(lineno, "both literals on the same variable")
        pairs.append((lits[0], lits[1]))
    if n is None:
        raise ParseError(0, "missing header")
    if len(pairs) != m:
        raise ParseError(0, f"header declares {m} clauses, found {len(pairs)}")
    try:
        return Formula.from_dimacs(n, pairs)
    except FormulaError as exc:
        raise ParseError(0, str(exc)) from None


def write_wcnf(f: Formula) -> bytes:
    # top = M + 1 makes every unit-weight clause soft
    buf = io.StringIO()
    buf.write(f"p wcnf {f.n_declared} {f.m} {f.m + 1}\n")
    for a, b in (c.to_dimacs() for c in f.clauses):
        buf.write(f"1 {a} {b} 0\n")
    return buf.getvalue().encode()


# --- JSON Lines instances ----------------------------------------------------

@dataclass(frozen=True)
class Instance:
    id: str
    seed: int
    alpha: float
    ensemble: str
    formula: Formula

    @property
    def n(self) -> int:
        return self.formula.n_declared

    def to_record(self) -> dict:
        return {"id": self.id, "seed": self.seed, "n": self.n, "alpha": self.alpha,
                "ensemble": self.ensemble, "clauses": self.formula.dimacs_pairs()}

    @classmethod
    def from_record(cls, rec: dict) -> Instance:
        f = Formula.from_dimacs(int(rec["n"]), rec["clauses"])
        return cls(str(rec["id"]), int(rec["seed"]), float(rec["alpha"]),
                   str(rec["ensemble"]), f)


def dumps_instance(inst: Instance) -> str:
    return json.dumps(inst.to_record(), separators=(",", ":"))


def write_jsonl(instances: Iterable[Instance], fh: IO[str]) -> int:
    count = 0
    for inst in instances:
        fh.write(dumps_instance(inst) + "\n")
        count += 1
    return count


def read_jsonl(fh: IO[str] | Iterable[str]) -> Iterator[Instance]:
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            yield Instance.from_record(json.loads(line))
        except (KeyError, TypeError, json.JSONDecodeError, FormulaError) as exc:
            raise ParseError(lineno, f"bad instance record: {exc}") from None
