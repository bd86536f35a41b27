"""Linear/mixed-integer program container and human-readable dump."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MINIMIZE = "min"
MAXIMIZE = "max"
RELATIONS = ("<=", "=", ">=")


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    is_binary: bool = False


@dataclass
class Constraint:
    coeffs: dict  # variable index -> coefficient (sparse row)
    relation: str
    rhs: float
    name: str = ""


class LinearProgram:
    """Incrementally built LP/MILP.

    Variables are referenced by the integer index returned from
    add_variable; constraint rows are sparse dicts over those indices.
    """

    def __init__(self, sense=MINIMIZE, name="lp"):
        if sense not in (MINIMIZE, MAXIMIZE):
            raise ValueError("sense must be 'min' or 'max'")
        self.sense = sense
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0

    @property
    def n_variables(self):
        return len(self.variables)

    def add_variable(self, name, lb=0.0, ub=math.inf, binary=False) -> int:
        if binary:
            lb = max(lb, 0.0)
            ub = min(ub, 1.0)
        if not (lb <= ub):
            raise ValueError("variable %r: lb %g > ub %g" % (name, lb, ub))
        if math.isnan(lb) or math.isnan(ub):
            raise ValueError("variable %r: NaN bound" % name)
        self.variables.append(Variable(name, float(lb), float(ub), binary))
        return len(self.variables) - 1

    def add_constraint(self, coeffs, relation, rhs, name="") -> int:
        if relation not in RELATIONS:
            raise ValueError("relation must be one of %s" % (RELATIONS,))
        if not math.isfinite(rhs):
            raise ValueError("constraint %r: non-finite rhs" % name)
        clean = {}
        for j, a in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise ValueError("constraint %r references unknown variable %d" % (name, j))
            if not math.isfinite(a):
                raise ValueError("constraint %r: non-finite coefficient on %s" % (name, self.variables[j].name))
            if a != 0.0:
                clean[j] = float(a)
        self.constraints.append(Constraint(clean, relation, float(rhs), name or "c%d" % len(self.constraints)))
        return len(self.constraints) - 1

    def add_objective_term(self, j, coef):
        if not 0 <= j < len(self.variables):
            raise ValueError("objective references unknown variable %d" % j)
        if not math.isfinite(coef):
            raise ValueError("non-finite objective coefficient on %s" % self.variables[j].name)
        self.objective[j] = self.objective.get(j, 0.0) + float(coef)

    def binary_indices(self):
        return [j for j, v in enumerate(self.variables) if v.is_binary]

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(len(self.variables))
        for j, a in self.objective.items():
            c[j] = a
        return c

    def constraint_violation(self, x) -> float:
        """Largest bound or row violation of a candidate point."""
        worst = 0.0
        for j, v in enumerate(self.variables):
            worst = max(worst, v.lb - x[j], x[j] - v.ub)
        for con in self.constraints:
            lhs = sum(a * x[j] for j, a in con.coeffs.items())
            if con.relation == "<=":
                worst = max(worst, lhs - con.rhs)
            elif con.relation == ">=":
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return float(worst)

    def objective_value(self, x) -> float:
        return float(sum(a * x[j] for j, a in self.objective.items()) + self.objective_constant)


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    values: Optional[np.ndarray]
    objective_value: Optional[float]
    max_violation: float = 0.0
    iterations: int = 0
    nodes: int = 0  # branch-and-bound nodes (0 for plain LP solves)

    @property
    def is_optimal(self):
        return self.status == "optimal"


def _fmt(x: float) -> str:
    return "%.12g" % x


def _term(coef, name, first):
    if first:
        return "%s %s" % (_fmt(coef), name)
    sign = "+" if coef >= 0 else "-"
    return "%s %s %s" % (sign, _fmt(abs(coef)), name)


def dump_lp(lp: LinearProgram, stream):
    """Write a plain-text rendering, one constraint per line."""
    names = [v.name for v in lp.variables]
    stream.write(
        "# %s: %s, %d variables, %d constraints\n"
        % (lp.name, "minimize" if lp.sense == MINIMIZE else "maximize", len(lp.variables), len(lp.constraints))
    )
    terms = []
    for j in sorted(lp.objective):
        if lp.objective[j] != 0.0:
            terms.append(_term(lp.objective[j], names[j], not terms))
    if lp.objective_constant:
        terms.append(_term(lp.objective_constant, "", not terms).rstrip())
    stream.write("%s: %s\n" % (lp.sense, " ".join(terms) if terms else "0"))
    stream.write("subject to:\n")
    for con in lp.constraints:
        terms = []
        for j in sorted(con.coeffs):
            terms.append(_term(con.coeffs[j], names[j], not terms))
        stream.write(
            "  %s: %s %s %s\n"
            % (con.name, " ".join(terms) if terms else "0", con.relation, _fmt(con.rhs))
        )
    stream.write("bounds:\n")
    for v in lp.variables:
        if v.lb == -math.inf and v.ub == math.inf:
            stream.write("  %s free\n" % v.name)
        elif v.ub == math.inf:
            stream.write("  %s >= %s\n" % (v.name, _fmt(v.lb)))
        elif v.lb == -math.inf:
            stream.write("  %s <= %s\n" % (v.name, _fmt(v.ub)))
        else:
            stream.write("  %s <= %s <= %s\n" % (_fmt(v.lb), v.name, _fmt(v.ub)))
    binaries = [v.name for v in lp.variables if v.is_binary]
    if binaries:
        stream.write("binary: %s\n" % ", ".join(binaries))
