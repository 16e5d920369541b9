"""Analytic N-representability condition checks for 1-body matrices.

Coleman's ensemble conditions (eigenvalues in [0, 1], trace N) are
built in.  Pure-state (generalized Pauli) inequality sets are loaded
from data files and evaluated on the descending eigenvalue spectrum as
``c0 + sum_j c_j * lambda_j >= 0``; the evaluator is deliberately
agnostic about where the coefficients come from, so the correctness of
the evaluation is testable independently of any particular published
constraint list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .rdm import RdmMatrix, spectrum

__all__ = [
    "InequalitySet",
    "ConditionReport",
    "coleman_check",
    "evaluate_inequalities",
    "load_inequalities",
    "bundled_inequality_path",
]


@dataclass(frozen=True)
class InequalitySet:
    """Linear constraints on descending 1-RDM eigenvalues."""

    n_modes: int
    n_particles: int
    inequalities: tuple  # of coefficient tuples (c0, c1, ..., c_n)
    source: str = ""

    def __post_init__(self):
        for row in self.inequalities:
            if len(row) != self.n_modes + 1:
                raise ValueError(
                    f"inequality has {len(row)} coefficients, expected {self.n_modes + 1}")


@dataclass
class ConditionReport:
    """Outcome of condition checks on one matrix."""

    pauli_ok: bool = True
    trace_ok: bool = True
    psd_ok: bool = True
    n_satisfied: int = 0
    n_total: int = 0
    margins: list = field(default_factory=list)
    eigenvalues: list = field(default_factory=list)

    @property
    def all_coleman_ok(self) -> bool:
        return self.pauli_ok and self.trace_ok and self.psd_ok

    def to_dict(self) -> dict:
        return {
            "pauli_ok": self.pauli_ok,
            "trace_ok": self.trace_ok,
            "psd_ok": self.psd_ok,
            "n_satisfied": self.n_satisfied,
            "n_total": self.n_total,
            "margins": self.margins,
            "eigenvalues": self.eigenvalues,
        }


def coleman_check(m: RdmMatrix, n_particles: int, tol: float = 1e-9) -> ConditionReport:
    """Ensemble conditions on the hermitized spectrum of a 1-body matrix."""
    if m.data.shape[0] != m.data.shape[1]:
        raise ValueError("coleman_check requires a square matrix")
    lam = spectrum(m, hermitize=True)
    tr = float(np.sum(lam))
    return ConditionReport(
        pauli_ok=bool(np.all(lam >= -tol) and np.all(lam <= 1.0 + tol)),
        trace_ok=bool(abs(tr - n_particles) <= tol),
        psd_ok=bool(np.all(lam >= -tol)),
        eigenvalues=[float(x) for x in lam],
    )


def evaluate_inequalities(m: RdmMatrix, ineq: InequalitySet, tol: float = 1e-9) -> ConditionReport:
    """Margins and satisfied count of each inequality on the spectrum.

    Evaluation depends on the matrix only through its eigenvalues, so
    the report is invariant under unitary conjugation of the input.
    """
    if m.n_modes != ineq.n_modes:
        raise ValueError("inequality set dimensions do not match the matrix")
    lam = spectrum(m, hermitize=True)
    rep = coleman_check(m, ineq.n_particles, tol)
    rep.n_total = len(ineq.inequalities)
    for row in ineq.inequalities:
        margin = float(row[0] + np.dot(row[1:], lam))
        rep.margins.append(margin)
        if margin >= -tol:
            rep.n_satisfied += 1
    return rep


def load_inequalities(path) -> InequalitySet:
    """Load a JSON inequality file and validate its coefficient arity."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        rows = tuple(tuple(float(c) for c in row) for row in doc["inequalities"])
        return InequalitySet(int(doc["n_modes"]), int(doc["n_particles"]), rows,
                             doc.get("source", ""))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed inequality file {path}: {exc}") from exc


def bundled_inequality_path(n_particles: int, n_modes: int):
    """Path of a bundled constraint file for the given setting, or None."""
    name = f"pure_{n_particles}_{n_modes}.json"
    ref = resources.files("rdmprobe").joinpath("data/inequalities").joinpath(name)
    return ref if ref.is_file() else None
