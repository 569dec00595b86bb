"""Quality measures: the gap along the projection chain, ground-truth error,
and the monitored shadow of an iterate."""

import math
from dataclasses import dataclass

import numpy as np

from .constraints import FeasibilityProblem, project_sym
from .fields import distance, norm

__all__ = ["GapBreakdown", "gap", "truth_error", "shadow"]


@dataclass(frozen=True)
class GapBreakdown:
    """Distances between consecutive sets along the projection chain.

    ``parts`` are the unnormalized chain distances and ``total`` their sum
    divided by ``norm_b``.  For the orbital cycle the five parts are, in
    order, SYM-M, M-LF, LF-SUPP, SUPP-SR and SR-SYM; the named accessors
    assume that cycle.
    """

    parts: tuple
    labels: tuple
    norm_b: float

    @property
    def total(self) -> float:
        return sum(self.parts) / self.norm_b

    def _part(self, i: int) -> float:
        return self.parts[i]

    @property
    def gap_sym_m(self) -> float:
        return self._part(0)

    @property
    def gap_m_lf(self) -> float:
        return self._part(1)

    @property
    def gap_lf_supp(self) -> float:
        return self._part(2)

    @property
    def gap_supp_sr(self) -> float:
        return self._part(3)

    @property
    def gap_sr_sym(self) -> float:
        return self._part(4)

    def as_dict(self) -> dict:
        d = {f"gap_{lab}": p for lab, p in zip(self.labels, self.parts)}
        d["total"] = self.total
        return d


def gap(u: np.ndarray, problem: FeasibilityProblem) -> GapBreakdown:
    """Chained distances between the sets, evaluated at the shadow point u.

    Walking the cycle backwards (the cyclic-projection application order),
    each term is the distance between the previous chain point and its
    projection onto the next set; the total is the sum over terms divided by
    ``norm_b``.  Every term re-evaluates its left operand by applying the
    previous set's projector afresh, matching the displayed chain literally
    (nine projector calls for the five-set cycle).
    """
    if problem.norm_b <= 0.0:
        raise ValueError("gap requires a positive norm_b")
    chain = list(reversed(problem.sets))
    left = np.asarray(u, dtype=np.complex128)
    parts = []
    labels = []
    prev_tag = problem.sets[0].tag
    for k, cset in enumerate(chain):
        if k > 0:
            left = chain[k - 1].project(left)
        right = cset.project(left)
        parts.append(distance(left, right))
        labels.append(f"{prev_tag}-{cset.tag}")
        prev_tag = cset.tag
    return GapBreakdown(tuple(parts), tuple(labels), problem.norm_b)


def truth_error(u: np.ndarray, truth: np.ndarray) -> float:
    """Distance to the ground truth modulo the global sign ambiguity:

        E = (1/2) min(||t/||t|| - u/||u||||, ||t/||t|| + u/||u||||).
    """
    nu = norm(u)
    nt = norm(truth)
    if nu == 0.0 or nt == 0.0:
        raise ValueError("truth_error requires nonzero inputs")
    if not (math.isfinite(nu) and math.isfinite(nt)):
        return float("nan")
    a = np.asarray(truth) / nt
    b = np.asarray(u) / nu
    return 0.5 * min(distance(a, b), norm(a + b))


def shadow(state: np.ndarray, kind: str) -> np.ndarray:
    """The reported iterate of the orbital model for each operator kind.

    Cyclic projections report the iterate itself; the cyclic DR variant the
    symmetry projection of the iterate; the product-space DR the symmetry
    projection of the first block.
    """
    if kind == "cp":
        return state
    if kind == "cdrl":
        return project_sym(state)
    if kind == "drl":
        return project_sym(state[0])
    raise ValueError(f"unknown operator kind {kind!r}")
