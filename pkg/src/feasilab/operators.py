"""Fixed-point maps: cyclic projections, cyclic relaxed Douglas-Rachford, and
relaxed Douglas-Rachford on the product space.

All maps are written for a cycle of m constraint sets given in composition
order (the rightmost factor acts first).  For the orbital model the cycle is
(SYM, SR, SUPP, LF, M), so cyclic projections applies P_M first and P_SYM
last, and the cyclic DR variant chains the pairwise maps

    T_(SYM,SR) . T_(SR,SUPP) . T_(SUPP,LF) . T_(LF,M) . T_(M,SYM).
"""

import numpy as np

from .constraints import (
    lift_to_product,
    project_c,
    project_d,
    project_d_proj_average,
)

__all__ = [
    "dr_pair",
    "apply_cp",
    "apply_cdrl",
    "apply_drl_product",
    "CyclicProjections",
    "CyclicRelaxedDR",
    "ProductRelaxedDR",
    "IdentityOperator",
    "make_operator",
    "DIAGONAL_STANDARD",
    "DIAGONAL_PROJ_AVG",
]

DIAGONAL_STANDARD = "standard"
DIAGONAL_PROJ_AVG = "projected-average"


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"relaxation parameter must lie in [0, 1], got {lam}")
    return lam


def dr_pair(a, b, lam: float, u: np.ndarray) -> np.ndarray:
    """One relaxed Douglas-Rachford step for the ordered set pair (a, b):

        T u = (lam/2) (R_a R_b u + u) + (1 - lam) P_b u.

    lam = 0 collapses to P_b, lam = 1 to the classical DR map.
    """
    lam = _check_lambda(lam)
    return 0.5 * lam * (a.reflect(b.reflect(u)) + u) + (1.0 - lam) * b.project(u)


def apply_cp(sets, u: np.ndarray) -> np.ndarray:
    """One sweep of cyclic projections: project onto each set, last set first."""
    for cset in reversed(sets):
        u = cset.project(u)
    return u


def apply_cdrl(sets, lam: float, u: np.ndarray) -> np.ndarray:
    """One sweep of cyclic relaxed DR over the pairs (s_j, s_(j+1 mod m)).

    The pair maps compose right to left, so the (last, first) pair acts first.
    At lam = 0 every pair map collapses to the projection onto its second set
    and the sweep equals the plain projection cycle rotated by one position.
    """
    lam = _check_lambda(lam)
    m = len(sets)
    for j in reversed(range(m)):
        u = dr_pair(sets[j], sets[(j + 1) % m], lam, u)
    return u


def apply_drl_product(sets, lam: float, p: np.ndarray,
                      diagonal_variant: str = DIAGONAL_STANDARD) -> np.ndarray:
    """One relaxed DR step between the product set C and the diagonal D:

        T p = (lam/2) (R_D R_C p + p) + (1 - lam) P_C p.
    """
    lam = _check_lambda(lam)
    pc = project_c(p, sets)
    rc = 2.0 * pc - p
    if diagonal_variant == DIAGONAL_STANDARD:
        pd = project_d(rc)
    elif diagonal_variant == DIAGONAL_PROJ_AVG:
        pd = project_d_proj_average(rc, sets)
    else:
        raise ValueError(f"unknown diagonal variant {diagonal_variant!r}")
    rd = 2.0 * pd - rc
    return 0.5 * lam * (rd + p) + (1.0 - lam) * pc


class CyclicProjections:
    """T = P_1 . P_2 . ... . P_m over the cycle, iterated on a single field."""

    kind = "cp"

    def __init__(self, sets):
        self.sets = tuple(sets)

    def lift(self, u0: np.ndarray) -> np.ndarray:
        return np.asarray(u0, dtype=np.complex128)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return apply_cp(self.sets, u)

    def shadow(self, u: np.ndarray) -> np.ndarray:
        return u


class CyclicRelaxedDR:
    """Composition of pairwise relaxed DR maps around the cycle."""

    kind = "cdrl"

    def __init__(self, sets, lam: float):
        self.sets = tuple(sets)
        self.lam = _check_lambda(lam)

    def lift(self, u0: np.ndarray) -> np.ndarray:
        return np.asarray(u0, dtype=np.complex128)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return apply_cdrl(self.sets, self.lam, u)

    def shadow(self, u: np.ndarray) -> np.ndarray:
        return self.sets[0].project(u)


class ProductRelaxedDR:
    """Relaxed DR between the product of the sets and the diagonal.

    Iterates on product points of shape (m,) + dims; a plain field start is
    lifted by replication.  The monitored shadow is the first block projected
    onto the first set of the cycle.
    """

    kind = "drl"

    def __init__(self, sets, lam: float, diagonal_variant: str = DIAGONAL_STANDARD):
        self.sets = tuple(sets)
        self.lam = _check_lambda(lam)
        if diagonal_variant not in (DIAGONAL_STANDARD, DIAGONAL_PROJ_AVG):
            raise ValueError(f"unknown diagonal variant {diagonal_variant!r}")
        self.diagonal_variant = diagonal_variant

    def lift(self, u0: np.ndarray) -> np.ndarray:
        u0 = np.asarray(u0, dtype=np.complex128)
        if u0.ndim == 4:
            if u0.shape[0] != len(self.sets):
                raise ValueError("product point block count does not match cycle")
            return u0
        return lift_to_product(u0, len(self.sets))

    def apply(self, p: np.ndarray) -> np.ndarray:
        return apply_drl_product(self.sets, self.lam, p, self.diagonal_variant)

    def shadow(self, p: np.ndarray) -> np.ndarray:
        return self.sets[0].project(p[0])


class IdentityOperator:
    """Test double: T = Id, so any start is a fixed point and runs stop at n = 1."""

    kind = "identity"

    def lift(self, u0: np.ndarray) -> np.ndarray:
        return np.asarray(u0, dtype=np.complex128)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return u

    def shadow(self, u: np.ndarray) -> np.ndarray:
        return u


def make_operator(kind: str, sets, lam: float = 0.5,
                  diagonal_variant: str = DIAGONAL_STANDARD):
    """Build a splitting operator by name: 'cp', 'cdrl' or 'drl'."""
    if kind == "cp":
        return CyclicProjections(sets)
    if kind == "cdrl":
        return CyclicRelaxedDR(sets, lam)
    if kind == "drl":
        return ProductRelaxedDR(sets, lam, diagonal_variant)
    if kind == "identity":
        return IdentityOperator()
    raise ValueError(f"unknown operator kind {kind!r}")
