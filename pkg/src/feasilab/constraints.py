"""The five constraint sets of the orbital feasibility model.

Set membership, with ``u_hat`` the unitary 3D DFT of ``u``:

  M    : |u_hat| = b on the sphere index set S     (Fourier amplitude data)
  LF   : u_hat = 0 outside the ball of radius r    (low-frequency support)
  SUPP : u * mask = u                              (object-domain support)
  SR   : u real with at most s nonzero entries     (sparse real)
  SYM  : u = flip1(u) = -flip2(u) = -flip3(u)      (mirror even/odd symmetry)

SYM, SUPP and LF are linear subspaces, so their projectors are single-valued
exact metric projections.  M and SR are nonconvex and their projectors are
set-valued in corner cases; the functions here return one deterministic
selection (documented on each function) so every solver in this package is a
single-valued map of its input.

The product-space formulation lives here too: a product point is an array of
shape ``(m,) + dims`` holding m field blocks, C is the Cartesian product of
the five sets (blockwise projection) and D is the diagonal of equal blocks.
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import dft3_forward, dft3_inverse, freq_radius_grid

__all__ = [
    "PHASE_EPS",
    "SphereData",
    "ConstraintParams",
    "Constraint",
    "SymmetryConstraint",
    "SparseRealConstraint",
    "SupportConstraint",
    "LowFreqConstraint",
    "AmplitudeConstraint",
    "FeasibilityProblem",
    "project_m",
    "project_lf",
    "project_supp",
    "project_sr",
    "project_sym",
    "reflect",
    "lift_to_product",
    "project_c",
    "project_d",
    "project_d_proj_average",
    "reflect_c",
    "reflect_d",
]

# Guard for the amplitude projector's division b * u_hat / |u_hat|; below this
# the phase is undetermined and a fixed selection (theta = 0) is used instead.
PHASE_EPS = 1e-14


@dataclass(frozen=True)
class SphereData:
    """Amplitude data b sampled on the sphere index set S of the frequency grid.

    ``indexes`` is an (m, 3) integer array of unique FFT-grid indexes and
    ``amplitudes`` the matching nonnegative measured values.
    """

    indexes: np.ndarray
    amplitudes: np.ndarray
    norm_b: float = field(default=-1.0)

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indexes, dtype=np.intp).reshape(-1, 3)
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.float64).ravel()
        if idx.shape[0] != amp.shape[0]:
            raise ValueError("indexes and amplitudes must have matching length")
        if idx.shape[0] == 0:
            raise ValueError("sphere index set is empty")
        if np.unique(idx, axis=0).shape[0] != idx.shape[0]:
            raise ValueError("sphere indexes must be unique")
        if np.any(amp < 0):
            raise ValueError("amplitudes must be nonnegative")
        object.__setattr__(self, "indexes", idx)
        object.__setattr__(self, "amplitudes", amp)
        nb = float(np.linalg.norm(amp))
        if self.norm_b < 0:
            object.__setattr__(self, "norm_b", nb)
        elif abs(self.norm_b - nb) > 1e-9 * max(1.0, nb):
            raise ValueError("norm_b does not match the amplitude list")

    def __len__(self) -> int:
        return self.indexes.shape[0]


@dataclass(frozen=True)
class ConstraintParams:
    """Parameters of the non-amplitude sets: LF radius, support mask, sparsity."""

    lf_radius: float
    supp_mask: np.ndarray
    sparsity: int
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        mask = np.ascontiguousarray(self.supp_mask, dtype=np.float64)
        if mask.shape != dims:
            raise ValueError(f"mask shape {mask.shape} does not match dims {dims}")
        if not np.all((mask == 0.0) | (mask == 1.0)):
            raise ValueError("support mask must be binary")
        for ax in range(3):
            if not np.array_equal(mask, np.flip(mask, axis=ax)):
                raise ValueError(f"support mask must be symmetric along axis {ax + 1}")
        n_total = int(np.prod(dims))
        if not 0 < int(self.sparsity) <= n_total:
            raise ValueError(f"sparsity must be in (0, {n_total}]")
        if self.lf_radius < 0:
            raise ValueError("lf_radius must be nonnegative")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "supp_mask", mask)
        object.__setattr__(self, "sparsity", int(self.sparsity))


# ---------------------------------------------------------------------------
# projector formulas
# ---------------------------------------------------------------------------


def project_m(u: np.ndarray, data: SphereData) -> np.ndarray:
    """Rescale the Fourier coefficients on S to the measured amplitudes.

    Coefficients keep their phase where the current amplitude exceeds
    PHASE_EPS; at (numerically) zero amplitude the phase is undetermined and
    theta = 0 is selected, i.e. the coefficient becomes b + 0j.  Indexes
    outside S are untouched: the set constrains nothing there, so the metric
    projection is the identity on that part of the spectrum.
    """
    v = dft3_forward(u)
    i, j, l = data.indexes[:, 0], data.indexes[:, 1], data.indexes[:, 2]
    vals = v[i, j, l]
    mags = np.abs(vals)
    safe = np.where(mags > PHASE_EPS, mags, 1.0)
    phases = np.where(mags > PHASE_EPS, vals / safe, 1.0 + 0.0j)
    v[i, j, l] = data.amplitudes * phases
    return dft3_inverse(v)


def project_lf(u: np.ndarray, radius: float, keep: np.ndarray | None = None) -> np.ndarray:
    """Zero every Fourier coefficient outside the closed centered ball."""
    if keep is None:
        keep = freq_radius_grid(u.shape) <= radius
    v = dft3_forward(u)
    v[~keep] = 0.0
    return dft3_inverse(v)


def project_supp(u: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Apply the binary object-domain mask entrywise."""
    return u * mask


def project_sr(u: np.ndarray, s: int) -> np.ndarray:
    """Keep the s largest-magnitude entries of the real part, zero the rest.

    The composition order matters: dropping imaginary parts first and then
    hard-thresholding is the metric projection onto SR; the reverse order is
    not.  Ties at the s-th magnitude are broken toward the lowest linear
    (C-order) index, a fixed selection among the equally-near candidates.
    """
    flat = np.real(np.ravel(u))
    if not 0 < s <= flat.size:
        raise ValueError(f"sparsity must be in (0, {flat.size}]")
    order = np.lexsort((np.arange(flat.size), -np.abs(flat)))
    out = np.zeros(flat.size, dtype=np.complex128)
    keep = order[:s]
    out[keep] = flat[keep]
    return out.reshape(np.shape(u))


def project_sym(u: np.ndarray) -> np.ndarray:
    """Project onto the mirror symmetry subspace.

    Composition of the three commuting subspace projectors: even in axis 1,
    odd in axes 2 and 3, each an average of the identity with the (signed)
    axis reversal.
    """
    v = 0.5 * (u + np.flip(u, axis=0))
    v = 0.5 * (v - np.flip(v, axis=1))
    v = 0.5 * (v - np.flip(v, axis=2))
    return v


# ---------------------------------------------------------------------------
# constraint objects
# ---------------------------------------------------------------------------


class Constraint:
    """A closed set, exposed through its projector and induced reflector."""

    tag = "?"

    def project(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reflect(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * self.project(u) - u

    def __repr__(self):
        return f"<{type(self).__name__} {self.tag}>"


def reflect(cset: Constraint, u: np.ndarray) -> np.ndarray:
    """Reflector 2 P - Id of a constraint set."""
    return cset.reflect(u)


class SymmetryConstraint(Constraint):
    tag = "SYM"

    def project(self, u):
        return project_sym(u)


class SparseRealConstraint(Constraint):
    tag = "SR"

    def __init__(self, sparsity: int):
        if sparsity < 1:
            raise ValueError("sparsity must be positive")
        self.sparsity = int(sparsity)

    def project(self, u):
        return project_sr(u, self.sparsity)


class SupportConstraint(Constraint):
    tag = "SUPP"

    def __init__(self, mask: np.ndarray):
        self.mask = np.ascontiguousarray(mask, dtype=np.float64)

    def project(self, u):
        return project_supp(u, self.mask)


class LowFreqConstraint(Constraint):
    tag = "LF"

    def __init__(self, dims, radius: float):
        self.radius = float(radius)
        self.keep = freq_radius_grid(dims) <= self.radius

    def project(self, u):
        return project_lf(u, self.radius, keep=self.keep)


class AmplitudeConstraint(Constraint):
    tag = "M"

    def __init__(self, data: SphereData):
        self.data = data

    def project(self, u):
        return project_m(u, self.data)


@dataclass(frozen=True)
class FeasibilityProblem:
    """A cycle of constraint sets plus the bookkeeping the solvers need.

    ``sets`` is given in cyclic-projection composition order: the last set is
    applied first and ``sets[0]`` (SYM for the orbital model) last; the gap
    chain and the monitoring shadow both start from ``sets[0]``.  ``norm_b``
    is the gap normalizer and ``truth`` the optional ground-truth field.
    """

    sets: tuple
    dims: tuple
    norm_b: float = 1.0
    truth: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if len(self.sets) < 2:
            raise ValueError("a feasibility cycle needs at least two sets")


# ---------------------------------------------------------------------------
# product space: C = A_1 x ... x A_m and the diagonal D
# ---------------------------------------------------------------------------


def lift_to_product(u: np.ndarray, m: int) -> np.ndarray:
    """Replicate a field into an m-block product point of shape (m,) + dims."""
    u = np.asarray(u, dtype=np.complex128)
    return np.stack([u] * m)


def project_c(p: np.ndarray, sets) -> np.ndarray:
    """Blockwise projection onto the Cartesian product of the sets."""
    if p.shape[0] != len(sets):
        raise ValueError(f"product point has {p.shape[0]} blocks, expected {len(sets)}")
    return np.stack([cset.project(p[i]) for i, cset in enumerate(sets)])


def project_d(p: np.ndarray) -> np.ndarray:
    """Metric projection onto the diagonal: every block becomes the block mean."""
    mean = p.mean(axis=0)
    return np.stack([mean] * p.shape[0])


def project_d_proj_average(p: np.ndarray, sets) -> np.ndarray:
    """Variant that averages the blockwise projections instead of the blocks.

    Not the metric projector onto the diagonal; kept behind a config switch
    for comparison runs.
    """
    mean = project_c(p, sets).mean(axis=0)
    return np.stack([mean] * p.shape[0])


def reflect_c(p: np.ndarray, sets) -> np.ndarray:
    return 2.0 * project_c(p, sets) - p


def reflect_d(p: np.ndarray) -> np.ndarray:
    return 2.0 * project_d(p) - p
