import math

import numpy as np
import pytest

from feasilab.constraints import (
    AmplitudeConstraint,
    FeasibilityProblem,
    LowFreqConstraint,
    SphereData,
    SparseRealConstraint,
    SupportConstraint,
    SymmetryConstraint,
    project_sym,
)
from feasilab.fields import dft3_forward, distance, max_freq_radius, norm
from feasilab.metrics import GapBreakdown, gap, shadow, truth_error

from _toys import full_cover_instance, random_field, small_instance, two_lines_problem


def test_gap_zero_on_feasible_point():
    inst = full_cover_instance(seed=1)
    problem = inst.problem()
    breakdown = gap(inst.truth, problem)
    assert breakdown.total <= 1e-9
    assert all(p <= 1e-9 for p in breakdown.parts)
    assert breakdown.labels == ("SYM-M", "M-LF", "LF-SUPP", "SUPP-SR", "SR-SYM")


def test_gap_single_amplitude_violation():
    # a field in SYM, SR, SUPP and LF whose only defect is one mismatched
    # amplitude at a self-conjugate, symmetry-compatible frequency: the
    # SYM-M leg carries exactly that mismatch and every other leg is zero
    dims = (4, 4, 4)
    n_total = 64
    u = project_sym(random_field(dims, seed=2)).real.astype(np.complex128)
    idx = (0, 2, 2)
    v = dft3_forward(u)[idx]
    assert abs(v.imag) < 1e-12
    assert abs(v) > 1e-3
    scale = 1.7
    b = scale * abs(v)
    data = SphereData(indexes=np.array([idx]), amplitudes=np.array([b]))
    sets = (
        SymmetryConstraint(),
        SparseRealConstraint(n_total),
        SupportConstraint(np.ones(dims)),
        LowFreqConstraint(dims, max_freq_radius(dims) + 1.0),
        AmplitudeConstraint(data),
    )
    problem = FeasibilityProblem(sets=sets, dims=dims, norm_b=data.norm_b)
    breakdown = gap(u, problem)
    mismatch = abs(b - abs(v))
    assert breakdown.gap_sym_m == pytest.approx(mismatch, rel=1e-10)
    for part in breakdown.parts[1:]:
        assert part <= 1e-10
    assert breakdown.total == pytest.approx(mismatch / b, rel=1e-10)


def test_gap_matches_chained_recomputation():
    inst = small_instance()
    problem = inst.problem()
    u = random_field(inst.dims, seed=3)
    breakdown = gap(u, problem)
    x = u
    expected = []
    for cset in reversed(problem.sets):
        nxt = cset.project(x)
        expected.append(distance(x, nxt))
        x = nxt
    assert np.allclose(breakdown.parts, expected, rtol=1e-12, atol=1e-14)
    assert breakdown.total == pytest.approx(sum(expected) / problem.norm_b)


def test_gap_breakdown_total_consistency():
    inst = small_instance()
    problem = inst.problem()
    breakdown = gap(random_field(inst.dims, seed=4), problem)
    assert (breakdown.total * breakdown.norm_b
            == pytest.approx(sum(breakdown.parts), rel=1e-12))


def test_gap_requires_positive_norm_b():
    problem = two_lines_problem(0.4)
    bad = FeasibilityProblem(sets=problem.sets, dims=problem.dims, norm_b=0.0)
    with pytest.raises(ValueError):
        gap(np.zeros((2, 1, 1), dtype=np.complex128), bad)


def test_gap_sign_flip_invariance():
    inst = small_instance()
    problem = inst.problem()
    u = random_field(inst.dims, seed=5)
    assert gap(-u, problem).total == pytest.approx(gap(u, problem).total, abs=1e-10)


def test_gap_feasibility_iff_zero_on_consistent_toy():
    problem = two_lines_problem(0.7)
    a, b = problem.sets
    zero = np.zeros((2, 1, 1), dtype=np.complex128)
    assert gap(zero, problem).total <= 1e-15
    for seed in range(5):
        u = random_field((2, 1, 1), seed=10 + seed)
        g = gap(u, problem).total
        feasible = distance(u, a.project(u)) <= 1e-9 and distance(u, b.project(u)) <= 1e-9
        assert (g <= 1e-9) == feasible


def test_truth_error_basic():
    u = random_field((3, 3, 3), seed=20)
    assert truth_error(u, u) <= 1e-15
    assert truth_error(-u, u) <= 1e-15
    assert truth_error(2.5 * u, u) <= 1e-15  # scale-invariant


def test_truth_error_orthogonal_unit_vectors():
    u = np.zeros((2, 1, 1), dtype=np.complex128)
    v = np.zeros((2, 1, 1), dtype=np.complex128)
    u[0] = 1.0
    v[1] = 1.0
    assert truth_error(v, u) == pytest.approx(0.5 * math.sqrt(2.0), rel=1e-12)


def test_truth_error_range_and_errors():
    for seed in range(10):
        u = random_field((3, 3, 3), seed=30 + seed)
        v = random_field((3, 3, 3), seed=40 + seed)
        e = truth_error(u, v)
        assert 0.0 <= e <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        truth_error(np.zeros((2, 1, 1)), u)
    with pytest.raises(ValueError):
        truth_error(u, np.zeros((3, 3, 3)))


def test_shadow_kinds():
    u = random_field((4, 4, 4), seed=50)
    assert shadow(u, "cp") is u
    sym_u = project_sym(u)
    assert np.array_equal(shadow(sym_u, "cdrl"), sym_u)
    assert np.array_equal(shadow(u, "cdrl"), project_sym(u))
    p = np.stack([random_field((4, 4, 4), seed=60 + i) for i in range(5)])
    assert np.array_equal(shadow(p, "drl"), project_sym(p[0]))
    with pytest.raises(ValueError):
        shadow(u, "nope")
