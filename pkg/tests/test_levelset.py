"""
Tests for level-set extraction and the integral quantities built on it.

Exact ball solutions sampled on grids serve as references: on them the
boundary inequality is an equality, the monotone quantity is constant and
the two forms of the capacity agree.
"""

import csv
import math
import os
import sys

import numpy as np
import pytest

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exterior_hessian.errors import PreconditionError
from exterior_hessian.components.closedforms import ProblemParams, ball_capacity, exact_solution, w_profile
from exterior_hessian.components.subsolution import Ball
from exterior_hessian.components.solver import CartesianGrid, RadialGrid, SolutionField
from exterior_hessian.components.levelset import (
    I_abk,
    I_abk_by_curvature,
    InequalityReport,
    area_bound_series,
    capacity_pair,
    coarea_check,
    curvature_from_hessian,
    extract,
    extract_many,
    forward_increase_ratio,
    inequality_report,
    max_forward_increase,
    monotone_series,
    write_inequality_csv,
    write_table,
)


def _radial_exact(n, k, R=600.0, npd=48):
    params = ProblemParams(n=n, k=k, r0=1.0, R0=4.0, eps=0.0, R=R)
    grid = RadialGrid.geometric(n, 1.0, R, npd)
    return SolutionField(values=exact_solution(params, grid.nodes), grid=grid, params=params,
                         domain=Ball(center=(0.0,) * n, radius=1.0))


def _cartesian_exact(n, h, R, value, R0=2.5):
    params = ProblemParams(n=n, k=1, r0=1.0, R0=R0, eps=0.0, R=R)
    ball = Ball(center=(0.0,) * n, radius=1.0)
    grid = CartesianGrid(n=n, h=h, outer_radius=R, domain=ball)
    radius = np.maximum(np.linalg.norm(grid.coordinates(), axis=-1), 0.5)
    return SolutionField(values=value(radius), grid=grid, params=params, domain=ball)


# ---------------------------------------------------------------- extraction

def test_radial_extraction():
    field = _radial_exact(3, 1)
    sample = extract(field, -0.5)
    assert sample.points[0, 0] == pytest.approx(2.0, rel=1e-8)
    assert sample.area == pytest.approx(16 * math.pi, rel=1e-7)
    assert sample.grad_norm[0] == pytest.approx(0.25, rel=1e-5)
    assert sample.curvature(1)[0] == pytest.approx(1.0, rel=1e-5)
    with pytest.raises(PreconditionError):
        extract(field, 0.5)


def test_curvature_from_hessian_on_sphere():
    field = _radial_exact(5, 2)
    point = np.array([[2.0, 0.0, 0.0, 0.0, 0.0]])
    assert curvature_from_hessian(field, point, 1) == pytest.approx(1.0, rel=1e-8)
    # H_1 = 4/r and H_2 = C(4,2)/r²
    assert curvature_from_hessian(field, point, 2) == pytest.approx(2.0, rel=1e-5)
    assert curvature_from_hessian(field, point, 3) == pytest.approx(1.5, rel=1e-5)
    with pytest.raises(PreconditionError):
        curvature_from_hessian(field, point, 6)


def test_marching_squares_circle():
    field = _cartesian_exact(2, 0.1, 8.0, np.log)
    sample = extract(field, math.log(2.0))
    assert sample.area == pytest.approx(4 * math.pi, rel=2e-3)
    assert np.allclose(np.linalg.norm(sample.points, axis=-1), 2.0, atol=5e-3)
    assert np.mean(sample.curvature(1)) == pytest.approx(0.5, rel=2e-2)


def test_marching_cubes_sphere():
    field = _cartesian_exact(3, 0.1, 3.0, lambda r: -1.0 / r, R0=2.1)
    # a level strictly between the boundary values c = -1 and w(R)
    t = 0.5 * (-1.0 + float(w_profile(field.params, 3.0)))
    radius = -1.0 / t
    sample = extract(field, t)
    assert sample.area == pytest.approx(4 * math.pi * radius ** 2, rel=1e-2)
    assert np.allclose(np.linalg.norm(sample.points, axis=-1), radius, atol=2e-2)


def test_extract_many_keeps_order():
    field = _radial_exact(3, 1)
    ts = [-0.2, -0.8, -0.5]
    samples = extract_many(field, ts, threads=3)
    assert [s.t for s in samples] == ts


def test_integral_forms_agree():
    field = _radial_exact(5, 2)
    sample = extract(field, -0.25)
    assert I_abk(field, -0.25, 1.0, 2.0, sample=sample) == pytest.approx(
        I_abk_by_curvature(field, sample, 1.0, 2.0), rel=1e-8)


# ---------------------------------------------------------------- ∂Ω quantities

@pytest.mark.parametrize("n,k,b", [(3, 1, 1.0), (3, 1, 0.5), (5, 2, 2.0), (5, 1, 3.0)])
def test_inequality_is_equality_on_balls(n, k, b):
    report = inequality_report(_radial_exact(n, k), b)
    assert report.gated and report.passed
    assert report.slack == pytest.approx(0.0, abs=1e-4 * report.lhs)


def test_inequality_thresholds():
    with pytest.raises(PreconditionError):
        inequality_report(_radial_exact(3, 1), 0.1)
    with pytest.raises(PreconditionError):
        inequality_report(_radial_exact(4, 2), 1.0)
    supercritical = inequality_report(_radial_exact(3, 2), 0.5)
    assert not supercritical.gated and supercritical.passed is None


@pytest.mark.parametrize("n,k", [(3, 1), (5, 2)])
def test_capacity_forms_agree_on_balls(n, k):
    field = _radial_exact(n, k)
    pair = capacity_pair(field)
    expected = ball_capacity(field.params)
    assert pair.boundary == pytest.approx(expected, rel=1e-4)
    assert pair.volume == pytest.approx(expected, rel=1e-2)
    assert pair.tail > 0 and pair.tail_exponent < -1.0


# ---------------------------------------------------------------- t series

def test_monotone_series_constant_on_ball():
    field = _radial_exact(3, 1)
    ts = np.linspace(-0.9, -0.1, 9)
    series = monotone_series(field, 1.0, ts, threads=2)
    assert series.a == 1.0 and series.a0 == pytest.approx(-1.0)
    assert np.allclose(series.values, 4 * math.pi, rel=1e-4)
    assert series.max_forward_increase <= 1e-4 * 4 * math.pi
    assert series.drift_constant is None
    with pytest.raises(PreconditionError):
        monotone_series(field, 1.0, [0.1, 0.2])


def test_forward_increase():
    assert max_forward_increase([1.0, 0.5, 0.7, 0.2]) == pytest.approx(0.2)
    assert max_forward_increase([3.0, 2.0, 1.0]) == 0.0
    assert max_forward_increase([1.0]) == 0.0


def test_forward_increase_ratio():
    field = _radial_exact(3, 1)
    coarse = monotone_series(field, 1.0, [-0.8, -0.4])
    fine = coarse.model_copy(update={"max_forward_increase": 0.0})
    assert forward_increase_ratio(fine, fine) == 1.0
    assert forward_increase_ratio(coarse.model_copy(update={"max_forward_increase": 0.4}),
                                  coarse.model_copy(update={"max_forward_increase": 0.1})) == pytest.approx(4.0)


def test_area_ratio_constant_on_ball():
    series = area_bound_series(_radial_exact(3, 1), np.linspace(-0.9, -0.05, 12))
    assert series.bounded
    assert series.growth == pytest.approx(1.0, rel=1e-5)
    assert all(row.ratio == pytest.approx(4 * math.pi, rel=1e-5) for row in series.rows)


def test_coarea_check():
    check = coarea_check(_radial_exact(5, 2), np.linspace(-0.9, -0.1, 41))
    assert check.passed
    with pytest.raises(PreconditionError):
        coarea_check(_radial_exact(5, 2), [-0.5, -0.4])


# ---------------------------------------------------------------- CSV tables

def test_table_header_and_cells(tmp_path):
    path = str(tmp_path / "inequality.csv")
    report = InequalityReport(case="Subcritical", b=1.0, lhs=2.0, rhs=2.5, coefficient=0.5,
                              slack=0.5, gated=True, passed=True)
    write_inequality_csv(path, [report])
    with open(path, encoding="utf-8") as handle:
        first = handle.readline().strip()
        rows = list(csv.reader(handle))
    assert first == "# exterior-hessian inequality v1"
    assert rows[0] == ["b", "lhs", "rhs", "slack", "passed"]
    assert rows[1] == ["1.0", "2.0", "2.5", "0.5", "true"]


def test_table_refuses_overwrite(tmp_path):
    path = str(tmp_path / "t.csv")
    write_table(path, "t", ["a"], [[None]])
    with pytest.raises(FileExistsError):
        write_table(path, "t", ["a"], [[1]])
    write_table(path, "t", ["a"], [[1]], force=True)
    with open(path, encoding="utf-8") as handle:
        assert handle.read().splitlines()[-1] == "1"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
