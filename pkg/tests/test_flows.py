import csv
import math

import numpy as np
import pytest

from lagrangekit.corpus import CORPUS
from lagrangekit.flows import (IntegratorConfig, Trajectory, drift_report, integrate_horizontal,
                               integrate_semispray, max_gap)
from lagrangekit.jets import LagrangianField

from conftest import tp

FINE = IntegratorConfig(step=1e-3, t_end=1.0)
COARSE = IntegratorConfig(step=1e-2, t_end=1.0)


@pytest.fixture(scope="module")
def fine_semispray():
    cache = {}

    def get(name):
        if name not in cache:
            e = CORPUS[name]
            cache[name] = integrate_semispray(e.field(), e.u0, FINE)
        return cache[name]
    return get


def test_config_validation():
    assert FINE.n_steps == 1000
    assert IntegratorConfig(step=0.3, t_end=1.0).n_steps == 4
    for bad in (dict(step=0), dict(step=-1e-3), dict(step=2.0, t_end=1.0), dict(method="euler")):
        with pytest.raises(ValueError):
            IntegratorConfig(**bad)


def test_flat_straight_line(fine_semispray):
    tr = fine_semispray("flat")
    assert not tr.truncated and len(tr) == 1001
    np.testing.assert_allclose(np.array(tr.x)[:, 0], tr.t, atol=1e-12)
    assert np.all(np.array(tr.x)[:, 1] == 0)
    assert np.all(np.array(tr.y) == [1.0, 0.0])
    assert drift_report(tr).E_max == 0.0


def test_time_grid_strictly_increasing(fine_semispray):
    t = np.array(fine_semispray("polar").t)
    assert t[0] == 0.0 and t[-1] == 1.0
    assert np.all(np.diff(t) > 0)
    short = integrate_semispray(LagrangianField.parse("y1^2", 1), tp((0,), (1,)), IntegratorConfig(0.3, 1.0))
    assert short.t[-1] == 1.0 and np.all(np.diff(short.t) > 0)


def test_polar_geodesic_energy(fine_semispray):
    tr = fine_semispray("polar")
    assert drift_report(tr).E_max_rel <= 1e-10
    # geodesics are straight lines: in Cartesian terms this one is (1, t)
    x = np.array(tr.x)
    np.testing.assert_allclose(x[:, 0] * np.cos(x[:, 1]), 1.0, atol=1e-10)
    np.testing.assert_allclose(x[:, 0] * np.sin(x[:, 1]), tr.t, atol=1e-10)


def test_pert_linear_L_drift(fine_semispray):
    tr = fine_semispray("pert")
    x = np.array(tr.x)
    np.testing.assert_allclose(x[:, 0], 1 + np.array(tr.t), atol=1e-12)
    np.testing.assert_allclose(tr.SL, 2.0, atol=1e-12)
    d = drift_report(tr)
    assert d.L_final == pytest.approx(2.0, abs=1e-8)
    assert d.E_max == 0.0


@pytest.mark.parametrize("name", list(CORPUS))
def test_energy_drift_all_members(name, fine_semispray):
    tr = fine_semispray(name)
    assert not tr.truncated
    assert drift_report(tr).E_max_rel <= 1e-8


@pytest.mark.parametrize("name", ["polar", "polar-pert"])
def test_energy_fourth_order_convergence(name, fine_semispray):
    e = CORPUS[name]
    L = e.field()
    steps = (1e-2, 5e-3, 1e-3)
    drift = [drift_report(integrate_semispray(L, e.u0, IntegratorConfig(s, 1.0))).E_max_rel for s in steps[:2]]
    drift.append(drift_report(fine_semispray(name)).E_max_rel)
    C = drift[0] / steps[0] ** 4
    ratio = drift[0] / drift[1]
    assert 12 < ratio < 20, ratio  # 2^4 = 16
    for s, d in zip(steps, drift):
        assert d <= 1.5 * C * s ** 4 + 1e-14


def test_rate_consistency_semispray(fine_semispray):
    e = CORPUS["polar-pert"]
    coarse = drift_report(integrate_semispray(e.field(), e.u0, COARSE)).rate_residual
    fine = drift_report(fine_semispray("polar-pert")).rate_residual
    assert fine < 1e-5
    # central differencing is O(step^2): 10x smaller step, about 100x smaller residual
    assert coarse / fine > 50


def test_rate_consistency_horizontal():
    e = CORPUS["polar-pert"]
    tr = integrate_horizontal(e.field(), e.u0, FINE)
    y = np.array(tr.y)
    assert drift_report(tr).rate_residual < 1e-5
    assert tr.rate[0] == pytest.approx(float(y[0] @ [-1.0, -1.0]), abs=1e-12)


def test_horizontal_matches_semispray_flat_and_polar(fine_semispray):
    for name in ("flat", "polar"):
        e = CORPUS[name]
        hz = integrate_horizontal(e.field(), e.u0, FINE)
        assert max_gap(fine_semispray(name), hz) <= 1e-8
    hz = integrate_horizontal(CORPUS["polar"].field(), CORPUS["polar"].u0, FINE)
    assert drift_report(hz).L_max_rel <= 1e-8


def test_polar_pert_curves_coincide(fine_semispray):
    # G is shared with the 2-homogeneous base Lagrangian, so N y = 2G and hS = S:
    # both vector fields are equal and RK4 reproduces the same numbers
    e = CORPUS["polar-pert"]
    hz = integrate_horizontal(e.field(), e.u0, FINE)
    assert max_gap(fine_semispray("polar-pert"), hz) <= 1e-12
    # L is not conserved along either curve
    assert drift_report(hz).L_max > 0.1


def test_horizontal_differs_when_G_not_quadratic():
    L = LagrangianField.parse("(1 + x1^2)*y1^4 + y2^2 + x2*y1", 2)
    u0 = tp((0.5, 0.3), (1.0, 0.7))
    cfg = IntegratorConfig(1e-2, 1.0)
    assert max_gap(integrate_semispray(L, u0, cfg), integrate_horizontal(L, u0, cfg)) > 1e-3


def test_fiber_collapse_truncates():
    # y1' = -y1^2, so y1 = 1/(1 + t) stays above 0.1 until t = 9
    L = LagrangianField.parse("exp(2*x1)*y1^2", 1)
    tr = integrate_semispray(L, tp((0,), (1,)), IntegratorConfig(1e-2, 5.0))
    assert not tr.truncated
    L = LagrangianField.parse("exp(x1)*y1^2", 1)  # y1' = -y1^2/2 crosses 0.1 at t = 18
    tr = integrate_semispray(L, tp((0,), (1,)), IntegratorConfig(1e-1, 40.0))
    assert tr.truncated and "fiber collapse" in tr.reason
    assert min(abs(v[0]) for v in tr.y) >= 0.1


def test_domain_error_truncates():
    L = LagrangianField.parse("y1^2/x1", 1)
    tr = integrate_semispray(L, tp((0.5,), (-1,)), IntegratorConfig(1e-2, 2.0))
    assert tr.truncated and tr.reason
    assert len(tr) >= 2


def test_degenerate_start_truncates():
    tr = integrate_semispray(LagrangianField.parse("y1", 1), tp((0,), (1,)))
    assert tr.truncated and "DegenerateLagrangian" in tr.reason and len(tr) == 0


def test_csv_export(tmp_path, fine_semispray):
    tr = fine_semispray("pert")
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2", "y1", "y2", "L", "E", "SL", "dhL_max"]
    assert len(rows) == len(tr) + 1
    last = [float(v) for v in rows[-1]]
    assert last[0] == 1.0 and last[1] == pytest.approx(2.0)
    assert float(rows[-1][5]) == tr.L[-1]


def test_drift_report_needs_two_samples():
    with pytest.raises(ValueError):
        drift_report(Trajectory("semispray", 1, t=[0.0], L=[1.0], E=[1.0], rate=[0.0]))


def test_max_gap_empty():
    assert math.isnan(max_gap(Trajectory("a", 1), Trajectory("b", 1)))
