"""Fixed-step RK4 integration of the semispray flow and of the horizontal
flow ``x' = y, y' = -N(x, y) y``, with per-step conservation diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from lagrangekit.errors import DegenerateLagrangian, DomainError
from lagrangekit.geometry import _metric_from_jet, _semispray_parts, geometry_at
from lagrangekit.jets import LagrangianField, TangentPoint

FIBER_COLLAPSE = 0.1


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-3
    t_end: float = 1.0
    method: str = "rk4"

    def __post_init__(self):
        if not self.step > 0 or not self.t_end > 0:
            raise ValueError("step and t_end must be positive")
        if self.step > self.t_end:
            raise ValueError("step must not exceed t_end")
        if self.method != "rk4":
            raise ValueError("only fixed-step rk4 is supported")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_end / self.step - 1e-9))


@dataclass
class Trajectory:
    kind: str
    n: int
    t: list = field(default_factory=list)
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    L: list = field(default_factory=list)
    E: list = field(default_factory=list)
    SL: list = field(default_factory=list)
    dhL_max: list = field(default_factory=list)
    # dL/dt predicted by the flow: S(L) or y^i L_|i
    rate: list = field(default_factory=list)
    truncated: bool = False
    reason: str = ""

    def __len__(self):
        return len(self.t)

    @property
    def states(self) -> np.ndarray:
        return np.hstack([np.array(self.x), np.array(self.y)])

    def to_csv(self, path):
        n = self.n
        header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
                  + ["L", "E", "SL", "dhL_max"])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(len(self.t)):
                w.writerow([repr(float(v)) for v in
                            [self.t[k], *self.x[k], *self.y[k], self.L[k], self.E[k],
                             self.SL[k], self.dhL_max[k]]])


def _semispray_rhs(L, z):
    n = L.n
    jet = L.jet(z, 2)
    y = z[n:]
    G, _, _ = _semispray_parts(jet, y, _metric_from_jet(jet, n), need_connection=False)
    return np.concatenate([y, -2.0 * G])


def _horizontal_rhs(L, z):
    n = L.n
    jet = L.jet(z, 3)
    y = z[n:]
    _, N, _ = _semispray_parts(jet, y, _metric_from_jet(jet, n), need_connection=True)
    return np.concatenate([y, -N @ y])


def _integrate(L: LagrangianField, u0: TangentPoint, cfg: IntegratorConfig, kind: str) -> Trajectory:
    rhs = _semispray_rhs if kind == "semispray" else _horizontal_rhs
    n = L.n
    traj = Trajectory(kind=kind, n=n)
    z = np.asarray(u0.z, dtype=float)
    y0_norm = float(np.linalg.norm(z[n:]))

    def record(t, z):
        b = geometry_at(L, TangentPoint.from_z(z))
        traj.t.append(t)
        traj.x.append(z[:n].copy())
        traj.y.append(z[n:].copy())
        traj.L.append(b.jet.value)
        traj.E.append(b.energy)
        traj.SL.append(b.SL)
        traj.dhL_max.append(float(np.max(np.abs(b.dhL))))
        traj.rate.append(b.SL if kind == "semispray" else float(z[n:] @ b.dhL))

    try:
        record(0.0, z)
    except (DegenerateLagrangian, DomainError, ValueError) as exc:
        traj.truncated, traj.reason = True, f"{type(exc).__name__}: {exc}"
        return traj
    steps = cfg.n_steps
    for k in range(steps):
        t = traj.t[-1]
        h = min(cfg.step, cfg.t_end - t) if k == steps - 1 else cfg.step
        try:
            k1 = rhs(L, z)
            k2 = rhs(L, z + 0.5 * h * k1)
            k3 = rhs(L, z + 0.5 * h * k2)
            k4 = rhs(L, z + h * k3)
            z_new = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if np.linalg.norm(z_new[n:]) < FIBER_COLLAPSE * y0_norm:
                traj.truncated = True
                traj.reason = f"fiber collapse at t={t + h:.6g}: |y| < {FIBER_COLLAPSE}|y0|"
                break
            record(cfg.t_end if k == steps - 1 else t + h, z_new)
        except (DegenerateLagrangian, DomainError, ValueError) as exc:
            traj.truncated = True
            traj.reason = f"t={t:.6g}: {type(exc).__name__}: {exc}"
            break
        z = z_new
    return traj


def integrate_semispray(L, u0, cfg: IntegratorConfig | None = None) -> Trajectory:
    """RK4 integral curve of S: ``x' = y, y' = -2G(x, y)``."""
    return _integrate(L, u0, cfg or IntegratorConfig(), "semispray")


def integrate_horizontal(L, u0, cfg: IntegratorConfig | None = None) -> Trajectory:
    """RK4 integral curve of hS: ``x' = y, y' = -N(x, y) y``."""
    return _integrate(L, u0, cfg or IntegratorConfig(), "horizontal")


@dataclass(frozen=True)
class DriftSummary:
    L_max: float
    L_final: float
    L_max_rel: float
    L_final_rel: float
    E_max: float
    E_final: float
    E_max_rel: float
    E_final_rel: float
    rate_residual: float  # max |finite-difference dL/dt - predicted| at interior samples

    def to_dict(self):
        return dict(self.__dict__)


def _rel(d, ref):
    return d / abs(ref) if ref != 0.0 else d


def drift_report(traj: Trajectory) -> DriftSummary:
    if len(traj) < 2:
        raise ValueError("need at least two samples")
    L = np.array(traj.L)
    E = np.array(traj.E)
    t = np.array(traj.t)
    dL = np.abs(L - L[0])
    dE = np.abs(E - E[0])
    if len(traj) >= 3:
        observed = (L[2:] - L[:-2]) / (t[2:] - t[:-2])
        rate_residual = float(np.max(np.abs(observed - np.array(traj.rate)[1:-1])))
    else:
        rate_residual = abs((L[1] - L[0]) / (t[1] - t[0]) - traj.rate[0])
    return DriftSummary(
        L_max=float(dL.max()), L_final=float(dL[-1]),
        L_max_rel=_rel(float(dL.max()), L[0]), L_final_rel=_rel(float(dL[-1]), L[0]),
        E_max=float(dE.max()), E_final=float(dE[-1]),
        E_max_rel=_rel(float(dE.max()), E[0]), E_final_rel=_rel(float(dE[-1]), E[0]),
        rate_residual=rate_residual,
    )


def max_gap(a: Trajectory, b: Trajectory) -> float:
    """Largest pointwise distance between two trajectories on shared samples."""
    m = min(len(a), len(b))
    if m == 0:
        return math.nan
    return float(np.max(np.abs(a.states[:m] - b.states[:m])))
