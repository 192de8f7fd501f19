"""Quadratic Riemannian Lagrangians perturbed by a complete lift,
``L = a_ij(x) y^i y^j + (d phi/dx^i) y^i``.

Both terms share the metric, Cartan 2-form, semispray and connection, yet
``L_|i = (d2 phi/dx^i dx^j - gamma^k_ij d phi/dx^k) y^j`` need not vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from lagrangekit import dsl
from lagrangekit.errors import DegenerateLagrangian
from lagrangekit.geometry import OneForm, geometry_at
from lagrangekit.jets import LagrangianField, TangentPoint
from lagrangekit.program import Program
from lagrangekit.report import IdentityReport
from lagrangekit.sampling import Box


def _base_only(e: dsl.Expr, what: str):
    if dsl.depends_on_fiber(e):
        raise ValueError(f"{what} must depend on base variables only: {e}")


@dataclass(frozen=True)
class RiemannianMetricSpec:
    n: int
    entries: tuple
    box: Box = None

    def __post_init__(self):
        entries = tuple(tuple(dsl.simplify(dsl.as_expr(e)) for e in row) for row in self.entries)
        if len(entries) != self.n or any(len(row) != self.n for row in entries):
            raise ValueError("metric table must be n x n")
        for i in range(self.n):
            for j in range(self.n):
                _base_only(entries[i][j], "metric entries")
                if entries[i][j] != entries[j][i]:
                    raise ValueError(f"metric table is not symmetric at ({i + 1},{j + 1})")
        object.__setattr__(self, "entries", entries)
        if self.box is None:
            object.__setattr__(self, "box", Box.default(self.n))

    @classmethod
    def parse(cls, text: str, n: int, box: Box | None = None) -> "RiemannianMetricSpec":
        """Rows separated by ``;``, entries by ``,``: ``"1,0;0,x1^2"``."""
        rows = [r for r in text.split(";")]
        return cls(n, tuple(tuple(dsl.parse(e, n) for e in r.split(",")) for r in rows), box)

    @classmethod
    def identity(cls, n: int, box: Box | None = None) -> "RiemannianMetricSpec":
        return cls(n, tuple(tuple(dsl.ONE if i == j else dsl.ZERO for j in range(n)) for i in range(n)), box)

    @cached_property
    def _program(self) -> Program:
        n = self.n
        exprs = [self.entries[i][j] for i in range(n) for j in range(n)]
        exprs += [dsl.differentiate(self.entries[i][j], dsl.X(k + 1))
                  for i in range(n) for j in range(n) for k in range(n)]
        return Program(exprs, n)

    def at(self, x):
        """``(a, da)`` at base point x with ``da[i, j, k] = d a_ij / d x^k``."""
        n = self.n
        vals = self._program(np.concatenate([np.asarray(x, float), np.ones(n)]))
        return vals[: n * n].reshape(n, n), vals[n * n:].reshape(n, n, n)

    def positive_definite_at(self, x) -> bool:
        a, _ = self.at(x)
        return all(np.linalg.det(a[:k, :k]) > 0 for k in range(1, self.n + 1))


@dataclass(frozen=True)
class PotentialSpec:
    n: int
    phi: dsl.Expr

    def __post_init__(self):
        object.__setattr__(self, "phi", dsl.simplify(dsl.as_expr(self.phi)))
        _base_only(self.phi, "the potential")

    @classmethod
    def parse(cls, text: str, n: int) -> "PotentialSpec":
        return cls(n, dsl.parse(text, n))

    @cached_property
    def gradient(self) -> tuple:
        return tuple(dsl.differentiate(self.phi, dsl.X(i + 1)) for i in range(self.n))

    @cached_property
    def _program(self) -> Program:
        n = self.n
        hess = [dsl.differentiate(self.gradient[i], dsl.X(j + 1)) for i in range(n) for j in range(n)]
        return Program(list(self.gradient) + hess, n)

    def derivatives(self, x):
        """``(grad phi, hess phi)`` at base point x."""
        n = self.n
        vals = self._program(np.concatenate([np.asarray(x, float), np.ones(n)]))
        return vals[:n], vals[n:].reshape(n, n)


@dataclass(frozen=True)
class ObstructionTensor:
    """``T_ij = d2 phi/dx^i dx^j - gamma^k_ij d phi/dx^k`` at a base point."""

    T: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.T)))


def christoffel_symbols(a: RiemannianMetricSpec, x) -> np.ndarray:
    """``gamma[i, j, k] = 1/2 a^il (d_k a_lj + d_j a_lk - d_l a_jk)``."""
    g, dg = a.at(x)
    if abs(np.linalg.det(g)) <= 1e-12:
        raise DegenerateLagrangian(f"metric a_ij is degenerate at x = {tuple(x)}")
    ginv = np.linalg.inv(g)
    # lower[l, j, k] = d_k a_lj + d_j a_lk - d_l a_jk
    lower = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 0, 1)
    gamma = 0.5 * np.einsum("il,ljk->ijk", ginv, lower)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def build_riemannian_quadratic(a: RiemannianMetricSpec, name: str | None = None) -> LagrangianField:
    """``L' = a_ij(x) y^i y^j``."""
    n = a.n
    terms = []
    for i in range(n):
        terms.append(dsl.Mul((a.entries[i][i], dsl.Pow(dsl.Y(i + 1), 2.0))))
        for j in range(i + 1, n):
            terms.append(dsl.Mul((dsl.Const(2.0), a.entries[i][j], dsl.Y(i + 1), dsl.Y(j + 1))))
    return LagrangianField(dsl.Add(terms), n, name=name)


def complete_lift(phi: PotentialSpec) -> dsl.Expr:
    return dsl.simplify(dsl.Add([dsl.Mul((d, dsl.Y(i + 1))) for i, d in enumerate(phi.gradient)]))


def perturb_with_gradient(Lp: LagrangianField, phi: PotentialSpec, name: str | None = None) -> LagrangianField:
    """``L = L' + (d phi/dx^i) y^i``."""
    if phi.n != Lp.n:
        raise ValueError("dimension mismatch")
    return LagrangianField(dsl.Add((Lp.expr, complete_lift(phi))), Lp.n, name=name)


def compare_structures(Lp: LagrangianField, L: LagrangianField, points, tol: float = 1e-9) -> IdentityReport:
    """Per point: the worst of ``|Omega - Omega'|``, ``|G - G'|``, ``|N - N'|``."""
    report = IdentityReport("structure_sharing", tol)
    for k, u in enumerate(points):
        try:
            b1, b2 = geometry_at(Lp, u), geometry_at(L, u)
        except DegenerateLagrangian as exc:
            report.fail(f"point {k}", exc)
            continue
        diff = max(float(np.max(np.abs(b1.Omega - b2.Omega))),
                   float(np.max(np.abs(b1.G - b2.G))),
                   float(np.max(np.abs(b1.N - b2.N))))
        report.add(diff)
    return report


def obstruction_tensor(a: RiemannianMetricSpec, phi: PotentialSpec, x) -> ObstructionTensor:
    grad, hess = phi.derivatives(x)
    gamma = christoffel_symbols(a, x)
    return ObstructionTensor(hess - np.einsum("kij,k->ij", gamma, grad))


def dhl_closed_form(a: RiemannianMetricSpec, phi: PotentialSpec, u) -> OneForm:
    """``L_|i = T_ij y^j`` from the obstruction tensor."""
    u = u if isinstance(u, TangentPoint) else TangentPoint.from_z(u)
    T = obstruction_tensor(a, phi, u.x).T
    return OneForm(T @ np.asarray(u.y))


@dataclass
class ProbeReport:
    """Pointwise co-occurrence of ``S(L) = 0`` and ``d_hL = 0``.

    ``table[(s_zero, dh_zero)]`` counts points; no universal claim is made.
    """

    tolerance: float
    rows: list = field(default_factory=list)

    @property
    def table(self) -> dict:
        out = {(s, d): 0 for s in (True, False) for d in (True, False)}
        for row in self.rows:
            out[(row["SL_zero"], row["dhL_zero"])] += 1
        return out

    @property
    def agree(self) -> bool:
        """True when no point separates the two conditions."""
        t = self.table
        return t[(True, False)] == 0 and t[(False, True)] == 0

    def to_dict(self):
        return {
            "tolerance": self.tolerance,
            "table": {f"SL_zero={s},dhL_zero={d}": c for (s, d), c in self.table.items()},
            "agree": self.agree,
            "rows": self.rows,
        }


def equivalence_probe(a: RiemannianMetricSpec, phi: PotentialSpec, points, tol: float = 1e-8) -> ProbeReport:
    L = perturb_with_gradient(build_riemannian_quadratic(a), phi)
    report = ProbeReport(tol)
    for u in points:
        b = geometry_at(L, u)
        report.rows.append({
            "x": list(b.point.x), "y": list(b.point.y),
            "SL": b.SL, "dhL_max": float(np.max(np.abs(b.dhL))),
            "SL_zero": bool(abs(b.SL) <= tol),
            "dhL_zero": bool(np.max(np.abs(b.dhL)) <= tol),
        })
    return report


# ---------------------------------------------------------------- families

POLAR_BOX = Box((0.5, -2.0), (2.0, 2.0))


@dataclass(frozen=True)
class Family:
    """A named metric + potential pair.

    ``expects_witness`` says whether the obstruction should be nonzero.
    """

    name: str
    metric: RiemannianMetricSpec
    potential: PotentialSpec
    expects_witness: bool
    witness_point: TangentPoint
    description: str = ""

    @property
    def n(self):
        return self.metric.n

    @property
    def box(self) -> Box:
        return self.metric.box

    @cached_property
    def base_lagrangian(self) -> LagrangianField:
        return build_riemannian_quadratic(self.metric, name=f"{self.name}:base")

    @cached_property
    def lagrangian(self) -> LagrangianField:
        return perturb_with_gradient(self.base_lagrangian, self.potential, name=self.name)


def _polar():
    return RiemannianMetricSpec.parse("1,0;0,x1^2", 2, POLAR_BOX)


def make_family(name: str, metric: str | None = None, phi: str | None = None, n: int = 2,
                box: Box | None = None) -> Family:
    """Look up a built-in family, or build a custom one from metric/phi text."""
    if name == "custom":
        if metric is None or phi is None:
            raise ValueError("custom family needs --metric and --phi")
        a = RiemannianMetricSpec.parse(metric, n, box)
        return Family("custom", a, PotentialSpec.parse(phi, n), True,
                      TangentPoint((1.0,) * n, (1.0,) * n), "user-supplied metric and potential")
    if name not in FAMILY_NAMES:
        raise KeyError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}")
    if name == "flat-quadratic-phi":
        return Family(name, RiemannianMetricSpec.identity(2), PotentialSpec.parse("x1^2", 2), True,
                      TangentPoint((1.0, 2.0), (3.0, 4.0)), "flat metric, nonlinear potential")
    if name == "polar-linear-phi":
        return Family(name, _polar(), PotentialSpec.parse("x2", 2), True,
                      TangentPoint((1.0, 0.0), (1.0, 1.0)), "non-flat metric, linear potential")
    if name == "null-control":
        return Family(name, RiemannianMetricSpec.identity(2), PotentialSpec.parse("x1 + 2*x2", 2), False,
                      TangentPoint((1.0, 2.0), (3.0, 4.0)), "flat metric, linear potential")
    return Family(name, _polar(), PotentialSpec(2, dsl.ZERO), False,
                  TangentPoint((1.0, 0.0), (1.0, 1.0)), "non-flat metric, no potential")


FAMILY_NAMES = ("flat-quadratic-phi", "polar-linear-phi", "null-control", "homogeneous-control")
