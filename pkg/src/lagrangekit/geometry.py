"""Canonical geometry of a regular Lagrangian at a point of TM, and the
identity checks that tie the objects together.

Conventions
-----------
* Natural basis order ``(d/dx^1..d/dx^n, d/dy^1..d/dy^n)``.
* Two-forms are stored as ``Omega[a, b] = omega(e_a, e_b)``.
* Wedge: ``(alpha ^ beta)(u, v) = alpha(u) beta(v) - alpha(v) beta(u)``.
* Tangent structure ``J(X, Y) = (0, X)``; Liouville field ``C = y^i d/dy^i``.
* Brackets with a vector ``X`` use the constant-coefficient extension of
  ``X`` around the evaluation point, so ``[S, X] = -DS . X`` where ``DS`` is
  the Jacobian of the components of S.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from lagrangekit import dsl
from lagrangekit.errors import DegenerateLagrangian, DomainError, NotHomogeneous, ZeroLagrangianValue
from lagrangekit.jets import Jet3, LagrangianField, TangentPoint, coordinate
from lagrangekit.program import Program
from lagrangekit.report import IdentityReport, scaled_residual

REGULARITY_THRESHOLD = 1e-10
IDENTITY_TOL = 1e-8


@dataclass(frozen=True)
class Metric:
    g: np.ndarray
    g_inv: np.ndarray
    det: float


@dataclass(frozen=True)
class OneForm:
    """Components of a 1-form along ``dx^i`` only (horizontal-type forms)."""

    components: np.ndarray

    def __call__(self, X) -> float:
        """Pair with a vector given as base components or as a full 2n vector."""
        X = np.asarray(X, dtype=float)
        n = len(self.components)
        return float(self.components @ X[:n])


@dataclass(frozen=True)
class GeometryBundle:
    """Everything derived from L at one point."""

    point: TangentPoint
    jet: Jet3
    metric: Metric
    G: np.ndarray  # semispray coefficients G^i
    N: np.ndarray  # N[i, j] = N^i_j = dG^i/dy^j
    dG_dx: np.ndarray  # [i, j] = dG^i/dx^j
    theta: OneForm
    Omega: np.ndarray
    energy: float
    SL: float
    dhL: np.ndarray
    h: np.ndarray

    @property
    def n(self):
        return len(self.G)

    @property
    def S(self) -> np.ndarray:
        """Natural components ``(y, -2G)`` of the canonical semispray."""
        return np.concatenate([np.asarray(self.point.y), -2.0 * self.G])

    @property
    def DS(self) -> np.ndarray:
        n = self.n
        return np.block([[np.zeros((n, n)), np.eye(n)], [-2.0 * self.dG_dx, -2.0 * self.N]])

    @property
    def liouville_L(self) -> float:
        n = self.n
        C = np.concatenate([np.zeros(n), self.point.y])
        return float(self.jet.d1 @ C)


# ---------------------------------------------------------------- helpers

def _point(L, u) -> TangentPoint:
    if isinstance(u, TangentPoint):
        return u
    return TangentPoint.from_z(u)


def tangent_structure(n: int) -> np.ndarray:
    return np.block([[np.zeros((n, n)), np.zeros((n, n))], [np.eye(n), np.zeros((n, n))]])


def _metric_from_jet(jet: Jet3, n: int) -> Metric:
    g = 0.5 * jet.d2[n:, n:]
    g = 0.5 * (g + g.T)
    scale = float(np.max(np.abs(g)))
    det = float(np.linalg.det(g))
    if not abs(det) > REGULARITY_THRESHOLD * scale ** n:
        raise DegenerateLagrangian(
            f"metric tensor g = 1/2 d2L/dy dy is singular (det = {det:.3e})"
        )
    g_inv = np.linalg.inv(g)
    return Metric(g=g, g_inv=g_inv, det=det)


def _semispray_parts(jet: Jet3, y: np.ndarray, metric: Metric, need_connection: bool):
    """G, and optionally N = dG/dy and dG/dx, from jet data."""
    n = len(y)
    d1, d2 = jet.d1, jet.d2
    Lx = d1[:n]
    Lyx = d2[n:, :n]  # [k, h] = d2L/dy^k dx^h
    b = Lyx @ y - Lx
    G = 0.25 * metric.g_inv @ b
    if not need_connection:
        return G, None, None
    d3 = jet.d3
    ginv = metric.g_inv
    Lxx = d2[:n, :n]
    Lxy = d2[:n, n:]  # [k, j] = d2L/dx^k dy^j
    # derivatives of b_k
    db_dy = np.einsum("khj,h->kj", d3[n:, :n, n:], y) + Lyx - Lxy
    db_dx = np.einsum("khj,h->kj", d3[n:, :n, :n], y) - Lxx
    # derivatives of g^{ik} via d(g^-1) = -g^-1 dg g^-1
    dg_dy = 0.5 * d3[n:, n:, n:]
    dg_dx = 0.5 * d3[n:, n:, :n]
    dginv_dy = -np.einsum("ia,abj,bk->ikj", ginv, dg_dy, ginv)
    dginv_dx = -np.einsum("ia,abj,bk->ikj", ginv, dg_dx, ginv)
    N = 0.25 * (np.einsum("ikj,k->ij", dginv_dy, b) + ginv @ db_dy)
    dG_dx = 0.25 * (np.einsum("ikj,k->ij", dginv_dx, b) + ginv @ db_dx)
    return G, N, dG_dx


def cartan_two_form_from_jet(jet: Jet3, g: np.ndarray) -> np.ndarray:
    """Omega in natural coordinates:
    ``2 g_ij dy^j ^ dx^i + 1/2 (L_{y^i x^j} - L_{x^i y^j}) dx^j ^ dx^i``."""
    n = len(g)
    d2 = jet.d2
    c = d2[n:, :n] - d2[:n, n:]  # c[i, j] = L_{y^i x^j} - L_{x^i y^j}
    # 1/2 sum_ij c_ij (dx^j ^ dx^i)(e_k, e_l) = 1/2 (c_lk - c_kl)
    base = 0.5 * (c.T - c)
    return np.block([[base, -2.0 * g], [2.0 * g, np.zeros((n, n))]])


def geometry_at(L: LagrangianField, u) -> GeometryBundle:
    """Compute every canonical object of ``L`` at ``u``."""
    u = _point(L, u)
    n = L.n
    jet = L.jet(u, 3)
    y = np.asarray(u.y)
    metric = _metric_from_jet(jet, n)
    G, N, dG_dx = _semispray_parts(jet, y, metric, need_connection=True)
    Lx, Ly = jet.d1[:n], jet.d1[n:]
    h = np.block([[np.eye(n), np.zeros((n, n))], [-N, np.zeros((n, n))]])
    return GeometryBundle(
        point=u,
        jet=jet,
        metric=metric,
        G=G,
        N=N,
        dG_dx=dG_dx,
        theta=OneForm(Ly.copy()),
        Omega=cartan_two_form_from_jet(jet, metric.g),
        energy=float(y @ Ly - jet.value),
        SL=float(y @ Lx - 2.0 * G @ Ly),
        dhL=Lx - N.T @ Ly,
        h=h,
    )


# ---------------------------------------------------------------- operations

def metric_tensor(L, u) -> Metric:
    return _metric_from_jet(L.jet(_point(L, u), 2), L.n)


def cartan_one_form(L, u) -> OneForm:
    jet = L.jet(_point(L, u), 1)
    return OneForm(jet.d1[L.n:].copy())


def cartan_two_form_natural(L, u) -> np.ndarray:
    jet = L.jet(_point(L, u), 2)
    g = 0.5 * jet.d2[L.n:, L.n:]
    return cartan_two_form_from_jet(jet, g)


def semispray_coeffs(L, u) -> np.ndarray:
    u = _point(L, u)
    jet = L.jet(u, 2)
    G, _, _ = _semispray_parts(jet, np.asarray(u.y), _metric_from_jet(jet, L.n), False)
    return G


def connection_coeffs(L, u) -> np.ndarray:
    return geometry_at(L, u).N


def horizontal_projector_matrix(L, u) -> np.ndarray:
    return geometry_at(L, u).h


def energy(L, u) -> float:
    jet = L.jet(_point(L, u), 1)
    y = np.asarray(_point(L, u).y)
    return float(y @ jet.d1[L.n:] - jet.value)


def semispray_derivative(L, u) -> float:
    return geometry_at(L, u).SL


def horizontal_differential(L, u) -> OneForm:
    return OneForm(geometry_at(L, u).dhL)


def grifone_projector(bundle: GeometryBundle) -> np.ndarray:
    """``h = 1/2 (X - [S, JX] + J[S, X])`` as a matrix, with ``[S, X] = -DS X``."""
    n = bundle.n
    J = tangent_structure(n)
    DS = bundle.DS
    return 0.5 * (np.eye(2 * n) + DS @ J - J @ DS)


def semispray_horizontality_gap(bundle: GeometryBundle) -> np.ndarray:
    """``hS - S`` in natural components; equals ``(0, N y - 2G)``."""
    return bundle.h @ bundle.S - bundle.S


# ---------------------------------------------------------------- symbolic S(L)

def _symbolic_det(M):
    n = len(M)
    terms = []
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = dsl.Mul(tuple(M[i][perm[i]] for i in range(n)))
        terms.append(dsl.Func("neg", prod) if inversions % 2 else prod)
    return dsl.simplify(dsl.Add(terms))


def _symbolic_inverse(M):
    n = len(M)
    det = _symbolic_det(M)
    if n == 1:
        return [[dsl.simplify(dsl.Div(dsl.ONE, det))]]
    inv = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            cof = _symbolic_det(minor)
            if (i + j) % 2:
                cof = dsl.Func("neg", cof)
            inv[i][j] = dsl.simplify(dsl.Div(cof, det))
    return inv


def symbolic_semispray_of_L(L: LagrangianField) -> dsl.Expr:
    """S(L) as an expression, with g^{-1} written out through cofactors."""

    def build():
        n = L.n
        g = [[dsl.simplify(dsl.Mul((dsl.Const(0.5), L.derivative((n + i, n + j)))))
              for j in range(n)] for i in range(n)]
        ginv = _symbolic_inverse(g)
        ys = [dsl.Y(i + 1) for i in range(n)]
        b = [dsl.Add([dsl.Mul((L.derivative((n + k, h)), ys[h])) for h in range(n)]
                     + [dsl.Func("neg", L.derivative((k,)))]) for k in range(n)]
        G = [dsl.Mul((dsl.Const(0.25), dsl.Add([dsl.Mul((ginv[i][k], b[k])) for k in range(n)])))
             for i in range(n)]
        terms = [dsl.Mul((ys[i], L.derivative((i,)))) for i in range(n)]
        terms += [dsl.Mul((dsl.Const(-2.0), G[i], L.derivative((n + i,)))) for i in range(n)]
        return dsl.simplify(dsl.Add(terms))

    return L.memo("symbolic_SL", build)


def _half_dSL_dy_program(L: LagrangianField) -> Program:
    def build():
        SL = symbolic_semispray_of_L(L)
        n = L.n
        return Program([dsl.differentiate(SL, coordinate(n + i, n)) for i in range(n)] + [SL], n)

    return L.memo("dSL_dy_program", build)


def half_dSL_dy(L: LagrangianField, u) -> np.ndarray:
    """``1/2 d(S(L))/dy^i`` by symbolic differentiation of S(L)."""
    vals = _half_dSL_dy_program(L)(_point(L, u).z)
    return 0.5 * vals[:-1]


def symbolic_SL_value(L: LagrangianField, u) -> float:
    return float(_half_dSL_dy_program(L)(_point(L, u).z)[-1])


# ---------------------------------------------------------------- homogeneity

def _homogeneity_ratios(L, points):
    ratios, skipped = [], []
    for k, u in enumerate(points):
        u = _point(L, u)
        jet = L.jet(u, 1)
        if jet.value == 0.0:
            skipped.append(f"point {k}: {ZeroLagrangianValue.__name__}: L(u) = 0")
            continue
        ratios.append(float(np.asarray(u.y) @ jet.d1[L.n:]) / jet.value)
    return ratios, skipped


def homogeneity_degree(L, points, tol: float = 1e-8) -> float | None:
    """Degree k with C(L) = kL across ``points`` or None.

    Points with L(u) = 0 are skipped.
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    ratios, _ = _homogeneity_ratios(L, points)
    if not ratios:
        return None
    if max(ratios) - min(ratios) > tol:
        return None
    return float(np.mean(ratios))


# ---------------------------------------------------------------- checks

def _vectors(rng, count, dim):
    return rng.uniform(-1.0, 1.0, size=(count, dim))


def _rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(np.random.PCG64(0 if rng is None else rng))


def _sweep(name, tol, L, points, body):
    report = IdentityReport(name, tol)
    for k, u in enumerate(points):
        try:
            body(report, geometry_at(L, u))
        except (DomainError, DegenerateLagrangian) as exc:
            report.fail(f"point {k}", exc)
    return report


def _pointwise(report, pairs):
    """Record one residual per point: the worst of several (lhs, rhs) pairs."""
    worst = (0.0, 0.0)
    for lhs, rhs in pairs:
        r = scaled_residual(lhs, rhs)
        worst = (max(worst[0], r[0]), max(worst[1], r[1]))
    report.add(*worst)


def check_cartan_one_form(L, points, n_vectors=10, rng=None, tol=IDENTITY_TOL):
    """``i_S theta = C(L)`` and ``(L_S theta)(X) = dL(X)``."""
    rng = _rng(rng)
    n2 = 2 * L.n

    def body(report, b: GeometryBundle):
        n = b.n
        pairs = [(b.theta(b.S), b.liouville_L)]
        grad_theta = b.jet.d2[n:, :]  # rows: d(dL/dy^i)
        for X in _vectors(rng, n_vectors, n2):
            S_of_thetaX = b.S @ (grad_theta.T @ X[:n])
            bracket = -b.DS @ X
            lie = S_of_thetaX - b.theta(bracket)
            pairs.append((lie, b.jet.d1 @ X))
        _pointwise(report, pairs)

    return _sweep("cartan_one_form", tol, L, points, body)


def _grad_liouville_L(b: GeometryBundle) -> np.ndarray:
    n = b.n
    y = np.asarray(b.point.y)
    grad = y @ b.jet.d2[n:, :]
    grad[n:] += b.jet.d1[n:]
    return grad


def check_isomega(L, points, n_vectors=10, rng=None, tol=IDENTITY_TOL):
    """``i_S omega = d(L - C(L))``, componentwise and on sampled vectors."""
    rng = _rng(rng)
    n2 = 2 * L.n

    def body(report, b: GeometryBundle):
        lhs = b.S @ b.Omega
        rhs = b.jet.d1 - _grad_liouville_L(b)
        pairs = [(lhs, rhs)]
        for X in _vectors(rng, n_vectors, n2):
            pairs.append((b.S @ b.Omega @ X, rhs @ X))
        _pointwise(report, pairs)

    return _sweep("semispray_defining_equation", tol, L, points, body)


def check_horizontal_differential(L, points, tol=IDENTITY_TOL):
    """``L_|i = 1/2 d(S(L))/dy^i`` with the right side from symbolic S(L)."""

    def body(report, b: GeometryBundle):
        report.add_pair(b.dhL, half_dSL_dy(L, b.point))

    return _sweep("horizontal_differential_identity", tol, L, points, body)


def grifone_projector_check(L, points, tol=1e-9):
    if isinstance(points, TangentPoint):
        points = [points]

    def body(report, b: GeometryBundle):
        report.add_pair(grifone_projector(b), b.h)

    return _sweep("grifone_projector", tol, L, points, body)


def adapted_two_form(bundle: GeometryBundle) -> np.ndarray:
    """Omega rebuilt from ``2 g_ij delta y^j ^ dx^i``, ``delta y = dy + N dx``."""
    n = bundle.n
    g = bundle.metric.g
    D = np.hstack([bundle.N, np.eye(n)])  # rows: delta y^j
    E = np.hstack([np.eye(n), np.zeros((n, n))])  # rows: dx^i
    return 2.0 * (D.T @ g @ E - E.T @ g @ D)


def check_lagrangian_subbundle(L, points, n_pairs=10, rng=None, tol=1e-9):
    """``omega(hX, hY) = 0`` on sampled pairs, plus the adapted-coframe
    reconstruction of Omega against the natural-coordinate matrix."""
    rng = _rng(rng)
    n2 = 2 * L.n

    def body(report, b: GeometryBundle):
        pairs = [(adapted_two_form(b), b.Omega)]
        for X, Y in zip(_vectors(rng, n_pairs, n2), _vectors(rng, n_pairs, n2)):
            pairs.append(((b.h @ X) @ b.Omega @ (b.h @ Y), 0.0))
        _pointwise(report, pairs)

    return _sweep("horizontal_lagrangian_subbundle", tol, L, points, body)


def check_homogeneous(L, points, tol=IDENTITY_TOL, k=None):
    """For L homogeneous of degree k != 1: S(L) = 0, d_hL = 0 and
    ``i_S omega = (1 - k) dL``."""
    points = list(points)
    if k is None:
        k = homogeneity_degree(L, points)
    if k is None or abs(k - 1.0) <= 1e-8:
        report = IdentityReport("homogeneous_case", tol, skipped=True)
        report.reason = (NotHomogeneous.__name__ if k is None
                         else "degree 1 is excluded")
        return report

    def body(report, b: GeometryBundle):
        _pointwise(report, [
            (b.SL, 0.0),
            (b.dhL, np.zeros(b.n)),
            (b.S @ b.Omega, (1.0 - k) * b.jet.d1),
        ])

    report = _sweep("homogeneous_case", tol, L, points, body)
    report.reason = f"k = {k:.12g}"
    return report


def check_projector_laws(L, points, tol=1e-10):
    """h^2 = h, rank h = n, rank Omega = 2n, h kills verticals, g g^-1 = I."""

    def body(report, b: GeometryBundle):
        n = b.n
        rank_h = np.linalg.matrix_rank(b.h)
        rank_omega = np.linalg.matrix_rank(b.Omega)
        pairs = [
            (b.h @ b.h, b.h),
            (b.h[:, n:], np.zeros((2 * n, n))),
            (b.metric.g @ b.metric.g_inv, np.eye(n)),
            (b.Omega, -b.Omega.T),
            (float(rank_h), float(n)),
            (float(rank_omega), float(2 * n)),
        ]
        _pointwise(report, pairs)

    return _sweep("structural_laws", tol, L, points, body)


def check_connection_fd(L, points, h=1e-5, tol=1e-5):
    """N from jets against central differences of G in y."""

    def body(report, b: GeometryBundle):
        n = b.n
        z = b.point.z
        fd = np.empty((n, n))
        for j in range(n):
            zp, zm = z.copy(), z.copy()
            zp[n + j] += h
            zm[n + j] -= h
            fd[:, j] = (semispray_coeffs(L, zp) - semispray_coeffs(L, zm)) / (2 * h)
        err = float(np.max(np.abs(fd - b.N)))
        report.add(err, err / max(1.0, float(np.max(np.abs(b.N)))))

    return _sweep("connection_vs_fd_of_G", tol, L, points, body)
