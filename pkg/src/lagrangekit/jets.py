"""Lagrangian fields, third-order jets and the finite-difference oracle.

Coordinates on TM are ordered ``z = (x1..xn, y1..yn)``; a coordinate index
``a`` in ``0..2n-1`` refers to ``x^{a+1}`` for ``a < n`` and ``y^{a-n+1}``
otherwise.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from lagrangekit import dsl
from lagrangekit.errors import DomainError, IndexOutOfRange
from lagrangekit.program import Program
from lagrangekit.report import IdentityReport

MAX_ORDER = 3
FD_STEPS = {1: 1e-5, 2: 1e-4, 3: 1e-3}


@dataclass(frozen=True)
class TangentPoint:
    """A point ``(x, y)`` of TM off the zero section."""

    x: tuple
    y: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in np.ravel(self.x))
        y = tuple(float(v) for v in np.ravel(self.y))
        if len(x) != len(y) or not x:
            raise ValueError("x and y must be nonempty and of equal length")
        if not all(map(math.isfinite, x + y)):
            raise ValueError("coordinates must be finite")
        if not any(y):
            raise ValueError("y = 0 lies on the zero section, which is excluded")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def z(self) -> np.ndarray:
        return np.array(self.x + self.y)

    @classmethod
    def from_z(cls, z):
        z = np.asarray(z, dtype=float)
        n = len(z) // 2
        return cls(z[:n], z[n:])


def coordinate(a: int, n: int) -> dsl.Var:
    return dsl.X(a + 1) if a < n else dsl.Y(a - n + 1)


@lru_cache(maxsize=None)
def multi_indices(n: int, order: int) -> tuple:
    """Canonical (sorted) multi-indices of exactly ``order`` over 2n coordinates."""
    return tuple(itertools.combinations_with_replacement(range(2 * n), order))


@lru_cache(maxsize=None)
def _jet_layout(n: int, order: int):
    """Output ordering for a jet program and gather tables for full tensors."""
    canon = [()]
    for k in range(1, order + 1):
        canon.extend(multi_indices(n, k))
    pos = {mi: i for i, mi in enumerate(canon)}
    m = 2 * n
    idx1 = np.array([pos[(a,)] for a in range(m)]) if order >= 1 else None
    idx2 = None
    idx3 = None
    if order >= 2:
        idx2 = np.empty((m, m), dtype=np.intp)
        for a, b in itertools.product(range(m), repeat=2):
            idx2[a, b] = pos[tuple(sorted((a, b)))]
    if order >= 3:
        idx3 = np.empty((m, m, m), dtype=np.intp)
        for a, b, c in itertools.product(range(m), repeat=3):
            idx3[a, b, c] = pos[tuple(sorted((a, b, c)))]
    return tuple(canon), idx1, idx2, idx3


class LagrangianField:
    """A scalar field L(x, y) backed by an expression tree.

    Partial derivatives are derived symbolically on first request and
    memoized per multi-index; the cache is guarded by a lock so a field can
    be shared between threads.
    """

    def __init__(self, expr: dsl.Expr, n: int, name: str | None = None, family=None):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        top = dsl.max_index(expr)
        if top > n:
            raise IndexOutOfRange(f"expression uses index {top} > dimension {n}")
        self.expr = dsl.simplify(expr)
        self.n = n
        self.name = name or dsl.to_text(self.expr)
        self.family = family
        self._lock = threading.RLock()
        self._derivs = {(): self.expr}
        self._programs = {}
        self._memo = {}

    @classmethod
    def parse(cls, text: str, n: int, name: str | None = None) -> "LagrangianField":
        return cls(dsl.parse(text, n), n, name=name)

    def __repr__(self):
        return f"LagrangianField({self.name!r}, n={self.n})"

    def __str__(self):
        return dsl.to_text(self.expr)

    def scaled(self, c: float) -> "LagrangianField":
        return LagrangianField(dsl.Mul((dsl.Const(c), self.expr)), self.n)

    def derivative(self, multi_index) -> dsl.Expr:
        """Symbolic partial for a multi-index of coordinate indices."""
        key = tuple(sorted(multi_index))
        if any(not 0 <= a < 2 * self.n for a in key):
            raise IndexOutOfRange(f"multi-index {multi_index} out of range")
        with self._lock:
            hit = self._derivs.get(key)
            if hit is None:
                parent = self.derivative(key[:-1])
                hit = dsl.differentiate(parent, coordinate(key[-1], self.n))
                self._derivs[key] = hit
            return hit

    def program(self, order: int) -> Program:
        """Compiled program producing every partial up to ``order``."""
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in [0, {MAX_ORDER}]")
        with self._lock:
            prog = self._programs.get(order)
            if prog is None:
                canon = _jet_layout(self.n, order)[0]
                prog = Program([self.derivative(mi) for mi in canon], self.n)
                self._programs[order] = prog
            return prog

    def memo(self, key, build):
        """Per-field cache for derived objects (symbolic S(L), etc.)."""
        with self._lock:
            if key not in self._memo:
                self._memo[key] = build()
            return self._memo[key]

    def value(self, u) -> float:
        return float(self.program(0)(_z(u, self.n))[0])

    def jet(self, u, order: int = MAX_ORDER) -> "Jet3":
        vals = self.program(order)(_z(u, self.n))
        _, idx1, idx2, idx3 = _jet_layout(self.n, order)
        return Jet3(
            value=float(vals[0]),
            d1=vals[idx1] if idx1 is not None else None,
            d2=vals[idx2] if idx2 is not None else None,
            d3=vals[idx3] if idx3 is not None else None,
        )


def _z(u, n):
    if isinstance(u, TangentPoint):
        if u.n != n:
            raise ValueError(f"point has dimension {u.n}, field has {n}")
        return u.z
    z = np.asarray(u, dtype=float)
    if z.shape != (2 * n,):
        raise ValueError(f"expected {2 * n} coordinates")
    return z


@dataclass(frozen=True)
class Jet3:
    """All partials of L up to order 3, stored as full symmetric tensors
    over coordinates ``(x1..xn, y1..yn)``."""

    value: float
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray | None

    @property
    def n(self) -> int:
        return len(self.d1) // 2


def jet3(L: LagrangianField, u) -> Jet3:
    return L.jet(u, 3)


def fd_partial(L: LagrangianField, u, multi_index, h: float | None = None) -> float:
    """Central-difference estimate of a partial of order <= 3.

    Nested central differences with step ``h`` (defaults per order: 1e-5,
    1e-4, 1e-3); truncation error is O(h^2). Evaluation goes through the
    tree-walking reference evaluator, not the compiled jet path.
    """
    order = len(multi_index)
    if not 1 <= order <= MAX_ORDER:
        raise ValueError("finite-difference order must be 1, 2 or 3")
    h = FD_STEPS[order] if h is None else float(h)
    if h <= 0:
        raise ValueError("step must be positive")
    z0 = _z(u, L.n)
    n = L.n
    reach = np.zeros(2 * n)
    for a in multi_index:
        reach[a] += h
    # stencil box must not contain the zero section
    if np.all(np.abs(z0[n:]) <= reach[n:]):
        raise DomainError("finite-difference stencil crosses the zero section")
    total = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=order):
        z = z0.copy()
        for a, s in zip(multi_index, signs):
            z[a] += s * h
        total += math.prod(signs) * dsl.evaluate(L.expr, (z[:n], z[n:]))
    return total / (2.0 * h) ** order


def validate_jets(L: LagrangianField, points, tol: float = 1e-5) -> IdentityReport:
    """Compare every symbolic partial (orders 1-3) with :func:`fd_partial`.

    The per-point residual is ``max |jet - fd| / max(1, |jet|)``.
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    report = IdentityReport("jets_vs_finite_differences", tol)
    canon, *_ = _jet_layout(L.n, MAX_ORDER)
    for k, u in enumerate(points):
        try:
            vals = L.program(MAX_ORDER)(_z(u, L.n))
            worst_abs = worst_rel = 0.0
            for mi, exact in zip(canon[1:], vals[1:]):
                err = abs(exact - fd_partial(L, u, mi))
                worst_abs = max(worst_abs, err)
                worst_rel = max(worst_rel, err / max(1.0, abs(exact)))
            report.add(worst_abs, worst_rel)
        except DomainError as exc:
            report.fail(f"point {k}", exc)
    return report
