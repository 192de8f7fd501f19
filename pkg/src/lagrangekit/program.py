"""Flatten expression DAGs into straight-line programs for the VM kernels.

A program is four parallel arrays ``(ops, a, b, c)``. Slot ``k`` holds the
value of instruction ``k``; operands ``a``/``b`` refer to earlier slots (or,
for ``VAR``, to a coordinate in ``z = (x1..xn, y1..yn)``). Identical
subtrees share one slot.
"""

from __future__ import annotations

import numpy as np

from lagrangekit import _backend
from lagrangekit.dsl import Add, Const, Div, Expr, Func, Mul, Pow, X, Y, to_text
from lagrangekit.errors import DomainError

CONST, VAR, ADD, MUL, DIV, NEG, POW, SIN, COS, EXP, LOG, SQRT, SUB = range(13)

_FUNC_OPS = {"neg": NEG, "sin": SIN, "cos": COS, "exp": EXP, "log": LOG, "sqrt": SQRT}

_DOMAIN_MESSAGES = {
    DIV: "division by zero",
    POW: "invalid power",
    LOG: "log of non-positive value",
    SQRT: "sqrt of negative value",
}


class Program:
    """Compiled evaluator for a fixed list of expressions in dimension ``n``."""

    def __init__(self, exprs, n):
        self.n = n
        self.exprs = tuple(exprs)
        ops, a, b, c, nodes = [], [], [], [], []
        slot_of = {}

        def emit(op, ia=0, ib=0, cv=0.0, node=None):
            ops.append(op)
            a.append(ia)
            b.append(ib)
            c.append(cv)
            nodes.append(node)
            return len(ops) - 1

        def comp(node):
            hit = slot_of.get(node)
            if hit is not None:
                return hit
            if isinstance(node, Const):
                k = emit(CONST, cv=node.value, node=node)
            elif isinstance(node, X):
                k = emit(VAR, node.index - 1, node=node)
            elif isinstance(node, Y):
                k = emit(VAR, n + node.index - 1, node=node)
            elif isinstance(node, (Add, Mul)):
                items = node.terms if isinstance(node, Add) else node.factors
                if not items:
                    k = emit(CONST, cv=0.0 if isinstance(node, Add) else 1.0, node=node)
                else:
                    k = None
                    for item in items:
                        if k is None:
                            k = comp(item)
                        elif isinstance(node, Add) and isinstance(item, Func) and item.name == "neg":
                            k = emit(SUB, k, comp(item.arg), node=node)
                        else:
                            k = emit(ADD if isinstance(node, Add) else MUL, k, comp(item), node=node)
            elif isinstance(node, Div):
                k = emit(DIV, comp(node.num), comp(node.den), node=node)
            elif isinstance(node, Pow):
                k = emit(POW, comp(node.base), 0, node.exponent, node=node)
            elif isinstance(node, Func):
                k = emit(_FUNC_OPS[node.name], comp(node.arg), node=node)
            else:
                raise TypeError(f"cannot compile {node!r}")
            slot_of[node] = k
            return k

        outputs = [comp(e) for e in self.exprs]
        self.ops = np.asarray(ops, dtype=np.int32)
        self.a = np.asarray(a, dtype=np.int32)
        self.b = np.asarray(b, dtype=np.int32)
        self.c = np.asarray(c, dtype=np.float64)
        self.outputs = np.asarray(outputs, dtype=np.int32)
        self._nodes = nodes
        self._states = {}

    def _prepared(self, impl):
        state = self._states.get(impl.__name__)
        if state is None:
            state = impl.prepare(self.ops, self.a, self.b, self.c, self.outputs)
            self._states[impl.__name__] = state
        return state

    def __len__(self):
        return len(self.ops)

    def _error(self, slot):
        op = int(self.ops[slot])
        node = self._nodes[slot]
        return DomainError(_DOMAIN_MESSAGES.get(op, "non-finite value"), to_text(node) if isinstance(node, Expr) else None)

    def __call__(self, z, backend=None) -> np.ndarray:
        """Evaluate all outputs at ``z = concat(x, y)``; raises DomainError."""
        impl = _backend.impl if backend is None else backend
        z = np.ascontiguousarray(z, dtype=np.float64)
        if z.shape != (2 * self.n,):
            raise ValueError(f"expected {2 * self.n} coordinates, got shape {z.shape}")
        out = np.empty(len(self.outputs), dtype=np.float64)
        bad = impl.run(self._prepared(impl), z, out)
        if bad >= 0:
            raise self._error(bad)
        return out

    def many(self, Z, backend=None):
        """Evaluate at each row of ``Z``. Returns ``(values, status)``;
        ``status[i]`` is -1 on success or the failing slot index."""
        impl = _backend.impl if backend is None else backend
        Z = np.ascontiguousarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != 2 * self.n:
            raise ValueError(f"expected rows of {2 * self.n} coordinates")
        out = np.empty((Z.shape[0], len(self.outputs)), dtype=np.float64)
        status = np.empty(Z.shape[0], dtype=np.int32)
        impl.run_many(self._prepared(impl), Z, out, status)
        return out, status

    def error_for(self, slot):
        return self._error(slot)
