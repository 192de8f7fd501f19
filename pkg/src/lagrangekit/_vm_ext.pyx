# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled program interpreter. Semantics match ``_vm_py`` exactly."""

import numpy as np
from libc.math cimport sin, cos, exp, log, sqrt, pow, floor, isfinite

cdef enum:
    CONST, VAR, ADD, MUL, DIV, NEG, POW, SIN, COS, EXP, LOG, SQRT, SUB


def prepare(ops, a, b, c, outputs):
    return (np.ascontiguousarray(ops, dtype=np.int32),
            np.ascontiguousarray(a, dtype=np.int32),
            np.ascontiguousarray(b, dtype=np.int32),
            np.ascontiguousarray(c, dtype=np.float64),
            np.ascontiguousarray(outputs, dtype=np.int32))


cdef int _exec(const int[::1] ops, const int[::1] A, const int[::1] B,
               const double[::1] C, const double[::1] z, double[::1] s) noexcept nogil:
    cdef Py_ssize_t k, m = ops.shape[0]
    cdef double v, e
    cdef int op
    for k in range(m):
        op = ops[k]
        if op == MUL:
            s[k] = s[A[k]] * s[B[k]]
        elif op == ADD:
            s[k] = s[A[k]] + s[B[k]]
        elif op == SUB:
            s[k] = s[A[k]] - s[B[k]]
        elif op == VAR:
            s[k] = z[A[k]]
        elif op == CONST:
            s[k] = C[k]
        elif op == POW:
            v = s[A[k]]
            e = C[k]
            if e == 2.0:
                s[k] = v * v
            else:
                if (v == 0.0 and e < 0.0) or (v < 0.0 and e != floor(e)):
                    return <int>k
                s[k] = pow(v, e)
        elif op == NEG:
            s[k] = -s[A[k]]
        elif op == DIV:
            v = s[B[k]]
            if v == 0.0:
                return <int>k
            s[k] = s[A[k]] / v
        elif op == SIN:
            v = s[A[k]]
            if not isfinite(v):
                return <int>k
            s[k] = sin(v)
        elif op == COS:
            v = s[A[k]]
            if not isfinite(v):
                return <int>k
            s[k] = cos(v)
        elif op == EXP:
            s[k] = exp(s[A[k]])
        elif op == LOG:
            v = s[A[k]]
            if v <= 0.0:
                return <int>k
            s[k] = log(v)
        else:
            v = s[A[k]]
            if v < 0.0:
                return <int>k
            s[k] = sqrt(v)
    return -1


cdef int _run_one(tuple state, const double[::1] z, double[::1] out, double[::1] s):
    cdef const int[::1] ops = state[0]
    cdef const int[::1] outs = state[4]
    cdef Py_ssize_t i, k
    cdef int bad
    bad = _exec(ops, state[1], state[2], state[3], z, s)
    if bad >= 0:
        return bad
    for i in range(outs.shape[0]):
        if not isfinite(s[outs[i]]):
            for k in range(ops.shape[0]):
                if not isfinite(s[k]):
                    return <int>k
        out[i] = s[outs[i]]
    return -1


def run(tuple state, const double[::1] z, double[::1] out):
    """Evaluate at ``z`` into ``out``; return -1 or the failing slot."""
    cdef double[::1] s = np.empty(state[0].shape[0], dtype=np.float64)
    return _run_one(state, z, out, s)


def run_many(tuple state, const double[:, ::1] Z, double[:, ::1] out, int[::1] status):
    cdef double[::1] s = np.empty(state[0].shape[0], dtype=np.float64)
    cdef Py_ssize_t r
    for r in range(Z.shape[0]):
        status[r] = _run_one(state, Z[r], out[r], s)
