"""Pure-Python program interpreter. Semantics match ``_vm_ext`` exactly."""

import math

# Opcodes mirror lagrangekit.program.
CONST, VAR, ADD, MUL, DIV, NEG, POW, SIN, COS, EXP, LOG, SQRT, SUB = range(13)


def prepare(ops, a, b, c, outputs):
    return (ops.tolist(), a.tolist(), b.tolist(), c.tolist(), outputs.tolist())


def _exec(state, z, s):
    ops, A, B, C, _ = state
    k = 0
    try:
        for k in range(len(ops)):
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
                    if (v == 0.0 and e < 0.0) or (v < 0.0 and e != math.floor(e)):
                        return k
                    s[k] = math.pow(v, e)
            elif op == NEG:
                s[k] = -s[A[k]]
            elif op == DIV:
                d = s[B[k]]
                if d == 0.0:
                    return k
                s[k] = s[A[k]] / d
            elif op == SIN or op == COS:
                v = s[A[k]]
                if not math.isfinite(v):
                    return k
                s[k] = math.sin(v) if op == SIN else math.cos(v)
            elif op == EXP:
                s[k] = math.exp(s[A[k]])
            elif op == LOG:
                v = s[A[k]]
                if v <= 0.0:
                    return k
                s[k] = math.log(v)
            else:
                v = s[A[k]]
                if v < 0.0:
                    return k
                s[k] = math.sqrt(v)
    except (OverflowError, ValueError):
        return k
    return -1


def _first_nonfinite(s):
    for k, v in enumerate(s):
        if not math.isfinite(v):
            return k
    return -1


def run(state, z, out):
    """Evaluate at ``z`` into ``out``; return -1 or the failing slot."""
    s = [0.0] * len(state[0])
    bad = _exec(state, z.tolist(), s)
    if bad >= 0:
        return bad
    for i, o in enumerate(state[4]):
        v = s[o]
        if not math.isfinite(v):
            return _first_nonfinite(s)
        out[i] = v
    return -1


def run_many(state, Z, out, status):
    for r in range(Z.shape[0]):
        status[r] = run(state, Z[r], out[r])
