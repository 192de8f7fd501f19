"""Compare the compiled and pure-Python evaluators on the hot kernels.

    python benchmarks/bench_vm.py [--repeat 5] [--points 2000]

Times three workloads per corpus Lagrangian and backend:

* ``jet3 point``: one order-3 jet evaluation (the per-point cost of geometry_at)
* ``jet3 batch``: order-3 jets at many points through ``Program.many``
* ``flow``: a 200-step RK4 semispray integration (per-step geometry included)

The flow workload switches the process-wide backend, so it measures the
evaluator share of an end-to-end run rather than the kernel alone.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from lagrangekit import _backend
from lagrangekit.corpus import CORPUS
from lagrangekit.flows import IntegratorConfig, integrate_semispray
from lagrangekit.sampling import sample_points


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--names", default="polar-pert,quartic")
    args = ap.parse_args(argv)

    impls = [("python", _backend.python_impl)]
    if _backend.compiled_impl is None:
        print("compiled extension not built; only the Python evaluator is timed")
    else:
        impls.append(("cython", _backend.compiled_impl))

    print(f"{'lagrangian':<12} {'workload':<11} {'backend':<7} {'best':>10} {'median':>10} {'speedup':>8}")
    for name in args.names.split(","):
        e = CORPUS[name]
        L = e.field()
        prog = L.program(3)
        pts = sample_points(e.box, args.points, 1)
        Z = np.array([u.z for u in pts])
        z0 = Z[0]
        reference = {}
        for workload in ("jet3 point", "jet3 batch", "flow"):
            for label, impl in impls:
                if workload == "jet3 point":
                    fn = lambda: [prog(z0, backend=impl) for _ in range(1000)]  # noqa: E731
                elif workload == "jet3 batch":
                    fn = lambda: prog.many(Z, backend=impl)  # noqa: E731
                else:
                    def fn(impl=impl):
                        saved = _backend.impl
                        _backend.impl = impl
                        try:
                            integrate_semispray(L, e.u0, IntegratorConfig(step=5e-3, t_end=1.0))
                        finally:
                            _backend.impl = saved
                best, med = _best(fn, args.repeat)
                reference.setdefault(workload, best)
                speed = reference[workload] / best
                print(f"{name:<12} {workload:<11} {label:<7} {best * 1e3:>8.2f}ms {med * 1e3:>8.2f}ms {speed:>7.1f}x")
        # both evaluators must agree bit for bit
        if len(impls) == 2:
            a, _ = prog.many(Z, backend=impls[0][1])
            b, _ = prog.many(Z, backend=impls[1][1])
            assert np.array_equal(a, b), "backends disagree"


if __name__ == "__main__":
    main()
