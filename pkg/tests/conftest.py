import numpy as np
import pytest
from hypothesis import strategies as st

from lagrangekit import _backend, dsl
from lagrangekit.corpus import CORPUS
from lagrangekit.jets import LagrangianField, TangentPoint
from lagrangekit.sampling import sample_points

BACKENDS = [pytest.param(_backend.python_impl, id="python")]
if _backend.compiled_impl is not None:
    BACKENDS.append(pytest.param(_backend.compiled_impl, id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def fields():
    return {name: entry.field() for name, entry in CORPUS.items()}


@pytest.fixture(scope="session")
def L_flat():
    return LagrangianField.parse("y1^2 + y2^2", 2)


@pytest.fixture(scope="session")
def L_pert():
    return LagrangianField.parse("y1^2 + y2^2 + 2*x1*y1", 2)


@pytest.fixture(scope="session")
def L_polar():
    return LagrangianField.parse("y1^2 + x1^2*y2^2", 2)


@pytest.fixture(scope="session")
def L_polar_pert():
    return LagrangianField.parse("y1^2 + x1^2*y2^2 + y2", 2)


def corpus_points(name, count=20, seed=11):
    return sample_points(CORPUS[name].box, count, seed)


def tp(x, y):
    return TangentPoint(x, y)


# Random expression trees over x1, x2, y1, y2 that stay well conditioned on
# coordinates in [0.1, 10]: no division by expressions that may vanish.
_leaves = st.one_of(
    st.sampled_from([dsl.X(1), dsl.X(2), dsl.Y(1), dsl.Y(2)]),
    st.floats(-3, 3, allow_nan=False).map(lambda v: dsl.Const(round(v, 3))),
)


def _extend(children):
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda t: dsl.Add(t)),
        st.lists(children, min_size=2, max_size=3).map(lambda t: dsl.Mul(t)),
        st.tuples(children, st.sampled_from([2.0, 3.0])).map(lambda p: dsl.Pow(*p)),
        children.map(lambda c: dsl.Func("neg", c)),
        children.map(lambda c: dsl.Func("sin", c)),
        children.map(lambda c: dsl.Func("cos", c)),
        children.map(lambda c: dsl.Func("log", dsl.Add((dsl.ONE, dsl.Pow(c, 2.0))))),
        children.map(lambda c: dsl.Func("sqrt", dsl.Add((dsl.ONE, dsl.Pow(c, 2.0))))),
        children.map(lambda c: dsl.Div(c, dsl.Add((dsl.Const(2.0), dsl.Func("sin", c))))),
    )


expressions = st.recursive(_leaves, _extend, max_leaves=8)
coords = st.lists(st.floats(0.1, 2.0), min_size=4, max_size=4).map(np.array)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
