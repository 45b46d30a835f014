import os

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st

from ifslab.weights import WeightFunction

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BUILTIN = {
    "const:0.5": WeightFunction.constant(0.5),
    "const:0.3": WeightFunction.constant(0.3),
    "const:0.9": WeightFunction.constant(0.9),
    "x": WeightFunction.identity(),
    "1-x": WeightFunction.one_minus_x(),
    "poly:1,0,-1": WeightFunction.polynomial([1, 0, -1]),
    "poly:0.2,0.6": WeightFunction.polynomial([0.2, 0.6]),
}


@pytest.fixture(params=sorted(BUILTIN))
def any_weight(request):
    return BUILTIN[request.param]


@st.composite
def weights(draw, interior=False):
    """Quadratic weights in Bernstein form, a convex combination so 0 <= p <= 1.

    With ``interior`` the endpoint values keep p(0) < 1 and q(1) < 1.
    """
    hi = 0.95 if interior else 1.0
    lo = 0.05 if interior else 0.0
    a = draw(st.floats(0.0, hi))
    m = draw(st.floats(0.0, 1.0))
    b = draw(st.floats(lo, 1.0))
    return WeightFunction.polynomial([a, 2 * (m - a), a - 2 * m + b])


def arcsine_pdf(x):
    return 1.0 / (np.pi * np.sqrt(x * (1.0 - x)))


def arcsine_cdf(x):
    return 2.0 / np.pi * np.arcsin(np.sqrt(x))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, _ in mod.CRITERIA:
        if name in mod.RESULTS:
            terminalreporter.write_line(mod.RESULTS[name])
