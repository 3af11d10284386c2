import itertools
import math
from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def hankel_det_oracle(weights, points, N, shift=0):
    """Cauchy-Binet: det [sum_i w_i a_i^(r+s+shift)] = sum over (N+1)-subsets of
    prod w_i a_i^shift times the squared Vandermonde. Independent of any elimination."""
    total = Fraction(0)
    for subset in itertools.combinations(range(len(points)), N + 1):
        term = Fraction(1)
        for i in subset:
            term *= weights[i] * points[i] ** shift
        for i, j in itertools.combinations(subset, 2):
            term *= (points[i] - points[j]) ** 2
        total += term
    return total


def moments_of(weights, points, count):
    return [sum(w * a**n for w, a in zip(weights, points)) for n in range(count)]


def poisson(mu, n):
    return math.exp(-mu) * mu**n / math.factorial(n)


rationals = st.fractions(min_value=Fraction(1, 20), max_value=6, max_denominator=20)


@st.composite
def atomic_measures(draw, max_atoms=5, allow_zero=True):
    k = draw(st.integers(1, max_atoms))
    points = draw(st.lists(rationals, min_size=k, max_size=k, unique=True))
    if allow_zero and draw(st.booleans()):
        points[0] = Fraction(0)
        points = list(dict.fromkeys(points))
    raw = draw(st.lists(st.integers(1, 9), min_size=len(points), max_size=len(points)))
    weights = [Fraction(r, sum(raw)) for r in raw]
    return weights, points


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
