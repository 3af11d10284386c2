import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pndclass import duality as D
from pndclass import hankel as H
from pndclass.moments import GAMMA, Q, MomentSequence, atomic_moments, gamma_closed_form, q_from_pnd
from pndclass.pnd import PND, Coherent, Fock, Thermal, generate_pnd

from .conftest import atomic_measures


def s(family, size=13):
    return D.s_matrix(size, family)


def test_s_family_identities_exact():
    eye = D.identity(13)
    assert s(D.S) @ s(D.S_INVERSE) == eye
    assert s(D.S_HALF) @ s(D.S_HALF) == s(D.S).entries
    assert s(D.S_HALF) @ s(D.S_HALF_INVERSE) == eye
    assert s(D.S_HALF_INVERSE) @ s(D.S_HALF_INVERSE) == s(D.S_INVERSE).entries


def test_s_entries():
    m = D.s_matrix(4, D.S_HALF).entries
    assert m[0] == (1, Fraction(1, 2), Fraction(1, 8), Fraction(1, 48))
    assert m[3][0] == 0


@pytest.mark.parametrize("family", D.FAMILIES)
def test_sections_are_stable_under_extension(family):
    small, big = D.s_matrix(6, family).entries, D.s_matrix(11, family).entries
    assert tuple(row[:6] for row in big[:6]) == small


def test_unknown_family():
    with pytest.raises(ValueError):
        D.s_matrix(3, "T")


def test_float_identities():
    prod = D.s_matrix(10, D.S_HALF, "double") @ D.s_matrix(10, D.S_HALF_INVERSE, "double")
    for i, row in enumerate(prod):
        for j, v in enumerate(row):
            assert v == pytest.approx(float(i == j), abs=1e-15)


def test_fock_two_q_to_gamma():
    q = q_from_pnd(generate_pnd(Fock(2), 4, mode="exact"))
    assert q.values == (0, 0, 2, 0, 0)
    g = D.q_to_gamma(q, 4)
    assert g.values == (1, 2, 2, 0, 0) and g.tail_exact


def test_fock_two_gamma_to_q():
    g = gamma_closed_form(Fock(2), 4, "exact")
    assert D.gamma_to_q(g, 4).values == (0, 0, 2, 0, 0)


def test_coherent_q_to_gamma():
    mu = 1.7
    q = q_from_pnd(generate_pnd(Coherent(mu), 80, mode="extended"))
    g = D.q_to_gamma(q, 5)
    for m, v in enumerate(g.values):
        assert float(v) == pytest.approx(mu**m, rel=1e-25)


def test_thermal_q_to_gamma():
    q = q_from_pnd(generate_pnd(Thermal(1.0), 400, mode="extended"))
    g = D.q_to_gamma(q, 4)
    for m, v in enumerate(g.values):
        assert float(v) == pytest.approx(math.factorial(m), rel=1e-25)


def test_thermal_gamma_to_q_uses_euler_and_is_exact():
    # gamma_m = m! makes gamma_{n+k}/k! a polynomial in k
    g = gamma_closed_form(Thermal(Fraction(1)), 14, "exact")
    q, info = D.gamma_to_q(g, 5, details=True)
    assert q.values == tuple(Fraction(math.factorial(n), 2 ** (n + 1)) for n in range(6))
    assert all(i.method == "euler" and i.remainder == 0 for i in info)


def test_coherent_gamma_to_q_direct():
    g = gamma_closed_form(Coherent(Fraction(1, 2)), 60, "extended")
    q, info = D.gamma_to_q(g, 4, details=True)
    for n, v in enumerate(q.values):
        assert float(v) == pytest.approx(math.exp(-0.5) * 0.5**n, rel=1e-30)
    assert info[0].method == "direct"


def test_round_trip_finite_support():
    p = PND((Fraction(1, 5), Fraction(1, 2), 0, Fraction(3, 10)), complete=True)
    q = q_from_pnd(p)
    padded = MomentSequence(Q, q.values + (0,) * 4, q.provenance, True)
    g = D.q_to_gamma(padded, 7)
    assert D.gamma_to_q(g, 7).values == padded.values


def test_non_converged_series_raise():
    short = q_from_pnd(generate_pnd(Thermal(3.0), 12))
    with pytest.raises(ValueError):
        D.q_to_gamma(short, 2)
    with pytest.raises(ValueError):
        D.gamma_to_q(MomentSequence(GAMMA, [2.0**k for k in range(3)]), 0)


def test_length_and_kind_checks():
    q = q_from_pnd(generate_pnd(Fock(1), 3, mode="exact"))
    with pytest.raises(ValueError):
        D.q_to_gamma(q, 4)
    with pytest.raises(ValueError):
        D.gamma_to_q(q, 1)
    pair = H.build_pair(q, 1)
    with pytest.raises(ValueError):
        D.congruence_check(pair, pair)


def test_congruence_fock_two_is_exact():
    q = q_from_pnd(generate_pnd(Fock(2), 2, mode="exact"))
    g = gamma_closed_form(Fock(2), 9, "exact")
    res = D.congruence_from_moments(q, g, 3, padding=4)
    assert res.exact_zero and res.within_bound


def test_congruence_coherent_extended_within_bound():
    mu = Fraction(1)
    q = q_from_pnd(generate_pnd(Coherent(mu), 70, mode="extended"))
    g = gamma_closed_form(Coherent(mu), 9, "extended")
    res = D.congruence_from_moments(q, g, 4, padding=15)
    assert res.within_bound and not res.exact_zero
    assert res.residual < 1e-15


def test_truncation_error_shrinks_with_padding():
    q = q_from_pnd(generate_pnd(Coherent(1.0), 80, mode="extended"))
    g = gamma_closed_form(Coherent(1.0), 7, "extended")
    residuals = [D.congruence_from_moments(q, g, 3, padding=P).residual for P in (2, 5, 10)]
    assert residuals[0] > residuals[1] > residuals[2]
    assert all(D.congruence_from_moments(q, g, 3, padding=P).within_bound for P in (2, 5, 10))


def test_padding_needs_data_for_infinite_support():
    q = q_from_pnd(generate_pnd(Coherent(1.0), 10))
    with pytest.raises(ValueError):
        D.congruence_from_moments(q, gamma_closed_form(Coherent(1.0), 5), 2, padding=10)


@given(st.lists(st.fractions(0, 1, max_denominator=9), min_size=1, max_size=6), st.integers(0, 3))
def test_finite_support_congruence_is_exact(raw, N):
    total = sum(raw)
    if total == 0:
        raw, total = [Fraction(1)], Fraction(1)
    p = PND(tuple(x / total for x in raw), complete=True)
    q = q_from_pnd(p)
    padded = MomentSequence(Q, q.values + (0,) * (2 * N + 2), q.provenance, True)
    g = D.q_to_gamma(padded, 2 * N + 1)
    assert D.congruence_from_moments(q, g, N, padding=len(raw)).exact_zero


@given(st.lists(st.fractions(0, 1, max_denominator=9), min_size=2, max_size=6), st.integers(1, 3))
def test_gamma_failure_transfers_to_q(raw, N):
    # M is a congruence image of a full L section, so an M failure implies an L failure
    total = sum(raw)
    if total == 0:
        return
    p = PND(tuple(x / total for x in raw), complete=True)
    q = q_from_pnd(p)
    P = N + len(raw)
    padded = MomentSequence(Q, q.values + (0,) * (2 * P + 2), q.provenance, True)
    g = D.q_to_gamma(padded, 2 * N + 1)
    gamma_ok = all(v.is_psd for v in H.psd_check(H.build_pair(g, N)))
    q_ok = all(v.is_psd for v in H.psd_check(H.build_pair(padded, P)))
    if q_ok:
        assert gamma_ok


@given(atomic_measures(max_atoms=4))
def test_classical_measures_pass_on_both_sides(measure):
    atoms = list(zip(*measure))
    for kind in (Q, GAMMA):
        levels = H.determinant_hierarchy(atomic_moments(atoms, kind, 10, "exact"), 4)
        assert H.first_failure(levels) is None


@given(atomic_measures(max_atoms=4))
def test_shifted_classical_sequences_still_pass(measure):
    # dropping q_0 gives the moments of I dP, which is again a measure
    q = atomic_moments(list(zip(*measure)), Q, 12, "exact")
    shifted = MomentSequence(Q, q.values[1:])
    if shifted.values[0] == 0:
        return
    assert H.first_failure(H.determinant_hierarchy(shifted, 4)) is None
