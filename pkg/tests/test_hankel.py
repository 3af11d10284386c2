import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pndclass import hankel as H
from pndclass.moments import GAMMA, Q, MomentSequence, atomic_moments, q_from_pnd
from pndclass.pnd import Coherent, Fock, Thermal, generate_pnd

from .conftest import atomic_measures, hankel_det_oracle, moments_of

SCHILLER = [Fraction(s) for s in ("0.44", "0.07", "0.26", "0.30", "1.44", "3.60", "28.80")]


def seq(values, kind=Q):
    return MomentSequence(kind, values)


def test_constant_sequence_pair():
    with pytest.raises(ValueError):
        H.build_pair(seq([1, 1, 1]), 1)
    pair = H.build_pair(seq([1, 1, 1, 1]), 1)
    assert pair.unshifted == ((1, 1), (1, 1)) and pair.shifted == ((1, 1), (1, 1))


def test_schiller_unshifted_block():
    pair = H.build_pair(seq(SCHILLER), 2)
    assert [[float(x) for x in row] for row in pair.unshifted] == [
        [0.44, 0.07, 0.26],
        [0.07, 0.26, 0.30],
        [0.26, 0.30, 1.44],
    ]


def test_schiller_shifted_depth_one_fails_exactly():
    pair = H.build_pair(seq(SCHILLER), 1)
    _, shifted = H.psd_check(pair)
    assert shifted.status == H.NO
    assert shifted.leading_minors[1] == Fraction(7, 100) * Fraction(3, 10) - Fraction(26, 100) ** 2
    assert shifted.failing_minor == 1
    assert H.quadratic_form(pair.shifted, shifted.witness) < 0


def test_coherent_is_rank_one():
    q = q_from_pnd(generate_pnd(Coherent(Fraction(1)), 12, mode="exact"))
    levels = H.determinant_hierarchy(q, 5)
    assert levels[0].det == q[0]
    assert all(lv.det == 0 for lv in levels[1:])
    assert all(lv.verdict.status == H.YES and lv.verdict.rank == 1 for lv in levels)


def test_two_atom_determinants():
    w, a = [Fraction(1, 2)] * 2, [Fraction(1), Fraction(3)]
    levels = H.determinant_hierarchy(seq(moments_of(w, a, 8)), 3)
    assert levels[0].det > 0 and levels[1].det > 0 and levels[2].det == 0
    assert levels[1].det == hankel_det_oracle(w, a, 1) == 1


def test_single_atom_is_projection():
    q = atomic_moments([(1, Fraction(2))], Q, 12, "exact")
    for lv in H.determinant_hierarchy(q):
        assert lv.verdict.rank == 1 and lv.verdict.status == H.YES


def test_fock_witness_is_exact():
    q = q_from_pnd(generate_pnd(Fock(1), 8, mode="exact"))
    levels = H.determinant_hierarchy(q, 3)
    assert H.first_failure(levels) == (1, "unshifted")
    v = levels[1].verdict
    assert H.quadratic_form(levels_matrix(q, 1), v.witness) < 0


def levels_matrix(q, N, shift=0):
    return H.hankel_matrix(q.values, N, shift)


def test_zero_diagonal_with_offdiagonal_is_not_psd():
    v = H.matrix_psd(((Fraction(0), Fraction(1)), (Fraction(1), Fraction(5))))
    assert v.status == H.NO
    assert H.quadratic_form(((0, 1), (1, 5)), v.witness) < 0


def test_singular_but_psd_matrix_is_accepted():
    # rank-deficient leading block followed by a valid extension
    m = ((Fraction(0), 0, 0), (0, Fraction(1), 2), (0, 2, Fraction(4)))
    v = H.matrix_psd(m)
    assert v.status == H.YES and v.rank == 1


def test_leading_minors_miss_what_pivoting_catches():
    # all leading minors are >= 0 yet the matrix is indefinite
    m = ((Fraction(0), 0), (0, Fraction(-1)))
    assert all(d >= 0 for d in H.leading_minors(m))
    assert H.matrix_psd(m).status == H.NO


def test_non_symmetric_rejected():
    with pytest.raises(ValueError):
        H.matrix_psd(((1, 2), (3, 4)))


def test_float_tolerance_rule():
    assert H.matrix_psd(((1.0, 0.0), (0.0, -1e-12)), tolerance=1e-9).status == H.BORDERLINE
    assert H.matrix_psd(((1.0, 0.0), (0.0, -1e-6)), tolerance=1e-9).status == H.NO
    assert H.matrix_psd(((1.0, 0.0), (0.0, 1e-3)), tolerance=1e-9).status == H.YES


def test_float_witness_has_negative_rayleigh_quotient():
    m = ((1.0, 2.0), (2.0, 1.0))
    v = H.matrix_psd(m)
    assert v.status == H.NO
    w = np.array(v.witness)
    assert w @ np.array(m) @ w < 0


def test_rescale_examples():
    q = q_from_pnd(generate_pnd(Coherent(Fraction(5)), 8, mode="exact"))
    scaled, c = H.rescale_for_conditioning(q)
    assert c == 5 and len(set(scaled.values)) == 1
    assert H.rescale_for_conditioning(seq([Fraction(2)] * 5))[1] == 1
    thermal = q_from_pnd(generate_pnd(Thermal(Fraction(1)), 6, mode="exact"))
    scaled, c = H.rescale_for_conditioning(thermal)
    assert c == Fraction(1, 2)
    assert scaled.values[:5] == (Fraction(1, 2), Fraction(1, 2), 1, 3, 12)


def test_rescale_needs_positive_leading_moments():
    with pytest.raises(ValueError):
        H.rescale_for_conditioning(seq([Fraction(0), 1, 2]))


def test_insufficient_data():
    with pytest.raises(ValueError):
        H.determinant_hierarchy(seq([1, 2, 3]), 2)


def test_overflowing_entries_escalate():
    q = q_from_pnd(generate_pnd(Coherent(150.0), 240))
    levels = H.determinant_hierarchy(q, 4, tolerance=1e-9)
    assert H.first_failure(levels) is None


@given(atomic_measures())
def test_atomic_measures_are_psd_with_rank_equal_to_support(measure):
    w, a = measure
    k = len(a)
    has_zero = 0 in a
    levels = H.determinant_hierarchy(seq(moments_of(w, a, 12)), 5)
    for lv in levels:
        assert lv.verdict.status == H.YES and lv.verdict_shifted.status == H.YES
        assert lv.verdict.rank == min(lv.depth + 1, k)
        assert lv.verdict_shifted.rank == min(lv.depth + 1, k - has_zero)
        assert lv.det == hankel_det_oracle(w, a, lv.depth)
        assert lv.det_shifted == hankel_det_oracle(w, a, lv.depth, shift=1)


@given(atomic_measures(allow_zero=False))
def test_atom_at_zero_refinement(measure):
    # adding I = 0 raises the rank of L by one and leaves L~ unchanged
    w, a = measure
    w0 = [x / 2 for x in w] + [Fraction(1, 2)]
    a0 = a + [Fraction(0)]
    k = len(a0)
    levels = H.determinant_hierarchy(seq(moments_of(w0, a0, 14)), 6)
    for lv in levels:
        assert (lv.det > 0) == (lv.depth <= k - 1)
        assert (lv.det_shifted > 0) == (lv.depth <= k - 2)


@given(st.lists(st.fractions(-3, 3, max_denominator=6), min_size=9, max_size=9), st.lists(st.integers(1, 5), min_size=5, max_size=5))
def test_diagonal_congruence_never_flips_exact_verdict(values, diag):
    m = H.hankel_matrix(values, 4)
    d = [Fraction(x) for x in diag]
    scaled = tuple(tuple(d[i] * x * d[j] for j, x in enumerate(row)) for i, row in enumerate(m))
    a, b = H.matrix_psd(m), H.matrix_psd(scaled)
    assert a.status == b.status
    if a.witness is not None:
        assert H.quadratic_form(m, a.witness) < 0


@given(st.lists(st.fractions(-3, 3, max_denominator=6), min_size=9, max_size=9))
def test_exact_and_float_agree_when_margin_is_clear(values):
    m = H.hankel_matrix(values, 4)
    exact = H.matrix_psd(m)
    lam = np.linalg.eigvalsh(np.array([[float(x) for x in row] for row in m]))
    if abs(lam[0]) > 10 * 1e-9 * max(1.0, lam[-1]):
        floated = H.matrix_psd(tuple(tuple(float(x) for x in row) for row in m))
        assert (exact.status == H.NO) == (floated.status == H.NO)


@given(st.lists(st.fractions(0, 5, max_denominator=7), min_size=12, max_size=12), st.integers(0, 4))
def test_deletion_relation(values, N):
    s = seq(values)
    shifted = H.hankel_matrix(values, N, 1)
    bigger = H.hankel_matrix(values, N + 1)
    # the shifted matrix is the unshifted one with its first row removed, truncated
    assert shifted == tuple(row[: N + 1] for row in bigger[1:])
    assert H.build_pair(s, N).shifted == shifted


def test_gamma_pair_names():
    pair = H.build_pair(MomentSequence(GAMMA, (1, 1, 1, 1)), 1)
    assert pair.names == ("M", "M~")


def test_extended_mode_hierarchy_on_thermal():
    q = q_from_pnd(generate_pnd(Thermal(1.0), 40, mode="extended"))
    levels = H.determinant_hierarchy(q, 8)
    assert H.first_failure(levels) is None
    assert all(lv.verdict.mode == "extended" for lv in levels)
    assert math.isfinite(float(levels[3].det))
