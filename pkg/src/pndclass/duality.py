"""Triangular transforms between q-moments and factorial moments.

With ``S_jk = 1/(k-j)!`` (zero below the diagonal) the two sequences are
related by ``gamma = S q`` and ``q = S^-1 gamma``, i.e.

    gamma_n = sum_k q_{n+k} / k!
    q_n     = sum_k (-1)^k gamma_{n+k} / k!

and the Hankel matrices by the congruences ``M = S^1/2 L (S^1/2)^T`` and
``M~ = S^1/2 L~ (S^1/2)^T``. Finite sections only approximate these
infinite-matrix identities; :func:`congruence_check` measures the gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import numeric
from .hankel import HankelPair, build_pair
from .moments import FROM_PND, GAMMA, Q, TRANSFORMED, MomentSequence
from .numeric import DOUBLE, EXACT, EXTENDED

S = "S"
S_INVERSE = "S_inverse"
S_HALF = "S_half"
S_HALF_INVERSE = "S_half_inverse"
FAMILIES = (S, S_INVERSE, S_HALF, S_HALF_INVERSE)

# series remainder accepted relative to the partial sum
SERIES_TOLERANCE = {DOUBLE: 1e-13, EXTENDED: 1e-40, EXACT: 1e-40}

_BASE = {S: 1, S_INVERSE: -1, S_HALF: Fraction(1, 2), S_HALF_INVERSE: Fraction(-1, 2)}


@dataclass(frozen=True)
class STransform:
    order: int  # matrix size
    family: str
    entries: tuple

    def __matmul__(self, other):
        return matmul(self.entries, other.entries if isinstance(other, STransform) else other)


def s_matrix(size, family=S, mode=EXACT):
    """Upper-triangular ``size x size`` member of the S family.

    Entry ``(j, k)`` is ``b^(k-j) / (k-j)!`` for ``k >= j`` with ``b`` equal to
    1, -1, 1/2, -1/2 for ``S``, ``S^-1``, ``S^1/2``, ``S^-1/2``.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    base = Fraction(_BASE[family])
    with numeric.context(mode):
        diag = [numeric.convert(base**d / math.factorial(d), mode) for d in range(size)]
        zero = numeric.zero(mode)
        rows = tuple(tuple(diag[k - j] if k >= j else zero for k in range(size)) for j in range(size))
    return STransform(size, family, rows)


def matmul(a, b):
    mode = numeric.mode_of([x for row in a for x in row] + [x for row in b for x in row])
    cols = list(zip(*b))
    with numeric.context(mode):
        return tuple(tuple(numeric.fsum((x * y for x, y in zip(row, col)), mode) for col in cols) for row in a)


def transpose(a):
    return tuple(zip(*a))


def identity(size, mode=EXACT):
    return tuple(tuple(numeric.one(mode) if i == j else numeric.zero(mode) for j in range(size)) for i in range(size))


def _finite_support(seq):
    """True when entries beyond the stored ones are known to vanish."""
    if not seq.tail_exact:
        return False
    if seq.provenance == FROM_PND:
        return True
    # gamma_m = sum n!/(n-m)! p_n vanishes only if p_n = 0 for all n >= m
    return seq.kind == GAMMA and any(v == 0 for v in seq.values[1:])


def _require(seq, kind):
    if seq.kind != kind:
        raise ValueError(f"expected a {kind!r} sequence, got {seq.kind!r}")


def q_to_gamma(q, M, tolerance=None):
    """Factorial moments ``gamma_0 .. gamma_M`` from a q sequence.

    The tail of each series is bounded geometrically from the ratio of its
    last two terms. Raises ``ValueError`` when the available q values do not
    bring the bound below ``tolerance`` relative to the sum.
    """
    _require(q, Q)
    if M >= len(q):
        raise ValueError(f"gamma_{M} needs q_{M}; only {len(q)} values given")
    mode = q.mode
    tol = SERIES_TOLERANCE[mode] if tolerance is None else tolerance
    finite = _finite_support(q)
    values, worst = [], 0.0
    with numeric.context(mode):
        for n in range(M + 1):
            terms = [q[n + k] / numeric.factorial(k, mode) for k in range(len(q) - n)]
            total = numeric.fsum(terms, mode)
            rem = 0.0 if finite else _geometric_remainder(terms)
            scale = abs(numeric.to_float(total))
            if rem > tol * scale and not (rem == 0 and scale == 0):
                raise ValueError(
                    f"gamma_{n} has not converged: tail estimate {rem:.3g} vs sum {scale:.3g}; supply more q values"
                )
            worst = max(worst, rem / scale if scale else rem)
            values.append(total)
    return MomentSequence(GAMMA, values, TRANSFORMED, finite or q.tail_exact and worst == 0, worst)


def _geometric_remainder(terms):
    if len(terms) < 2:
        return math.inf
    a, b = (abs(numeric.to_float(t)) for t in terms[-2:])
    if b == 0:
        return 0.0 if a == 0 else math.inf
    r = b / a
    return math.inf if r >= 1 else b * r / (1 - r)


@dataclass(frozen=True)
class Inversion:
    method: str  # "direct" or "euler"
    remainder: float


def gamma_to_q(gamma, M, tolerance=None, details=False):
    """q values ``q_0 .. q_M`` from factorial moments.

    The alternating series is summed directly when its terms decrease to the
    end of the data. Otherwise (factorial moments that grow, as for thermal
    light) the Euler transform ``sum_j (-1)^j (Delta^j a)_0 / 2^(j+1)`` is
    used; it is exact when ``gamma_{n+k}/k!`` is a polynomial in ``k``.
    Raises ``ValueError`` if neither converges. With ``details=True`` a list
    of :class:`Inversion` records is returned as well.
    """
    _require(gamma, GAMMA)
    if M >= len(gamma):
        raise ValueError(f"q_{M} needs gamma_{M}; only {len(gamma)} values given")
    mode = gamma.mode
    tol = SERIES_TOLERANCE[mode] if tolerance is None else tolerance
    finite = _finite_support(gamma)
    values, info = [], []
    with numeric.context(mode):
        for n in range(M + 1):
            terms = [gamma[n + k] / numeric.factorial(k, mode) for k in range(len(gamma) - n)]
            total, rem, method = _alternating(terms, mode, finite)
            scale = max(abs(numeric.to_float(total)), max((abs(numeric.to_float(t)) for t in terms[:1]), default=0))
            if rem > tol * scale and rem != 0:
                total, rem, method = _euler(terms, mode)
                if rem > tol * scale and rem != 0:
                    raise ValueError(f"q_{n} could not be recovered: remainder {rem:.3g}; supply more gamma values")
            values.append(total)
            info.append(Inversion(method, rem))
    exact = gamma.tail_exact and all(i.remainder == 0 for i in info)
    out = MomentSequence(Q, values, TRANSFORMED, exact, max((i.remainder for i in info), default=0.0))
    return (out, info) if details else out


def _alternating(terms, mode, finite):
    total = numeric.fsum(((-1) ** k * t for k, t in enumerate(terms)), mode)
    if finite:
        return total, 0.0, "direct"
    mags = [abs(numeric.to_float(t)) for t in terms]
    if len(mags) < 2 or mags[-1] > mags[-2]:
        return total, math.inf, "direct"
    return total, mags[-1], "direct"


def _euler(terms, mode):
    diffs = list(terms)
    out = []
    half = numeric.convert(Fraction(1, 2), mode)
    weight = half
    for j in range(len(terms)):
        out.append((-1) ** j * diffs[0] * weight)
        diffs = [b - a for a, b in zip(diffs, diffs[1:])]
        weight *= half
    total = numeric.fsum(out, mode)
    tail = [abs(numeric.to_float(t)) for t in out[-3:]]
    if len(tail) < 2:
        return total, math.inf, "euler"
    rem = max(tail[-2:])
    if mode == DOUBLE:
        # forward differences amplify roundoff by up to 2^j
        rem = max(rem, 4 * numeric.to_float(max((abs(t) for t in terms), default=0)) * 2.2e-16)
    return total, rem, "euler"


# ---------------------------------------------------------------------------
# congruences


@dataclass(frozen=True)
class CongruenceResult:
    order: int  # compared block is (order+1) x (order+1)
    padding: int
    residual: float  # max |S^1/2 L S^1/2T - M| on the block
    residual_shifted: float
    tail_bound: float
    within_bound: bool
    exact_zero: bool  # both residuals are exactly zero


def congruent_block(H, N):
    """Leading ``(N+1) x (N+1)`` block of ``S^1/2 H (S^1/2)^T``."""
    size = len(H)
    mode = numeric.mode_of([x for row in H for x in row])
    half = s_matrix(size, S_HALF, mode).entries
    full = matmul(matmul(half, H), transpose(half))
    return tuple(row[: N + 1] for row in full[: N + 1])


def _max_abs_diff(a, b, N):
    mode = numeric.mode_of([x for row in a for x in row] + [x for row in b for x in row])
    with numeric.context(mode):
        diffs = [abs(numeric.convert(a[i][j], mode) - numeric.convert(b[i][j], mode)) for i in range(N + 1) for j in range(N + 1)]
    return max(diffs)


def _max_entry(H):
    return max(abs(numeric.to_float(x)) for row in H for x in row)


def tail_bound(L_pair, N):
    """Predicted truncation error of the section congruence.

    Terms dropped from ``sum_ab S_ia L_ab S_jb`` have ``a`` or ``b`` beyond the
    section, ``P = L_pair.order``. Assuming unseen ``L`` entries stay below the
    largest seen one, the loss is at most
    ``2 e^(1/2) max|L| sum_{d > P-N} 2^-d / d!``. Records with finite support
    lose nothing.
    """
    P = L_pair.order
    lmax = max(_max_entry(L_pair.unshifted), _max_entry(L_pair.shifted))
    tail = sum(0.5**d / math.factorial(d) for d in range(P - N + 1, P - N + 40))
    # small relative margin: for constant L the bound is attained to first order
    return 2 * math.exp(0.5) * lmax * tail * (1 + 1e-9)


def _roundoff(mode, L_pair):
    if mode == EXACT:
        return 0.0
    eps = 2.0**-52 if mode == DOUBLE else 2.0 ** -(numeric.DEFAULT_PREC - 4)
    size = L_pair.order + 1
    lmax = max(_max_entry(L_pair.unshifted), _max_entry(L_pair.shifted))
    return 10 * eps * size * size * math.e * lmax


def congruence_check(L_pair, M_pair, N=None):
    """Compare ``S^1/2 L (S^1/2)^T`` with ``M`` on their leading blocks.

    ``L_pair`` is a section of order ``N + padding``; ``M_pair`` must reach
    order ``N``. Both unshifted and shifted congruences are checked. The
    result is within bound when each residual is at most the tail bound plus
    a roundoff allowance (zero in exact mode and for finite-support q).
    """
    if L_pair.kind != Q or M_pair.kind != GAMMA:
        raise ValueError("congruence_check takes a q pair and a gamma pair")
    if N is None:
        N = M_pair.order
    if N > M_pair.order or N > L_pair.order:
        raise ValueError(f"order {N} exceeds a section (L order {L_pair.order}, M order {M_pair.order})")
    r = _max_abs_diff(congruent_block(L_pair.unshifted, N), M_pair.unshifted, N)
    rs = _max_abs_diff(congruent_block(L_pair.shifted, N), M_pair.shifted, N)
    mode = numeric.mode_of([L_pair.unshifted[0][0], M_pair.unshifted[0][0]])
    bound = tail_bound(L_pair, N) + _roundoff(mode, L_pair)
    return CongruenceResult(
        order=N,
        padding=L_pair.order - N,
        residual=numeric.to_float(r),
        residual_shifted=numeric.to_float(rs),
        tail_bound=bound,
        within_bound=numeric.to_float(r) <= bound and numeric.to_float(rs) <= bound,
        exact_zero=r == 0 and rs == 0,
    )


def congruence_from_moments(q, gamma, N, padding=10):
    """Build the sections from moment sequences and run :func:`congruence_check`.

    Needs ``2(N + padding) + 2`` q values and ``2N + 2`` gamma values. For
    finite-support q shorter than that, missing entries are zero.
    """
    need = 2 * (N + padding) + 2
    if len(q) < need:
        if not _finite_support(q):
            raise ValueError(f"congruence at order {N} with padding {padding} needs {need} q values")
        q = MomentSequence(Q, q.values + (numeric.zero(q.mode),) * (need - len(q)), q.provenance, q.tail_exact)
    return congruence_check(build_pair(q, N + padding), build_pair(gamma, N), N)


__all__ = [
    "FAMILIES",
    "S",
    "S_HALF",
    "S_HALF_INVERSE",
    "S_INVERSE",
    "CongruenceResult",
    "HankelPair",
    "Inversion",
    "STransform",
    "congruence_check",
    "congruence_from_moments",
    "congruent_block",
    "gamma_to_q",
    "identity",
    "matmul",
    "q_to_gamma",
    "s_matrix",
    "tail_bound",
]
