"""Hankel matrices of moment sequences and their positivity.

A sequence ``m_0, m_1, ...`` is a Stieltjes moment sequence exactly when both
families

* unshifted: ``H[i][j] = m_{i+j}``
* shifted:   ``H[i][j] = m_{i+j+1}``

are positive semidefinite at every order. For q-sequences these are ``L`` and
``L~``; for factorial moments ``M`` and ``M~``.

Exact mode decides positivity with a symmetric pivoted elimination, which
handles the singular matrices of finitely supported measures correctly and
produces a rational vector ``v`` with ``v^T H v < 0`` whenever the answer is
no. Float modes use a symmetric eigendecomposition after a diagonal
rescaling that leaves every verdict unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from . import numeric
from .moments import GAMMA, Q, TRANSFORMED, MomentSequence
from .numeric import DOUBLE, EXACT, EXTENDED

YES = "yes"
NO = "no"
BORDERLINE = "borderline"

# eigenvalue error allowance, in units of roundoff times dimension
ROUNDOFF_FACTOR = 100


def hankel_matrix(values, N, shift=0):
    """``(N+1) x (N+1)`` Hankel matrix with entries ``values[i + j + shift]``."""
    need = 2 * N + shift + 1
    if N < 0:
        raise ValueError("order must be >= 0")
    if len(values) < need:
        raise ValueError(f"order {N} (shift {shift}) needs {need} moments, got {len(values)}")
    return tuple(tuple(values[i + j + shift] for j in range(N + 1)) for i in range(N + 1))


@dataclass(frozen=True)
class HankelPair:
    unshifted: tuple
    shifted: tuple
    order: int
    kind: str

    @property
    def names(self):
        return ("L", "L~") if self.kind == Q else ("M", "M~")


def build_pair(moments, N):
    """Both Hankel matrices of order ``N``; needs moments ``0 .. 2N+1``."""
    values = moments.values
    if len(values) < 2 * N + 2:
        raise ValueError(f"order {N} needs {2 * N + 2} moments for the shifted matrix, got {len(values)}")
    return HankelPair(hankel_matrix(values, N), hankel_matrix(values, N, 1), N, moments.kind)


@dataclass(frozen=True)
class PsdVerdict:
    """Outcome of a positive-semidefiniteness test.

    ``witness`` is a vector with a negative quadratic form whenever the status
    is ``"no"``; in exact mode it is rational and the negativity is exact.
    ``failing_minor`` is the size-minus-one of the first negative leading
    principal minor, when one exists (exact mode only).
    """

    status: str
    depth: int
    mode: str
    min_eigenvalue: float | None = None
    failing_minor: int | None = None
    witness: tuple | None = None
    rank: int | None = None
    leading_minors: tuple | None = None
    scale: float = 1.0

    @property
    def is_psd(self):
        return self.status != NO


# ---------------------------------------------------------------------------
# exact rational linear algebra


def _det_exact(rows):
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return det


def leading_minors(H):
    """Exact leading principal minors ``D_0 .. D_N`` of a rational matrix."""
    n = len(H)
    return tuple(_det_exact([row[: k + 1] for row in H[: k + 1]]) for k in range(n))


def _solve_exact(a, b):
    """Solve ``a x = b`` for nonsingular rational ``a``."""
    n = len(a)
    m = [list(a[i]) + [b[i]] for i in range(n)]
    for k in range(n):
        piv = next(i for i in range(k, n) if m[i][k] != 0)
        m[k], m[piv] = m[piv], m[k]
        for i in range(n):
            if i != k and m[i][k] != 0:
                f = m[i][k] / m[k][k]
                for j in range(k, n + 1):
                    m[i][j] -= f * m[k][j]
    return [m[i][n] / m[i][i] for i in range(n)]


def _lift(H, pivots, local):
    """Extend a vector on non-pivot indices so its form equals the Schur-complement form."""
    n = len(H)
    v = [Fraction(0)] * n
    for i, c in local.items():
        v[i] = c
    if pivots:
        app = [[H[p][q] for q in pivots] for p in pivots]
        rhs = [-sum(H[p][i] * c for i, c in local.items()) for p in pivots]
        for p, x in zip(pivots, _solve_exact(app, rhs)):
            v[p] = x
    return tuple(v)


def quadratic_form(H, v):
    n = len(H)
    return sum(v[i] * H[i][j] * v[j] for i in range(n) for j in range(n))


def _exact_psd(H, depth):
    H = [[numeric.convert(x, EXACT) for x in row] for row in H]
    n = len(H)
    minors = leading_minors(H)
    failing = next((k for k, d in enumerate(minors) if d < 0), None)
    S = [row[:] for row in H]
    active = list(range(n))
    pivots = []
    witness = None
    while active:
        neg = next((i for i in active if S[i][i] < 0), None)
        if neg is not None:
            witness = _lift(H, pivots, {neg: Fraction(1)})
            break
        pos = next((i for i in active if S[i][i] > 0), None)
        if pos is None:
            pair = next(((i, j) for i in active for j in active if i < j and S[i][j] != 0), None)
            if pair is not None:
                i, j = pair
                t = Fraction(-1) if S[i][j] > 0 else Fraction(1)
                witness = _lift(H, pivots, {i: t, j: Fraction(1)})
            break
        pivots.append(pos)
        active.remove(pos)
        d = S[pos][pos]
        for i in active:
            f = S[i][pos] / d
            if f:
                for j in active:
                    S[i][j] -= f * S[pos][j]
    status = NO if witness is not None else YES
    return PsdVerdict(
        status=status,
        depth=depth,
        mode=EXACT,
        failing_minor=failing,
        witness=witness,
        rank=len(pivots) if witness is None else None,
        leading_minors=minors,
    )


# ---------------------------------------------------------------------------
# floating point


def _decide(lam_min, lam_max, tol):
    s = max(1.0, lam_max)
    if lam_min < -tol * s:
        return NO
    if lam_min <= tol * s:
        return BORDERLINE
    return YES


def _robust(lam_min, lam_max, tol, err):
    s = max(1.0, lam_max)
    return all(abs(lam_min - edge) > err for edge in (-tol * s, tol * s))


def _extended_psd(H, tol, depth, scale, prec=None):
    with numeric.working_precision(prec):
        A = mpmath.matrix([[numeric.convert(x, EXTENDED) for x in row] for row in H])
        E, V = mpmath.eigsy(A)
        lams = [E[i] for i in range(len(H))]
        k = min(range(len(lams)), key=lambda i: lams[i])
        lam_min, lam_max = float(lams[k]), float(max(lams))
        status = _decide(lam_min, lam_max, float(tol))
        s = max(1.0, lam_max)
        rank = sum(1 for x in lams if x > tol * s)
        witness = tuple(float(V[i, k]) for i in range(len(H))) if status == NO else None
    return PsdVerdict(status, depth, EXTENDED, lam_min, witness=witness, rank=rank, scale=scale)


def _float_matrix(H):
    a = np.array([[numeric.to_float(x) for x in row] for row in H], dtype=float)
    if not np.all(np.isfinite(a)):
        raise OverflowError("matrix entries do not fit in double precision")
    return a


def _double_psd(H, tol, depth, scale):
    try:
        a = _float_matrix(H)
    except OverflowError:
        return _extended_psd(H, numeric.default_tolerance(EXTENDED) if tol == 0 else tol, depth, scale)
    lams, vecs = np.linalg.eigh(a)
    lam_min, lam_max = float(lams[0]), float(lams[-1])
    err = ROUNDOFF_FACTOR * len(a) * np.finfo(float).eps * max(abs(lam_min), abs(lam_max))
    if not _robust(lam_min, lam_max, tol, err):
        return _extended_psd(H, tol, depth, scale)
    status = _decide(lam_min, lam_max, tol)
    s = max(1.0, lam_max)
    rank = int(np.sum(lams > tol * s))
    witness = tuple(float(x) for x in vecs[:, 0]) if status == NO else None
    return PsdVerdict(status, depth, DOUBLE, lam_min, witness=witness, rank=rank, scale=scale)


def _rescaled(H, c, shift):
    """Diagonal congruence ``H_ij / c^(i+j+shift)``; multiplies eigenvectors by ``c^-i``."""
    mode = numeric.mode_of([x for row in H for x in row])
    with numeric.context(mode):
        c = numeric.convert(c, mode)
        return tuple(tuple(x / c ** (i + j + shift) for j, x in enumerate(row)) for i, row in enumerate(H))


def _jacobi(H):
    """Unit-diagonal congruence ``D H D`` with ``D_ii = H_ii^-1/2`` (rows with ``H_ii <= 0`` untouched)."""
    mode = numeric.mode_of([x for row in H for x in row])
    if mode == EXACT:
        H = tuple(tuple(numeric.convert(x, EXTENDED) for x in row) for row in H)
        mode = EXTENDED
    with numeric.context(mode):
        d = [1 / numeric.sqrt(row[i]) if row[i] > 0 else numeric.one(mode) for i, row in enumerate(H)]
        scaled = tuple(tuple(d[i] * x * d[j] for j, x in enumerate(row)) for i, row in enumerate(H))
    return scaled, d


def _unscale_witness(verdict, factors):
    if verdict.witness is None:
        return verdict
    w = tuple(numeric.to_float(f) * x for f, x in zip(factors, verdict.witness))
    return PsdVerdict(**{**verdict.__dict__, "witness": w})


def _check_symmetric(H):
    n = len(H)
    if any(len(row) != n for row in H):
        raise ValueError("matrix is not square")
    if any(H[i][j] != H[j][i] for i in range(n) for j in range(i)):
        raise ValueError("matrix is not symmetric")


def matrix_psd(H, mode=None, tolerance=None, depth=None, scale=1, shift=0):
    """Decide whether a symmetric matrix is positive semidefinite.

    Parameters
    ----------
    H : sequence of rows
    mode : str, optional
        Arithmetic mode; inferred from the entries when omitted.
    tolerance : float, optional
        Relative eigenvalue tolerance for the float modes: PSD iff
        ``lam_min >= -tol * max(1, lam_max)``, borderline iff
        ``|lam_min| <= tol * max(1, lam_max)``. Ignored in exact mode.
    scale : number
        Positive ``c``; float modes analyse ``H_ij / c^(i+j+shift)`` instead,
        which has the same inertia, and then scale it to unit diagonal.
        Reported eigenvalues refer to that final matrix; witnesses are
        mapped back to ``H``.
    """
    _check_symmetric(H)
    depth = len(H) - 1 if depth is None else depth
    if mode is None:
        mode = numeric.mode_of([x for row in H for x in row])
    numeric.check_mode(mode)
    if mode == EXACT:
        return _exact_psd(H, depth)
    tol = numeric.default_tolerance(mode) if tolerance is None else tolerance
    Hs = _rescaled(H, scale, shift) if scale != 1 else H
    Hs, d = _jacobi(Hs)
    with numeric.working_precision():
        factors = [numeric.convert(di, EXTENDED) / numeric.convert(scale, EXTENDED) ** i for i, di in enumerate(d)]
    fscale = numeric.to_float(scale)
    if mode == EXTENDED:
        verdict = _extended_psd(Hs, tol, depth, fscale)
    else:
        verdict = _double_psd(Hs, tol, depth, fscale)
    return _unscale_witness(verdict, factors)


def _pair_scale(pair):
    m0 = pair.unshifted[0][0]
    m1 = pair.shifted[0][0]
    return m1 / m0 if m0 > 0 and m1 > 0 else 1


def psd_check(pair, mode=None, tolerance=None):
    """PSD verdicts for both matrices of a :class:`HankelPair`: (unshifted, shifted)."""
    if mode is None:
        mode = numeric.mode_of([x for row in pair.unshifted for x in row])
    scale = 1 if mode == EXACT else _pair_scale(pair)
    return (
        matrix_psd(pair.unshifted, mode, tolerance, pair.order, scale, 0),
        matrix_psd(pair.shifted, mode, tolerance, pair.order, scale, 1),
    )


def rescale_for_conditioning(moments):
    """Scale ``m_n -> m_n / c^n`` with ``c = m_1 / m_0``.

    The Hankel matrices of the scaled sequence are diagonal congruences of the
    originals, so every PSD verdict is preserved.
    """
    if len(moments) < 2:
        raise ValueError("need at least two moments to rescale")
    m0, m1 = moments.values[:2]
    if not (m0 > 0 and m1 > 0):
        raise ValueError("rescaling needs m_0 > 0 and m_1 > 0; run the zero rule first")
    with numeric.context(moments.mode):
        c = m1 / m0
        values = tuple(v / c**n for n, v in enumerate(moments.values))
    return MomentSequence(moments.kind, values, TRANSFORMED, moments.tail_exact), c


# ---------------------------------------------------------------------------
# determinant hierarchy


@dataclass(frozen=True)
class HierarchyLevel:
    depth: int
    det: object  # D_N, None if out of reach
    det_shifted: object  # D~_N, None if out of reach
    verdict: PsdVerdict | None
    verdict_shifted: PsdVerdict | None

    @property
    def failed(self):
        return any(v is not None and v.status == NO for v in (self.verdict, self.verdict_shifted))


def _float_det(verdict_matrix, mode):
    if mode == EXTENDED:
        with numeric.working_precision():
            return mpmath.det(mpmath.matrix([[numeric.convert(x, EXTENDED) for x in r] for r in verdict_matrix]))
    try:
        sign, logdet = np.linalg.slogdet(_float_matrix(verdict_matrix))
    except OverflowError:
        return _float_det(verdict_matrix, EXTENDED)
    return float(sign * math.exp(logdet)) if logdet < 700 else float(sign * math.inf)


def determinant_hierarchy(moments, N_max=None, mode=None, tolerance=None):
    """Determinants ``D_N, D~_N`` and PSD verdicts for ``N = 0 .. N_max``.

    Unreachable shifted levels (the record ends at an even index) carry
    ``None``. Positivity is decided per level by :func:`matrix_psd`, not by the
    determinant sign alone: a singular PSD block followed by a non-PSD one can
    have ``D_N = 0``. The first level with a "no" verdict is the witness depth.
    """
    if mode is not None and mode != moments.mode:
        moments = moments.to_mode(mode)
    mode = moments.mode if mode is None else mode
    values = moments.values
    reach = (len(values) - 1) // 2
    if N_max is None:
        N_max = reach
    if N_max > reach:
        raise ValueError(f"depth {N_max} needs {2 * N_max + 1} moments, got {len(values)}")
    scale = 1
    if mode != EXACT and len(values) > 1 and values[0] > 0 and values[1] > 0:
        with numeric.context(mode):
            scale = values[1] / values[0]

    big = hankel_matrix(values, N_max)
    big_shifted = hankel_matrix(values, N_max if 2 * N_max + 1 < len(values) else N_max - 1, 1) if N_max >= 1 or len(values) > 1 else None
    if mode == EXACT:
        dets = leading_minors(big)
        dets_shifted = leading_minors(big_shifted) if big_shifted else ()
    levels = []
    for N in range(N_max + 1):
        H = tuple(row[: N + 1] for row in big[: N + 1])
        verdict = matrix_psd(H, mode, tolerance, N, scale, 0)
        det = dets[N] if mode == EXACT else _float_det(H, mode)
        det_s = verdict_s = None
        if 2 * N + 1 < len(values):
            Hs = tuple(row[: N + 1] for row in big_shifted[: N + 1])
            verdict_s = matrix_psd(Hs, mode, tolerance, N, scale, 1)
            det_s = dets_shifted[N] if mode == EXACT else _float_det(Hs, mode)
        levels.append(HierarchyLevel(N, det, det_s, verdict, verdict_s))
    return levels


def first_failure(levels):
    """``(depth, "unshifted" | "shifted")`` of the first non-PSD level, or None."""
    for level in levels:
        if level.verdict is not None and level.verdict.status == NO:
            return level.depth, "unshifted"
        if level.verdict_shifted is not None and level.verdict_shifted.status == NO:
            return level.depth, "shifted"
    return None


__all__ = [
    "BORDERLINE",
    "GAMMA",
    "NO",
    "Q",
    "YES",
    "HankelPair",
    "HierarchyLevel",
    "PsdVerdict",
    "build_pair",
    "determinant_hierarchy",
    "first_failure",
    "hankel_matrix",
    "leading_minors",
    "matrix_psd",
    "psd_check",
    "quadratic_form",
    "rescale_for_conditioning",
]
