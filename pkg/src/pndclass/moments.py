"""The two dual moment sequences of a photon number distribution.

``q_n = n! p_n`` are the moments of ``P(I) e^{-I}`` and always exist.
The factorial moments ``gamma_m = <a^dag^m a^m>`` are the moments of ``P(I)``
itself and exist only for rapidly decaying distributions, so anything built
from truncated sums is flagged as non-definitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import numeric
from .numeric import DOUBLE, EXTENDED
from .pnd import (
    AtomicIntensity,
    Coherent,
    CoherentMixture,
    Fock,
    PhotonAdded,
    Superposition,
    Thermal,
)

Q = "q"
GAMMA = "gamma"

FROM_PND = "from-pnd"
CLOSED_FORM = "closed-form"
TRANSFORMED = "transformed"


@dataclass(frozen=True)
class MomentSequence:
    """Tagged moment sequence ``m_0 .. m_J``.

    ``tail_exact`` is true when every value is the exact moment of the
    underlying state rather than a truncated sum.
    """

    kind: str
    values: tuple
    provenance: str = FROM_PND
    tail_exact: bool = False
    tail_diagnostic: float | None = None

    def __post_init__(self):
        if self.kind not in (Q, GAMMA):
            raise ValueError(f"moment kind must be 'q' or 'gamma', got {self.kind!r}")
        object.__setattr__(self, "values", tuple(self.values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n):
        return self.values[n]

    @property
    def mode(self):
        return numeric.mode_of(self.values)

    def to_mode(self, mode):
        if mode == self.mode:
            return self
        with numeric.working_precision():
            values = numeric.convert_all(self.values, mode)
        return MomentSequence(self.kind, values, self.provenance, self.tail_exact, self.tail_diagnostic)

    def shifted(self, k):
        """The sequence with its first ``k`` terms dropped."""
        return MomentSequence(self.kind, self.values[k:], TRANSFORMED, self.tail_exact)

    def to_dict(self):
        from .pnd import _json_number

        return {
            "kind": self.kind,
            "values": [_json_number(v) for v in self.values],
            "tail_exact": self.tail_exact,
        }


def q_from_pnd(pnd):
    """``q_n = n! p_n``; double records escalate to extended past ``170!``."""
    mode = pnd.mode
    if mode == DOUBLE and pnd.K > numeric.MAX_DOUBLE_FACTORIAL:
        mode = EXTENDED
    with numeric.context(mode):
        probs = numeric.convert_all(pnd.probabilities, mode)
        values = tuple(numeric.factorial(n, mode) * p for n, p in enumerate(probs))
    return MomentSequence(Q, values, FROM_PND, pnd.complete)


def gamma_from_pnd(pnd, M):
    """Truncated factorial moments ``gamma_m = sum_{n>=m} n!/(n-m)! p_n``, m = 0..M.

    The sums stop at the record's last entry, so the result is definitive only
    for complete (finite-support) records. ``tail_diagnostic`` holds the
    largest ratio of the last included term to its partial sum.
    """
    if M < 0:
        raise ValueError("order must be >= 0")
    mode = pnd.mode
    try:
        return _gamma_from_pnd(pnd, M, mode)
    except OverflowError:
        if mode != DOUBLE:
            raise
        return _gamma_from_pnd(pnd, M, EXTENDED)


def _gamma_from_pnd(pnd, M, mode):
    probs = numeric.convert_all(pnd.probabilities, mode) if mode != pnd.mode else pnd.probabilities
    values = []
    worst = 0.0
    with numeric.context(mode):
        for m in range(M + 1):
            terms = [numeric.convert(math.perm(n, m), mode) * probs[n] for n in range(m, pnd.K + 1)]
            if mode == DOUBLE and any(math.isinf(t) for t in terms):
                raise OverflowError("factorial-moment term overflowed")
            total = numeric.fsum(terms, mode) if terms else numeric.zero(mode)
            values.append(total)
            if terms and total != 0:
                worst = max(worst, abs(numeric.to_float(terms[-1] / total)))
    return MomentSequence(GAMMA, tuple(values), FROM_PND, pnd.complete, worst)


def falling_factorial_coefficients(poly, degree):
    """Coefficients ``c_r`` with ``poly(j) = sum_r c_r j!/(j-r)!`` for integers j >= 0.

    Uses Newton's forward-difference form: ``c_r = Delta^r poly(0) / r!``.
    """
    from fractions import Fraction

    vals = [poly(j) for j in range(degree + 1)]
    coeffs = []
    for r in range(degree + 1):
        diff = sum((-1) ** (r - i) * math.comb(r, i) * vals[i] for i in range(r + 1))
        coeffs.append(Fraction(diff, math.factorial(r)))
    return coeffs


def _closed_gamma(spec, M, mode):
    if isinstance(spec, Coherent):
        mu = numeric.convert(spec.intensity, mode)
        return [mu**m for m in range(M + 1)]
    if isinstance(spec, Thermal):
        nbar = numeric.convert(spec.mean, mode)
        return [numeric.factorial(m, mode) * nbar**m for m in range(M + 1)]
    if isinstance(spec, (CoherentMixture, AtomicIntensity)):
        atoms = [(numeric.convert(w, mode), numeric.convert(i, mode)) for w, i in spec.atoms]
        return [numeric.fsum((w * i**m for w, i in atoms), mode) for m in range(M + 1)]
    if isinstance(spec, Superposition):
        mu = numeric.convert(spec.intensity, mode)
        c = numeric.cos(spec.theta, mode)
        e2 = numeric.exp(-mu, mode) ** 2
        denom = 1 + e2 * c
        return [mu**m * (1 + (-1) ** m * e2 * c) / denom for m in range(M + 1)]
    if isinstance(spec, Fock):
        return [numeric.convert(math.perm(spec.n, m), mode) for m in range(M + 1)]
    if isinstance(spec, PhotonAdded):
        m_add = spec.m
        base = _closed_gamma(spec.base, M + m_add, mode)
        weights = falling_factorial_coefficients(lambda j: math.perm(j + m_add, m_add), m_add)
        norm = numeric.fsum((numeric.convert(c, mode) * g for c, g in zip(weights, base)), mode)
        out = []
        for k in range(M + 1):
            coeffs = falling_factorial_coefficients(
                lambda j, k=k: math.perm(j + m_add, k) * math.perm(j + m_add, m_add), k + m_add
            )
            out.append(numeric.fsum((numeric.convert(c, mode) * g for c, g in zip(coeffs, base)), mode) / norm)
        return out
    raise TypeError(f"no closed-form factorial moments for {spec!r}")


def gamma_closed_form(spec, M, mode=DOUBLE):
    """Exact factorial moments ``gamma_0 .. gamma_M`` of a reference state."""
    numeric.check_mode(mode)
    if M < 0:
        raise ValueError("order must be >= 0")
    with numeric.working_precision():
        values = _closed_gamma(spec, M, mode)
    return MomentSequence(GAMMA, tuple(values), CLOSED_FORM, True)


def atomic_moments(atoms, kind, count, mode=DOUBLE):
    """Moments of a finite atomic intensity measure ``sum_i w_i delta(I - I_i)``.

    ``kind="gamma"`` gives ``sum_i w_i I_i^m`` and ``kind="q"`` gives
    ``sum_i w_i e^{-I_i} I_i^n``. In exact mode each ``e^{-I_i}`` is rounded to
    a rational once, so the q-sequence is still exactly that of a positive
    atomic measure.
    """
    if kind not in (Q, GAMMA):
        raise ValueError(f"moment kind must be 'q' or 'gamma', got {kind!r}")
    with numeric.working_precision():
        weighted = []
        for w, intensity in atoms:
            w = numeric.convert(w, mode)
            intensity = numeric.convert(intensity, mode)
            if kind == Q:
                w = w * numeric.exp(-intensity, mode)
            weighted.append((w, intensity))
        values = tuple(numeric.fsum((w * i**n for w, i in weighted), mode) for n in range(count))
    return MomentSequence(kind, values, CLOSED_FORM, True)


@dataclass(frozen=True)
class MandelQ:
    value: float
    nonclassical: bool  # Q < 0: sub-Poissonian statistics
    definitive: bool


def mandel_q(gamma):
    """Mandel parameter ``(gamma_2 - gamma_1^2) / gamma_1``.

    Negative values certify sub-Poissonian (nonclassical) statistics. Raises
    ``ValueError`` for the vacuum, where ``gamma_1 = 0`` leaves Q undefined.
    """
    _require(gamma, GAMMA, 3)
    g0, g1, g2 = gamma.values[:3]
    if g1 == 0:
        raise ValueError("Mandel Q is undefined when <n> = 0")
    with numeric.context(gamma.mode):
        value = (g2 - g1 * g1) / g1
    return MandelQ(numeric.to_float(value), value < 0, gamma.tail_exact)


def _require(seq, kind, count):
    if seq.kind != kind:
        raise ValueError(f"expected a {kind!r} sequence, got {seq.kind!r}")
    if len(seq) < count:
        raise ValueError(f"need at least {count} moments, got {len(seq)}")


@dataclass(frozen=True)
class KlauderCheck:
    m_prime: int
    m: int
    lower: float  # gamma_{m'} gamma_m
    middle: float  # gamma_{m'+m}
    upper: float  # sqrt(gamma_{2m'} gamma_{2m})
    lower_slack: float
    upper_slack: float
    lower_ok: bool
    upper_ok: bool
    lower_saturated: bool
    upper_saturated: bool
    definitive: bool

    @property
    def passed(self):
        return self.lower_ok and self.upper_ok


def klauder_check(gamma, m_prime, m, tolerance=None):
    """Check ``gamma_{m'} gamma_m <= gamma_{m'+m} <= sqrt(gamma_{2m'} gamma_{2m})``.

    The right inequality is decided on squares so exact mode stays rational.
    A violation proves nonclassicality only if ``gamma.tail_exact``.
    """
    top = max(m_prime + m, 2 * m_prime, 2 * m)
    _require(gamma, GAMMA, top + 1)
    mode = gamma.mode
    tol = numeric.default_tolerance(mode) if tolerance is None else tolerance
    g = gamma.values
    with numeric.context(mode):
        tol = numeric.convert(tol, mode)
        lower = g[m_prime] * g[m]
        middle = g[m_prime + m]
        product = g[2 * m_prime] * g[2 * m]
        lower_slack = middle - lower
        lower_scale = max(abs(middle), abs(lower))
        lower_ok = lower_slack >= -tol * lower_scale
        lower_sat = abs(lower_slack) <= tol * lower_scale
        square_slack = product - middle * middle
        square_scale = max(abs(product), middle * middle)
        upper_ok = middle <= 0 or square_slack >= -tol * square_scale
        upper_sat = abs(square_slack) <= tol * square_scale
        upper = numeric.sqrt(product) if product >= 0 else math.nan
    return KlauderCheck(
        m_prime,
        m,
        numeric.to_float(lower),
        numeric.to_float(middle),
        numeric.to_float(upper),
        numeric.to_float(lower_slack),
        numeric.to_float(upper) - numeric.to_float(middle),
        bool(lower_ok),
        bool(upper_ok),
        bool(lower_sat),
        bool(upper_sat),
        gamma.tail_exact,
    )


@dataclass(frozen=True)
class GeneratingValue:
    K: float
    value: object  # in the record's arithmetic mode
    remainder_bound: float


def lambda_generating(pnd, K_values):
    """Generating function ``Lambda(K) = sum_n (-K)^n p_n / n!`` on a finite record.

    ``remainder_bound`` bounds the contribution of unrecorded photon numbers:
    the missing mass ``1 - sum p_n`` times the largest ``K^n/n!`` past the
    record. It is zero for complete records.
    """
    mode = pnd.mode
    if mode == DOUBLE and pnd.K > numeric.MAX_DOUBLE_FACTORIAL:
        mode = EXTENDED
    out = []
    with numeric.context(mode):
        probs = numeric.convert_all(pnd.probabilities, mode)
        tail_mass = 0.0 if pnd.complete else max(0.0, 1.0 - numeric.to_float(numeric.fsum(probs, mode)))
        for K in K_values:
            if not K >= 0 or not math.isfinite(float(K)):
                raise ValueError(f"Lambda needs finite K >= 0, got {K!r}")
            k = numeric.convert(K, mode)
            terms = [(-k) ** n * p / numeric.factorial(n, mode) for n, p in enumerate(probs)]
            out.append(GeneratingValue(K, numeric.fsum(terms, mode), tail_mass * _max_tail_term(float(K), pnd.K)))
    return out


def _max_tail_term(K, last):
    """``max_{n > last} K^n / n!``."""
    if K == 0:
        return 0.0
    n = max(last + 1, math.floor(K))
    return math.exp(n * math.log(K) - math.lgamma(n + 1))
