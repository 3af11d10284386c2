"""Photon number distributions and reference-state generators.

A :class:`PND` is always a finite record ``p_0 .. p_K``. Generators produce
such records from a :class:`StateSpec` description of a single-mode state in
any of the three arithmetic modes (see :mod:`pndclass.numeric`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Union

from . import numeric
from .numeric import DOUBLE, EXACT, EXTENDED

STRICT = "strict"
TRUNCATED = "truncated"

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PND:
    """Finite photon number record.

    Attributes
    ----------
    probabilities : tuple
        ``p_0 .. p_K``, homogeneous in one arithmetic mode.
    normalization : str
        ``"strict"`` (the record sums to one) or ``"truncated"`` (a partial
        record whose sum may fall short of one).
    label : str
        Free-form description carried into reports.
    complete : bool
        True when the record is known to hold all of the probability mass,
        i.e. every ``p_n`` beyond ``K`` vanishes (finite-support states).
    """

    probabilities: tuple
    normalization: str = TRUNCATED
    label: str = ""
    complete: bool = False

    def __post_init__(self):
        probs = tuple(self.probabilities)
        if not probs:
            raise ValueError("a PND needs at least one entry")
        if self.normalization not in (STRICT, TRUNCATED):
            raise ValueError(f"normalization must be 'strict' or 'truncated', got {self.normalization!r}")
        object.__setattr__(self, "probabilities", probs)

    @property
    def K(self):
        """Truncation index (last recorded photon number)."""
        return len(self.probabilities) - 1

    @property
    def mode(self):
        return numeric.mode_of(self.probabilities)

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, n):
        return self.probabilities[n]

    def to_mode(self, mode):
        numeric.check_mode(mode)
        if mode == self.mode:
            return self
        with numeric.working_precision():
            probs = numeric.convert_all(self.probabilities, mode)
        return PND(probs, self.normalization, self.label, self.complete)

    def truncate(self, K):
        """Record restricted to ``p_0 .. p_K``."""
        if K < 0 or K > self.K:
            raise ValueError(f"cannot truncate a K={self.K} record at {K}")
        complete = self.complete and all(p == 0 for p in self.probabilities[K + 1:])
        return PND(self.probabilities[: K + 1], TRUNCATED, self.label, complete)

    @classmethod
    def from_q(cls, q_values, mode=None, label="", normalization=TRUNCATED):
        """Build a record from ``q_n = n! p_n`` values (as reported by experiments)."""
        q_values = list(q_values)
        if mode is None:
            mode = numeric.mode_of(q_values)
        with numeric.context(mode):
            q = numeric.convert_all(q_values, mode)
            probs = tuple(v / numeric.factorial(n, mode) for n, v in enumerate(q))
        return cls(probs, normalization, label)

    def to_dict(self):
        return {
            "p": [_json_number(p) for p in self.probabilities],
            "mode": self.normalization,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data, mode=DOUBLE):
        if "p" not in data:
            raise ValueError("PND JSON needs a 'p' array")
        with numeric.working_precision():
            probs = tuple(_read_number(v, mode) for v in data["p"])
        return cls(probs, data.get("mode", TRUNCATED), data.get("label", ""))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text, mode=DOUBLE):
        return cls.from_dict(json.loads(text, parse_float=Decimal), mode)


def _read_number(v, mode):
    if isinstance(v, bool) or not isinstance(v, (int, float, Decimal, str, Fraction)):
        raise ValueError(f"not a number: {v!r}")
    if mode == DOUBLE:
        return float(v) if not isinstance(v, str) else float(Fraction(v))
    return numeric.convert(v, mode)


def _json_number(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    if isinstance(x, int):
        return x
    return numeric.to_float(x)


# ---------------------------------------------------------------------------
# State specifications

Number = Union[int, float, Fraction, str]


def _check_nonnegative(name, value):
    if not value >= 0:
        raise ValueError(f"{name} must be nonnegative, got {value!r}")


def _check_weights(pairs, what):
    if not pairs:
        raise ValueError(f"{what} needs at least one component")
    total = 0
    for w, intensity in pairs:
        if not w > 0:
            raise ValueError(f"{what} weights must be positive, got {w!r}")
        _check_nonnegative(f"{what} intensity", intensity)
        total += numeric.convert(w, EXACT)
    if abs(total - 1) > Fraction(WEIGHT_TOLERANCE):
        raise ValueError(f"{what} weights sum to {float(total)!r}, expected 1")


@dataclass(frozen=True)
class Coherent:
    intensity: Number  # |z0|^2

    def __post_init__(self):
        _check_nonnegative("intensity", self.intensity)


@dataclass(frozen=True)
class Thermal:
    mean: Number  # mean photon number

    def __post_init__(self):
        _check_nonnegative("mean photon number", self.mean)


@dataclass(frozen=True)
class Superposition:
    """Two opposite coherent states with relative phase ``theta``.

    ``theta = 0`` and ``pi`` are the even and odd cat states,
    ``theta = +-pi/2`` the Yurke-Stoler states.
    """

    intensity: Number
    theta: Number = 0.0

    def __post_init__(self):
        _check_nonnegative("intensity", self.intensity)
        if self.intensity == 0 and math.isclose(math.cos(float(self.theta)), -1.0, abs_tol=1e-15):
            raise ValueError("|0> - |0> is not a state")


@dataclass(frozen=True)
class CoherentMixture:
    """Incoherent mixture of coherent states, as ``(weight, intensity)`` pairs."""

    components: tuple

    def __post_init__(self):
        comps = tuple((w, i) for w, i in self.components)
        _check_weights(comps, "mixture")
        object.__setattr__(self, "components", comps)

    @property
    def atoms(self):
        return self.components


@dataclass(frozen=True)
class AtomicIntensity:
    """Finite atomic intensity distribution: ``(weight, intensity)`` point masses."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((w, i) for w, i in self.atoms)
        _check_weights(atoms, "atomic intensity")
        object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"Fock index must be a nonnegative integer, got {self.n!r}")


@dataclass(frozen=True)
class PhotonAdded:
    m: int
    base: "StateSpec" = field(default_factory=lambda: Fock(0))

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"photon number to add must be >= 1, got {self.m!r}")
        if not isinstance(self.base, STATE_TYPES):
            raise TypeError(f"unsupported base state {self.base!r}")


StateSpec = Union[Coherent, Thermal, Superposition, CoherentMixture, AtomicIntensity, Fock, PhotonAdded]
STATE_TYPES = (Coherent, Thermal, Superposition, CoherentMixture, AtomicIntensity, Fock, PhotonAdded)

_TYPE_NAMES = {
    Coherent: "coherent",
    Thermal: "thermal",
    Superposition: "superposition",
    CoherentMixture: "mixture",
    AtomicIntensity: "atomic",
    Fock: "fock",
    PhotonAdded: "photon_added",
}


def state_to_dict(spec):
    kind = _TYPE_NAMES[type(spec)]
    if isinstance(spec, Coherent):
        body = {"intensity": _json_number(spec.intensity)}
    elif isinstance(spec, Thermal):
        body = {"mean": _json_number(spec.mean)}
    elif isinstance(spec, Superposition):
        body = {"intensity": _json_number(spec.intensity), "theta": _json_number(spec.theta)}
    elif isinstance(spec, (CoherentMixture, AtomicIntensity)):
        key = "components" if isinstance(spec, CoherentMixture) else "atoms"
        body = {key: [{"weight": _json_number(w), "intensity": _json_number(i)} for w, i in spec.atoms]}
    elif isinstance(spec, Fock):
        body = {"n": spec.n}
    else:
        body = {"m": spec.m, "base": state_to_dict(spec.base)}
    return {"type": kind, **body}


def _num(v):
    # decimals from JSON become exact fractions so that every mode sees the printed digits
    if isinstance(v, (Decimal, str)):
        return Fraction(v)
    if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
        raise ValueError(f"not a number: {v!r}")
    return v


def state_from_dict(data):
    kind = data.get("type")
    try:
        if kind == "coherent":
            return Coherent(_num(data["intensity"]))
        if kind == "thermal":
            return Thermal(_num(data["mean"]))
        if kind == "superposition":
            return Superposition(_num(data["intensity"]), _num(data.get("theta", 0)))
        if kind in ("mixture", "atomic"):
            key = "components" if kind == "mixture" else "atoms"
            pairs = tuple((_num(c["weight"]), _num(c["intensity"])) for c in data[key])
            return CoherentMixture(pairs) if kind == "mixture" else AtomicIntensity(pairs)
        if kind == "fock":
            return Fock(int(data["n"]))
        if kind == "photon_added":
            return PhotonAdded(int(data["m"]), state_from_dict(data["base"]))
    except KeyError as exc:
        raise ValueError(f"state of type {kind!r} is missing field {exc.args[0]!r}") from None
    raise ValueError(f"unknown state type {kind!r}")


def load_state(text):
    """Parse a StateSpec JSON document. Extra keys (``K``, ``label``) are ignored here."""
    return state_from_dict(json.loads(text, parse_float=Decimal))


# ---------------------------------------------------------------------------
# Generators


class _Underflow(ArithmeticError):
    pass


def _poisson_terms(mu, K, mode, e_mu=None):
    """``e^{-mu} mu^n / n!`` for n = 0..K."""
    mu = numeric.convert(mu, mode)
    t = numeric.exp(-mu, mode) if e_mu is None else e_mu
    if mode == DOUBLE and mu > 0 and t == 0.0:
        raise _Underflow
    terms = [t]
    for n in range(1, K + 1):
        t = t * mu / n
        if mode == DOUBLE and mu > 0 and t < 1e-300:
            raise _Underflow
        terms.append(t)
    return terms


def _atoms_pnd(atoms, K, mode):
    p = [numeric.zero(mode)] * (K + 1)
    for w, intensity in atoms:
        w = numeric.convert(w, mode)
        for n, t in enumerate(_poisson_terms(intensity, K, mode)):
            p[n] += w * t
    return p


def _thermal_pnd(mean, K, mode):
    nbar = numeric.convert(mean, mode)
    ratio = nbar / (1 + nbar)
    t = 1 / (1 + nbar)
    p = [t]
    for _ in range(K):
        t = t * ratio
        if mode == DOUBLE and nbar > 0 and t < 1e-300:
            raise _Underflow
        p.append(t)
    return p


def _superposition_pnd(spec, K, mode):
    mu = numeric.convert(spec.intensity, mode)
    c = numeric.cos(spec.theta, mode)
    e1 = numeric.exp(-mu, mode)
    norm = 1 + e1 * e1 * c
    base = _poisson_terms(mu, K, mode, e_mu=e1)
    return [t * (1 + c) / norm if n % 2 == 0 else t * (1 - c) / norm for n, t in enumerate(base)]


def _raw_pnd(spec, K, mode):
    if isinstance(spec, Coherent):
        return _atoms_pnd([(1, spec.intensity)], K, mode)
    if isinstance(spec, Thermal):
        return _thermal_pnd(spec.mean, K, mode)
    if isinstance(spec, Superposition):
        return _superposition_pnd(spec, K, mode)
    if isinstance(spec, (CoherentMixture, AtomicIntensity)):
        return _atoms_pnd(spec.atoms, K, mode)
    if isinstance(spec, Fock):
        return [numeric.one(mode) if n == spec.n else numeric.zero(mode) for n in range(K + 1)]
    if isinstance(spec, PhotonAdded):
        m = spec.m
        norm = photon_added_normalization(spec.base, m, mode)
        base = _raw_pnd(spec.base, max(K - m, 0), mode)
        return [numeric.zero(mode) if n < m else math.perm(n, m) * base[n - m] / norm for n in range(K + 1)]
    raise TypeError(f"unsupported state {spec!r}")


def _finite_support(spec):
    """Largest photon number with nonzero probability, or None if unbounded."""
    if isinstance(spec, Fock):
        return spec.n
    if isinstance(spec, PhotonAdded):
        top = _finite_support(spec.base)
        return None if top is None else top + spec.m
    if isinstance(spec, (Coherent, Superposition)) and spec.intensity == 0:
        return 0
    if isinstance(spec, Thermal) and spec.mean == 0:
        return 0
    if isinstance(spec, (CoherentMixture, AtomicIntensity)) and all(i == 0 for _, i in spec.atoms):
        return 0
    return None


def generate_pnd(spec, K, mode=DOUBLE, prec=None):
    """Closed-form photon number distribution ``p_0 .. p_K`` of a reference state.

    Parameters
    ----------
    spec : StateSpec
        State description.
    K : int
        Truncation index.
    mode : str
        Arithmetic mode of the result. Double mode escalates to extended
        precision when a Poisson or geometric term would underflow, so a
        positive probability never silently becomes zero.
    prec : int, optional
        Bits of working precision for the extended and exact modes. Exact
        mode evaluates the transcendental factors ``e^{-I}`` and ``cos(theta)``
        once each at this precision and keeps everything else rational.

    Returns
    -------
    PND
        Truncated-tail record; ``complete`` is set for finite-support states
        whose support fits inside ``0..K``.
    """
    if K < 0:
        raise ValueError("truncation index must be >= 0")
    if not isinstance(spec, STATE_TYPES):
        raise TypeError(f"unsupported state {spec!r}")
    numeric.check_mode(mode)
    with numeric.working_precision(prec):
        try:
            probs = _raw_pnd(spec, K, mode)
        except (_Underflow, OverflowError):
            if mode != DOUBLE:
                raise
            probs = _raw_pnd(spec, K, EXTENDED)
        top = _finite_support(spec)
        complete = top is not None and top <= K
        return PND(tuple(probs), TRUNCATED, _describe(spec), complete)


def _describe(spec):
    return json.dumps(state_to_dict(spec), sort_keys=True)


def photon_added_normalization(base, m, mode=DOUBLE):
    """Closed-form ``sum_n (n+m)!/n! p_n`` for a state with known factorial moments.

    The weight ``(j+m)!/j!`` is a degree-m polynomial in ``j``; expanding it in
    falling factorials turns the sum into a combination of the base state's
    factorial moments ``gamma_r``.
    """
    from .moments import gamma_closed_form, falling_factorial_coefficients

    coeffs = falling_factorial_coefficients(lambda j: math.perm(j + m, m), m)
    gamma = gamma_closed_form(base, m, mode).values
    with numeric.context(mode):
        norm = numeric.fsum((numeric.convert(c, mode) * g for c, g in zip(coeffs, gamma)), mode)
    if not norm > 0:
        raise ValueError("photon-added normalization is not positive")
    return norm


def photon_add(pnd, m):
    """Add ``m`` photons to a recorded distribution.

    ``p'_n = 0`` for ``n < m`` and ``p'_n = (n!/(n-m)!) p_{n-m} / N`` otherwise,
    with ``N`` the truncated sum ``sum_n (n+m)!/n! p_n``. The output record has
    truncation index ``K + m``; it is complete only if the input was.
    """
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"photon number to add must be >= 1, got {m!r}")
    if not any(p > 0 for p in pnd.probabilities):
        raise ValueError("cannot photon-add to an all-zero record")
    mode = pnd.mode
    try:
        return _photon_add(pnd, m, mode)
    except OverflowError:
        if mode != DOUBLE:
            raise
        return _photon_add(pnd.to_mode(EXTENDED), m, EXTENDED)


def _photon_add(pnd, m, mode):
    # perm(n, m) p_{n-m} with n = j + m is the weight (j+m)!/j! applied to p_j
    with numeric.context(mode):
        weights = [numeric.convert(math.perm(n + m, m), mode) for n in range(pnd.K + 1)]
        norm = numeric.fsum((w * p for w, p in zip(weights, pnd.probabilities)), mode)
        out = [numeric.zero(mode)] * m
        out += [w * p / norm for w, p in zip(weights, pnd.probabilities)]
    return PND(tuple(out), TRUNCATED, f"photon_added(m={m}) {pnd.label}".strip(), pnd.complete)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Validation:
    valid: bool
    total: float
    normalization: str
    negative_indices: tuple
    depth_unshifted: int  # deepest L^(N) the record supports, -1 if none
    depth_shifted: int  # deepest shifted matrix, -1 if none
    messages: tuple


def max_depths(K):
    """Deepest Hankel orders reachable from ``p_0 .. p_K``: (unshifted, shifted)."""
    return K // 2, (K - 1) // 2 if K >= 1 else -1


def validate(pnd, tolerance=1e-9):
    """Diagnose a record: negativity, normalization per mode, reachable depth."""
    messages = []
    negative = tuple(n for n, p in enumerate(pnd.probabilities) if p < 0)
    if negative:
        messages.append(f"negative probabilities at n = {list(negative)}")
    with numeric.context(pnd.mode):
        total = numeric.fsum(pnd.probabilities, pnd.mode)
    tol = numeric.convert(tolerance, pnd.mode) if pnd.mode != DOUBLE else tolerance
    if pnd.normalization == STRICT:
        norm_ok = abs(total - 1) <= tol
        if not norm_ok:
            messages.append(f"strict record sums to {numeric.to_float(total)!r}, not 1")
    else:
        norm_ok = total <= 1 + tol
        if not norm_ok:
            messages.append(f"sum exceeds 1: {numeric.to_float(total)!r}")
    if not any(p > 0 for p in pnd.probabilities):
        messages.append("record has no positive entry")
        norm_ok = False
    depth, depth_shifted = max_depths(pnd.K)
    return Validation(
        valid=not negative and norm_ok,
        total=numeric.to_float(total),
        normalization=pnd.normalization,
        negative_indices=negative,
        depth_unshifted=depth,
        depth_shifted=depth_shifted,
        messages=tuple(messages),
    )
