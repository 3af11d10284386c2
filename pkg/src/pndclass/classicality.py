"""Local conditions, oscillation rules and the aggregate verdict.

The tests run cheapest first:

1. zero rule: a nonvacuum record with a vanishing ``p_n``;
2. three-term condition ``x_n = q_{n-1} q_{n+1} / q_n^2 >= 1``;
3. five-term condition on consecutive ``x`` values;
4. the Poissonian dichotomy (``x`` is identically 1 or everywhere > 1);
5. oscillation rules for ``q`` (no interior maximum, at most one minimum);
6. the full Hankel hierarchy.

Every nonclassical verdict carries at least one concrete witness. A passing
record is only ever "consistent with classical up to depth N".
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from . import hankel, numeric
from .moments import GAMMA, Q, MomentSequence, mandel_q, q_from_pnd
from .numeric import EXACT
from .pnd import validate

NONCLASSICAL = "nonclassical"
CONSISTENT = "consistent"
VACUUM = "vacuum"

PASS = "pass"
SATURATED = "saturated"
FAIL = "fail"
NOT_APPLICABLE = "n/a"

POISSONIAN = "poissonian-throughout"
SUPERPOISSONIAN = "superpoissonian-throughout"
MIXED = "mixed-violation"
UNDETERMINED = "undetermined"

# hierarchy depth used when the caller does not ask for one
DEFAULT_DEPTH_CAP = 12


# ---------------------------------------------------------------------------
# zero rule


@dataclass(frozen=True)
class ZeroRuleOutcome:
    status: str  # "vacuum", "nonclassical", "passed" or "inconclusive"
    zeros: tuple
    witnesses: tuple
    boundary_zero: bool
    message: str


def zero_rule(pnd, tolerance=0):
    """Apply the zero-probability rule.

    The vacuum is recognised first and is classical. Otherwise any zero at an
    index below ``K`` proves nonclassicality. A zero at ``K`` alone is
    inconclusive because it may be a truncation artefact, unless the record is
    complete (generated from a finite-support state), in which case it counts.
    """
    p = pnd.probabilities
    zeros = tuple(n for n, v in enumerate(p) if abs(v) <= tolerance)
    rest_zero = all(n in zeros for n in range(1, len(p)))
    if p[0] >= 1 - tolerance and rest_zero:
        return ZeroRuleOutcome(VACUUM, zeros, (), False, "vacuum state, classical")
    if len(zeros) == len(p):
        raise ValueError("record has no positive entry")
    K = pnd.K
    witnesses = tuple(n for n in zeros if n < K or pnd.complete)
    boundary = K in zeros and not pnd.complete
    if witnesses:
        msg = f"p_n = 0 at n = {list(witnesses)} in a nonvacuum record"
        return ZeroRuleOutcome(NONCLASSICAL, zeros, witnesses, boundary, msg)
    if boundary:
        return ZeroRuleOutcome("inconclusive", zeros, (), True, f"p_{K} = 0 at the truncation edge; ignored")
    return ZeroRuleOutcome("passed", zeros, (), False, "no vanishing probabilities")


# ---------------------------------------------------------------------------
# three- and five-term conditions


@dataclass(frozen=True)
class XSequence:
    """``x_1 .. x_{K-1}``; ``None`` marks sites where ``q_n = 0``."""

    values: tuple
    mode: str

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n):
        if n < 1 or n > len(self.values):
            raise IndexError(f"x_{n} is outside 1..{len(self.values)}")
        return self.values[n - 1]

    def indices(self):
        return range(1, len(self.values) + 1)

    def defined(self):
        return [(n, x) for n, x in zip(self.indices(), self.values) if x is not None]


def x_sequence(q):
    if q.kind != Q:
        raise ValueError("x_n is defined on a q sequence")
    v = q.values
    mode = q.mode
    with numeric.context(mode):
        xs = tuple(v[n - 1] * v[n + 1] / (v[n] * v[n]) if v[n] > 0 else None for n in range(1, len(v) - 1))
    return XSequence(xs, mode)


def _x_status(x, tol):
    if x is None:
        return NOT_APPLICABLE
    # x - 1 stays in the data's mode; 1 - 1e-30 would round to 1.0 in float
    d = x - 1
    if d < -tol:
        return FAIL
    if d <= tol:
        return SATURATED
    return PASS


def _tol(mode, tolerance):
    return numeric.default_tolerance(mode) if tolerance is None else tolerance


def local3(q, tolerance=None):
    """Three-term condition ``q_n^2 <= q_{n-1} q_{n+1}`` for ``n = 1 .. K-1``.

    Returns ``(x, failures)`` with ``failures`` the list of ``(n, x_n)`` where
    ``x_n < 1 - tolerance``. Each failure witnesses nonclassicality.
    """
    x = x_sequence(q)
    tol = _tol(x.mode, tolerance)
    if any(xn is None for xn in x.values):
        raise ValueError("q_n = 0 inside the tested range; run the zero rule first")
    return x, [(n, xn) for n, xn in x.defined() if _x_status(xn, tol) == FAIL]


@dataclass(frozen=True)
class Local5Entry:
    n: int
    status: str
    slack: float | None  # lhs - rhs


def local5(x, tolerance=None):
    """Five-term condition ``(x_{n-1}-1)(x_{n+1}-1) >= ((x_n-1)/x_n)^2``.

    Evaluated for every ``n`` whose neighbours are defined. Sites where one of
    the three ``x`` values already fails the three-term test are reported as
    not applicable: the inequality is only equivalent to the 3x3 minor when
    all three are at least 1. Each ``x`` is treated as uncertain by
    ``tolerance`` (plus rounding), propagated to first order into the slack.
    """
    tol = _tol(x.mode, tolerance)
    delta = 64 * numeric.unit_roundoff(x.mode)
    out = []
    with numeric.context(x.mode):
        for n in range(2, len(x)):
            trio = (x[n - 1], x[n], x[n + 1])
            if any(v is None for v in trio) or any(_x_status(v, tol) == FAIL for v in trio):
                out.append(Local5Entry(n, NOT_APPLICABLE, None))
                continue
            da, db, dc = (v - 1 for v in trio)
            lhs = da * dc
            rhs = (db / trio[1]) ** 2
            slack = lhs - rhs
            spread = abs(da) + abs(dc) + 2 * abs(db)
            allowance = (tol + delta) * (spread + max(abs(lhs), rhs))
            if slack < -allowance:
                status = FAIL
            elif slack <= allowance:
                status = SATURATED
            else:
                status = PASS
            out.append(Local5Entry(n, status, numeric.to_float(slack)))
    return out


@dataclass(frozen=True)
class Dichotomy:
    kind: str
    saturated: tuple  # sites with |x_n - 1| <= tol
    junctions: tuple  # (saturated site, strictly superpoissonian neighbour)
    confirmed: tuple  # junction neighbours where local5 fails


def poisson_dichotomy(x, tolerance=None, local5_entries=None):
    """Classify ``x`` as Poissonian throughout, super-Poissonian throughout, or mixed.

    A classical record cannot mix the two. At a junction ``x_{n0} = 1``,
    ``x_{n0+1} > 1`` the five-term condition fails at ``n0 + 1`` (similarly
    for ``n0 - 1``); ``confirmed`` lists the junction sites where it does.
    """
    tol = _tol(x.mode, tolerance)
    statuses = {n: _x_status(v, tol) for n, v in x.defined()}
    if not statuses or FAIL in statuses.values():
        return Dichotomy(UNDETERMINED, (), (), ())
    saturated = tuple(n for n, s in statuses.items() if s == SATURATED)
    if len(saturated) == len(statuses):
        return Dichotomy(POISSONIAN, saturated, (), ())
    if not saturated:
        return Dichotomy(SUPERPOISSONIAN, (), (), ())
    junctions = tuple(
        (n0, m) for n0 in saturated for m in (n0 - 1, n0 + 1) if statuses.get(m) == PASS
    )
    if local5_entries is None:
        local5_entries = local5(x, tolerance)
    failing = {e.n for e in local5_entries if e.status == FAIL}
    confirmed = tuple(sorted({m for _, m in junctions if m in failing}))
    return Dichotomy(MIXED, saturated, junctions, confirmed)


# ---------------------------------------------------------------------------
# oscillation rules


def _signs(values, tol):
    """Difference signs ``+1, 0, -1``; ties are relative to the larger neighbour."""
    out = []
    for a, b in zip(values, values[1:]):
        d = b - a
        if abs(d) <= tol * max(abs(a), abs(b)):
            out.append(0)
        else:
            out.append(1 if d > 0 else -1)
    return out


def _turning_points(signs):
    """Interior extrema as ``(first, last)`` index ranges, with ties merged.

    A run of ties between an increase and a decrease is a flat maximum.
    """
    maxima, minima = [], []
    last_dir, last_change = 0, None
    for i, s in enumerate(signs):
        if s == 0:
            continue
        if last_dir and s != last_dir:
            span = (last_change + 1, i)
            (maxima if last_dir > 0 else minima).append(span)
        last_dir, last_change = s, i
    return maxima, minima


def _plateaus(signs):
    """Runs of at least three equal entries as ``(first, last)`` index ranges."""
    runs, start = [], None
    for i, s in enumerate(signs + [1]):
        if s == 0 and start is None:
            start = i
        elif s != 0 and start is not None:
            if i - start >= 2:
                runs.append((start, i))
            start = None
    return runs


@dataclass(frozen=True)
class PeakCheck:
    n: int
    ratio: float  # (p_n / p_{n-1}) (p_n / p_{n+1})
    bound: float  # 1 + 1/n
    ok: bool


@dataclass(frozen=True)
class OscillationReport:
    pattern: str  # nondecreasing, nonincreasing, constant, single-minimum, oscillating
    q_maxima: tuple
    q_minima: tuple
    plateaus: tuple
    p_maxima: tuple  # PeakCheck entries
    p_periods: tuple
    witnesses: tuple  # (n, reason)


def oscillation_analysis(q, p=None, tolerance=None):
    """Shape of ``q`` and ``p`` against the classical oscillation rules.

    ``q`` may not have an interior local maximum and has at most one local
    minimum. Classical-consistent data falls in one of the patterns
    nondecreasing, nonincreasing, constant or single-minimum. Local maxima of
    ``p`` are listed with the bound ``p_n^2 <= (1 + 1/n) p_{n-1} p_{n+1}``
    and the spacing between successive maxima.

    Plateaus of three or more equal ``q`` values in a non-constant sequence are
    reported but not counted as witnesses here: they imply a saturated
    ``x_n`` next to a strict one, which the five-term test decides.
    """
    if len(q) < 3:
        raise ValueError("oscillation analysis needs at least three q values")
    tol = _tol(q.mode, tolerance)
    signs = _signs(q.values, tol)
    maxima, minima = _turning_points(signs)
    nonzero = {s for s in signs if s}
    if not nonzero:
        pattern = "constant"
    elif nonzero == {1}:
        pattern = "nondecreasing"
    elif nonzero == {-1}:
        pattern = "nonincreasing"
    elif not maxima and len(minima) == 1:
        pattern = "single-minimum"
    else:
        pattern = "oscillating"
    plateaus = _plateaus(signs) if nonzero else []
    witnesses = [(a, "local maximum of q") for a, _ in maxima]
    if len(minima) >= 2:
        witnesses.append((minima[1][0], f"{len(minima)} local minima of q"))

    peaks, periods = [], []
    if p is not None:
        pv = p.probabilities
        pmax, _ = _turning_points(_signs(pv, tol))
        with numeric.context(p.mode):
            for a, b in pmax:
                if a != b or pv[a - 1] <= 0 or pv[a + 1] <= 0:
                    continue
                ratio = numeric.to_float(pv[a] / pv[a - 1] * pv[a] / pv[a + 1])
                bound = 1 + 1 / a
                peaks.append(PeakCheck(a, ratio, bound, ratio <= bound * (1 + tol)))
        periods = [b.n - a.n for a, b in zip(peaks, peaks[1:])]
    return OscillationReport(
        pattern, tuple(maxima), tuple(minima), tuple(plateaus), tuple(peaks), tuple(periods), tuple(witnesses)
    )


# ---------------------------------------------------------------------------
# depth bookkeeping


def local_depth(n, terms):
    """Hankel order whose matrices contain the block behind a local test at ``n``.

    ``terms`` is 3 for ``x_n`` (a 2x2 block on ``q_{n-1}..q_{n+1}``) or 5 for
    the five-term test (3x3 on ``q_{n-2}..q_{n+2}``). Returns
    ``(depth, "unshifted" | "shifted")``.
    """
    half = (terms - 1) // 2
    lo = n - half
    if lo % 2 == 0:
        return lo // 2 + half, "unshifted"
    return (lo - 1) // 2 + half, "shifted"


# ---------------------------------------------------------------------------
# aggregate report


def _num(x):
    if x is None:
        return None
    f = numeric.to_float(x)
    return f if math.isfinite(f) else str(f)


def _json_ready(obj):
    return json.loads(json.dumps(obj))


@dataclass(frozen=True)
class ClassicalityReport:
    """Outcome of :func:`analyze`; every field is JSON-native."""

    verdict: str
    depth: int | None
    depth_shifted: int | None
    mode: str
    K: int
    witnesses: list
    zero_rule: dict
    local3: list = field(default_factory=list)
    local5: list = field(default_factory=list)
    dichotomy: dict | None = None
    oscillation: dict | None = None
    hierarchy: list = field(default_factory=list)
    gamma_hierarchy: list | None = None
    mandel_q: dict | None = None
    notes: list = field(default_factory=list)
    tests_run: list = field(default_factory=list)
    label: str = ""

    @property
    def nonclassical(self):
        return self.verdict == NONCLASSICAL

    @property
    def vacuum(self):
        return self.verdict == VACUUM

    def to_dict(self):
        return _json_ready(asdict(self))

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _level_dict(level, names):
    def one(v):
        if v is None:
            return None
        return {
            "status": v.status,
            "min_eigenvalue": _num(v.min_eigenvalue),
            "failing_minor": v.failing_minor,
            "rank": v.rank,
            "mode": v.mode,
        }

    return {
        "depth": level.depth,
        names[0]: {"det": _num(level.det), **(one(level.verdict) or {})},
        names[1]: None if level.verdict_shifted is None else {"det": _num(level.det_shifted), **one(level.verdict_shifted)},
    }


def _run_hierarchy(moments, N, tol, names):
    levels = hankel.determinant_hierarchy(moments, N, tolerance=tol)
    rows = [_level_dict(lv, names) for lv in levels]
    failure = hankel.first_failure(levels)
    borderline = any(
        v is not None and v.status == hankel.BORDERLINE for lv in levels for v in (lv.verdict, lv.verdict_shifted)
    )
    return rows, failure, borderline, levels


def _depth_for(length, depth):
    reach = (length - 1) // 2
    if depth is None:
        return min(reach, DEFAULT_DEPTH_CAP)
    if depth > reach:
        raise ValueError(f"depth {depth} needs {2 * depth + 1} entries; the record supports at most {reach}")
    return depth


def analyze(pnd, depth=None, mode=None, tolerance=None, exhaustive=False, gamma=None, zero_tolerance=0):
    """Run every classicality test on a PND and aggregate the result.

    Parameters
    ----------
    pnd : PND
    depth : int, optional
        Deepest Hankel order. Defaults to the deepest reachable one, capped
        at ``DEFAULT_DEPTH_CAP``; an explicit value beyond the data raises.
    mode : str, optional
        Arithmetic mode; the record is converted if it differs.
    tolerance : float, optional
        Relative tolerance for the local tests and PSD checks; defaults to the
        record's mode (0 in exact mode).
    exhaustive : bool
        Keep going after the first witness.
    gamma : MomentSequence, optional
        Factorial moments. Adds the Mandel parameter and the ``M`` hierarchy;
        their violations count as witnesses only when ``gamma.tail_exact``.
    zero_tolerance : float
        Absolute threshold below which ``p_n`` counts as zero.
    """
    check = validate(pnd)
    if not check.valid:
        raise ValueError("invalid PND: " + "; ".join(check.messages))
    if mode is not None:
        pnd = pnd.to_mode(numeric.check_mode(mode))
    mode = pnd.mode
    tol = _tol(mode, tolerance)
    witnesses, notes, run = [], [], []

    def finish(verdict, depth_reached=None, depth_shifted=None, **parts):
        return ClassicalityReport(
            verdict=verdict,
            depth=depth_reached,
            depth_shifted=depth_shifted,
            mode=mode,
            K=pnd.K,
            witnesses=_json_ready(witnesses),
            zero_rule=zr_dict,
            notes=notes,
            tests_run=run,
            label=pnd.label,
            **{k: _json_ready(v) for k, v in parts.items()},
        )

    def stop():
        return witnesses and not exhaustive

    zr = zero_rule(pnd, zero_tolerance)
    run.append("zero_rule")
    zr_dict = {
        "status": zr.status,
        "zeros": list(zr.zeros),
        "witnesses": list(zr.witnesses),
        "boundary_zero": zr.boundary_zero,
        "message": zr.message,
    }
    if zr.status == VACUUM:
        notes.append("vacuum state, classical; remaining tests skipped")
        return finish(VACUUM)
    for n in zr.witnesses:
        witnesses.append({"test": "zero_rule", "index": n, "detail": f"p_{n} = 0"})
    if zr.boundary_zero:
        notes.append(f"p_{pnd.K} = 0 at the truncation edge is inconclusive; the record is analysed without it")
        pnd = pnd.truncate(pnd.K - 1)
    parts = {}
    if stop():
        return finish(NONCLASSICAL, **parts)

    q = q_from_pnd(pnd)
    x = x_sequence(q)
    run.append("local3")
    parts["local3"] = [{"n": n, "x": _num(v), "status": _x_status(v, tol)} for n, v in zip(x.indices(), x.values)]
    for n, v in x.defined():
        if _x_status(v, tol) == FAIL:
            witnesses.append({"test": "local3", "index": n, "detail": f"x_{n} = {numeric.to_float(v):.12g} < 1"})
    if stop():
        return finish(NONCLASSICAL, **parts)

    run.append("local5")
    l5 = local5(x, tol)
    parts["local5"] = [{"n": e.n, "status": e.status, "slack": e.slack} for e in l5]
    for e in l5:
        if e.status == FAIL:
            witnesses.append({"test": "local5", "index": e.n, "detail": f"five-term slack {e.slack:.6g} < 0"})
    if stop():
        return finish(NONCLASSICAL, **parts)

    run.append("dichotomy")
    dich = poisson_dichotomy(x, tol, l5)
    parts["dichotomy"] = {
        "kind": dich.kind,
        "saturated": list(dich.saturated),
        "junctions": [list(j) for j in dich.junctions],
        "confirmed": list(dich.confirmed),
    }
    if dich.kind == MIXED:
        if dich.confirmed:
            notes.append(f"x mixes saturated and strict sites; five-term test confirms at n = {list(dich.confirmed)}")
        else:
            notes.append("x mixes saturated and strict sites without a five-term confirmation; suspicious")
    saturated_float = [n for n in dich.saturated if x[n] != 1]
    if saturated_float and mode != EXACT:
        notes.append(f"borderline: |x_n - 1| <= {tol:g} at n = {saturated_float}")

    if len(q) >= 3:
        run.append("oscillation")
        osc = oscillation_analysis(q, pnd, tol)
        parts["oscillation"] = {
            "pattern": osc.pattern,
            "q_maxima": [list(m) for m in osc.q_maxima],
            "q_minima": [list(m) for m in osc.q_minima],
            "plateaus": [list(m) for m in osc.plateaus],
            "p_maxima": [asdict(pk) for pk in osc.p_maxima],
            "p_periods": list(osc.p_periods),
        }
        for n, reason in osc.witnesses:
            witnesses.append({"test": "oscillation", "index": n, "detail": reason})
        if stop():
            return finish(NONCLASSICAL, **parts)

    run.append("hierarchy")
    N = _depth_for(len(q), depth)
    rows, failure, borderline, levels = _run_hierarchy(q, N, tol, ("L", "L~"))
    parts["hierarchy"] = rows
    if failure is not None:
        d, which = failure
        witnesses.append({"test": "hierarchy", "index": d, "detail": f"{'L' if which == 'unshifted' else 'L~'} not PSD at depth {d}"})
    if borderline:
        notes.append("some Hankel checks are borderline at the working tolerance")
    if N < (len(q) - 1) // 2 and depth is None:
        notes.append(f"hierarchy capped at depth {N}; pass depth to go further")
    depth_shifted = max((lv.depth for lv in levels if lv.verdict_shifted is not None), default=None)

    if gamma is not None:
        _gamma_side(gamma, depth, tol, parts, witnesses, notes, run)

    if witnesses:
        return finish(NONCLASSICAL, **parts)
    return finish(CONSISTENT, N, depth_shifted, **parts)


def _gamma_side(gamma, depth, tol, parts, witnesses, notes, run):
    if gamma.kind != GAMMA:
        raise ValueError("gamma must be a factorial-moment sequence")
    definitive = gamma.tail_exact
    if not definitive:
        notes.append("factorial moments come from truncated data; gamma-side results are not definitive")
    if len(gamma) >= 3 and gamma.values[1] != 0:
        run.append("mandel_q")
        mq = mandel_q(gamma)
        parts["mandel_q"] = {"value": _num(mq.value), "nonclassical": mq.nonclassical, "definitive": mq.definitive}
        if mq.nonclassical and definitive:
            witnesses.append({"test": "mandel_q", "index": 2, "detail": f"Q = {mq.value:.6g} < 0"})
    if len(gamma) >= 2:
        run.append("gamma_hierarchy")
        N = _depth_for(len(gamma), None if depth is None else min(depth, (len(gamma) - 1) // 2))
        rows, failure, _, _ = _run_hierarchy(gamma, N, tol, ("M", "M~"))
        parts["gamma_hierarchy"] = rows
        if failure is not None and definitive:
            d, which = failure
            witnesses.append({"test": "gamma_hierarchy", "index": d, "detail": f"{'M' if which == 'unshifted' else 'M~'} not PSD at depth {d}"})


def pnd_from_q(values, mode=EXACT, label="q-values"):
    """PND record from a list of q-values (``p_n = q_n / n!``)."""
    from .pnd import PND

    q = MomentSequence(Q, numeric.convert_all(values, mode))
    return PND.from_q(q.values, mode=mode, label=label)


__all__ = [
    "CONSISTENT",
    "DEFAULT_DEPTH_CAP",
    "MIXED",
    "NONCLASSICAL",
    "POISSONIAN",
    "SUPERPOISSONIAN",
    "VACUUM",
    "ClassicalityReport",
    "Dichotomy",
    "Local5Entry",
    "OscillationReport",
    "XSequence",
    "ZeroRuleOutcome",
    "analyze",
    "local3",
    "local5",
    "local_depth",
    "oscillation_analysis",
    "poisson_dichotomy",
    "x_sequence",
    "zero_rule",
]
