"""Weight functions on the real line: masses, classes, and ratio limits.

A weight is a positive locally integrable function; its mass over the
symmetric window [-T, T] drives every truncated mean in the toolkit.  The
class flags reported here are, in order of strength:

* ``unbounded_mass``      positive infimum and window mass growing without
                          bound (the base admissibility class),
* ``bounded``             additionally a finite supremum,
* ``translation_compatible``
                          finite pointwise translation-ratio limits on both
                          tails and finite enlarged-window mass ratios,
* ``continuous_translation_compatible``
                          continuous with finite pointwise ratio limits,
* ``mass_ratio_limited``  finite enlarged-window mass ratios alone.

All limits are estimated along a geometric truncation schedule and verdicts
are only emitted when the estimates stabilize; anything else raises
InconclusiveLimit rather than guessing.  Masses for the exponential and
power kinds are evaluated in log space so that ratio limits stay exact far
beyond floating-point overflow.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, polyfactor
from .errors import InconclusiveLimit, NonPositiveT
from .limits import MeanEstimate, Schedule, run_schedule
from .quadrature import adaptive_integral

_EMPTY = np.empty(0, dtype=np.float64)
RATIO_CAP = 1e6
INF_FLOOR = 1e-9

KIND_CODES = {"constant": 0, "power": 1, "polynomial": 2, "exp_abs": 3, "tabulated": 4}


def _logexpm1(x):
    """log(e^x - 1) without overflow (x > 0)."""
    if x > 0.69:
        return x + math.log1p(-math.exp(-x))
    return math.log(math.expm1(x))


class Weight:
    """A positive weight given symbolically, with exact window masses.

    Instances are immutable after construction (the tabulated kind builds
    its cumulative-mass table up front), so they are safe to share across
    threads.
    """

    def __init__(self, kind, params, grid=None, vals=None):
        if kind not in KIND_CODES:
            raise ValueError(f"unknown weight kind {kind!r}")
        self.kind = kind
        self.code = KIND_CODES[kind]
        self.params = np.asarray(params, dtype=np.float64)
        self.grid = _EMPTY if grid is None else np.asarray(grid, dtype=np.float64)
        self.vals = _EMPTY if vals is None else np.asarray(vals, dtype=np.float64)
        self._validate()
        if kind == "tabulated":
            # memoized per-segment masses; immutable, safe for shared reads
            self._seg = 0.5 * (self.vals[1:] + self.vals[:-1]) * np.diff(self.grid)

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, c):
        return cls("constant", [c])

    @classmethod
    def power(cls, exponent, scale=1.0):
        """scale * (1 + |t|)**exponent with exponent >= 0."""
        return cls("power", [scale, exponent])

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", coeffs)

    @classmethod
    def exp_abs(cls, c=1.0):
        """c * e^{|t|}."""
        return cls("exp_abs", [c])

    @classmethod
    def tabulated(cls, grid, values):
        """Linear interpolation on the grid, constant beyond its ends."""
        return cls("tabulated", [], grid=grid, vals=values)

    def _validate(self):
        k = self.kind
        if k == "constant":
            if self.params[0] <= 0:
                raise ValueError("constant weight must be positive")
        elif k == "power":
            if self.params[0] <= 0 or self.params[1] < 0:
                raise ValueError("power weight needs scale > 0 and exponent >= 0")
        elif k == "polynomial":
            c = np.trim_zeros(self.params, "b")
            if len(c) == 0 or (len(c) == 1 and c[0] <= 0):
                raise ValueError("polynomial weight must be positive")
            if len(c) > 1 and not polyfactor.is_strictly_positive(c):
                raise ValueError("polynomial weight must be positive on the line")
        elif k == "exp_abs":
            if self.params[0] <= 0:
                raise ValueError("exponential weight needs c > 0")
        elif k == "tabulated":
            if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
                raise ValueError("tabulated grid must be increasing with >= 2 knots")
            if self.vals.shape != self.grid.shape or np.any(self.vals <= 0):
                raise ValueError("tabulated values must all be positive")

    # -- evaluation --------------------------------------------------------

    def eval(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return kernels.weight_eval(self.code, self.params, self.grid, self.vals, t)

    def log_eval(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return kernels.weight_log_eval(self.code, self.params, self.grid, self.vals, t)

    @property
    def continuous(self):
        return True  # every built-in kind is continuous

    def data_span(self):
        """Support of real data for the tabulated kind, else None."""
        if self.kind == "tabulated":
            return float(self.grid[0]), float(self.grid[-1])
        return None

    # -- masses ------------------------------------------------------------

    def _antiderivative(self, t):
        k = self.kind
        if k == "constant":
            return self.params[0] * t
        if k == "power":
            scale, n = self.params
            return np.sign(t) * scale * ((1.0 + abs(t)) ** (n + 1.0) - 1.0) / (n + 1.0)
        if k == "polynomial":
            anti = np.concatenate([[0.0], self.params / np.arange(1, len(self.params) + 1)])
            return float(polyfactor.polyval(anti, t))
        if k == "exp_abs":
            return self.params[0] * np.sign(t) * math.expm1(abs(t))
        raise AssertionError

    def _interp_val(self, x):
        g, v = self.grid, self.vals
        if x <= g[0]:
            return float(v[0])
        if x >= g[-1]:
            return float(v[-1])
        i = int(np.searchsorted(g, x, side="right")) - 1
        return float(v[i] + (v[i + 1] - v[i]) * (x - g[i]) / (g[i + 1] - g[i]))

    def _tabulated_interval(self, a, b):
        # direct positive summation between the endpoints; differencing the
        # cumulative table would cancel catastrophically for steep weights
        g, v = self.grid, self.vals
        if b <= g[0]:
            return v[0] * (b - a)
        if a >= g[-1]:
            return v[-1] * (b - a)
        total = 0.0
        if a < g[0]:
            total += v[0] * (g[0] - a)
            a = float(g[0])
        tail = 0.0
        if b > g[-1]:
            tail = v[-1] * (b - g[-1])
            b = float(g[-1])
        ia = int(np.searchsorted(g, a, side="right")) - 1
        ib = int(np.searchsorted(g, b, side="right")) - 1
        ib = min(ib, len(g) - 2)
        if ia == ib:
            return total + tail + 0.5 * (self._interp_val(a) + self._interp_val(b)) * (
                b - a
            )
        total += 0.5 * (self._interp_val(a) + v[ia + 1]) * (g[ia + 1] - a)
        total += float(np.sum(self._seg[ia + 1 : ib]))
        total += 0.5 * (v[ib] + self._interp_val(b)) * (b - g[ib])
        return total + tail

    def interval_mass(self, a, b):
        """Exact integral of the weight over [a, b] (closed form)."""
        if self.kind == "tabulated":
            return self._tabulated_interval(float(a), float(b))
        return self._antiderivative(b) - self._antiderivative(a)

    def _log_piece_power(self, a, b):
        # log integral over [a, b] with 0 <= a < b
        scale, n = self.params
        la, lb = math.log1p(a), math.log1p(b)
        hi = (n + 1.0) * lb
        return (
            math.log(scale / (n + 1.0))
            + hi
            + math.log1p(-math.exp((n + 1.0) * la - hi))
        )

    def log_interval_mass(self, a, b):
        """log of interval_mass(a, b), overflow-safe for the growing kinds."""
        if a >= b:
            raise ValueError("empty interval")
        k = self.kind
        if k == "exp_abs":
            c = self.params[0]
            if a >= 0:
                return math.log(c) + a + _logexpm1(b - a)
            if b <= 0:
                return math.log(c) - b + _logexpm1(b - a)
            return math.log(c) + np.logaddexp(_logexpm1(-a), _logexpm1(b))
        if k == "power":
            if a >= 0:
                return self._log_piece_power(a, b)
            if b <= 0:
                return self._log_piece_power(-b, -a)
            return np.logaddexp(
                self._log_piece_power(0.0, -a), self._log_piece_power(0.0, b)
            )
        return math.log(self.interval_mass(a, b))

    def mass(self, T):
        if T <= 0:
            raise NonPositiveT(f"window radius must be positive, got {T!r}")
        return self.interval_mass(-T, T)

    def log_mass(self, T):
        if T <= 0:
            raise NonPositiveT(f"window radius must be positive, got {T!r}")
        return float(self.log_interval_mass(-T, T))

    # -- serialization -----------------------------------------------------

    def to_json(self):
        k = self.kind
        if k == "constant":
            return {"kind": k, "c": float(self.params[0])}
        if k == "power":
            return {"kind": k, "N": float(self.params[1]), "scale": float(self.params[0])}
        if k == "polynomial":
            return {"kind": k, "coeffs": [float(c) for c in self.params]}
        if k == "exp_abs":
            return {"kind": k, "c": float(self.params[0])}
        return {
            "kind": k,
            "grid": [float(x) for x in self.grid],
            "values": [float(x) for x in self.vals],
        }

    @classmethod
    def from_json(cls, spec):
        kind = spec.get("kind")
        if kind == "constant":
            return cls.constant(spec["c"])
        if kind == "power":
            return cls.power(spec["N"], spec.get("scale", 1.0))
        if kind == "polynomial":
            return cls.polynomial(spec["coeffs"])
        if kind == "exp_abs":
            return cls.exp_abs(spec.get("c", 1.0))
        if kind == "tabulated":
            return cls.tabulated(spec["grid"], spec["values"])
        raise ValueError(f"unknown weight kind {kind!r}")

    def key(self):
        """Hashable identity used for memoizing per-weight verdicts."""
        return (
            self.kind,
            tuple(float(p) for p in self.params),
            self.grid.tobytes(),
            self.vals.tobytes(),
        )

    def __repr__(self):
        return f"Weight({self.to_json()})"


def weight_mass(w, T, tol=1e-9, method="closed"):
    """Mass of ``w`` over [-T, T].

    ``closed`` uses the exact antiderivative; ``quadrature`` integrates
    adaptively to absolute tolerance ``tol`` (floored at machine-relative
    accuracy of the result); ``check`` runs both and insists they agree.
    """
    if T <= 0:
        raise NonPositiveT(f"window radius must be positive, got {T!r}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    closed = w.mass(T)
    if method == "closed":
        return closed
    quad = adaptive_integral(w.eval, -T, T, tol=max(tol, abs(closed) * 1e-13))
    if method == "quadrature":
        return quad
    if method == "check":
        if abs(quad - closed) > max(tol, abs(closed) * 1e-10) * 10.0:
            raise InconclusiveLimit(
                f"closed-form and quadrature masses disagree: {closed!r} vs {quad!r}"
            )
        return closed
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# ratio limits


def _ratio_verdict(values, schedule, label):
    """Classify a positive ratio trace as finite-limit or infinite."""
    if schedule.stabilized(values):
        return "finite", float(values[-1])
    tail = values[-4:]
    if len(tail) >= 3 and all(a < b for a, b in zip(tail, tail[1:])) and tail[-1] > RATIO_CAP:
        return "infinite", math.inf
    if len(tail) >= 4 and all(a > b for a, b in zip(tail, tail[1:])):
        # strictly decreasing and positive: convergent, bounded by the last entry
        return "finite", float(values[-1])
    diffs = np.diff(np.asarray(values[-6:], dtype=float))
    if (
        diffs.size >= 3
        and np.all(diffs != 0)
        and np.all(np.sign(diffs) == np.sign(diffs[0]))
        and np.all(np.abs(diffs[1:]) <= 0.8 * np.abs(diffs[:-1]))
    ):
        # increments shrink geometrically: the series converges
        return "finite", float(values[-1])
    raise InconclusiveLimit(f"{label}: ratios did not stabilize within the schedule")


def mass_ratio_limit(mu, nu, schedule=None):
    """Limit of nu(Q_T) / mu(Q_T) along the schedule (the mean scaling factor).

    Raises DivergentRatio when the ratio grows monotonically past 1e6 and
    InconclusiveLimit when it neither stabilizes nor diverges.
    """
    schedule = schedule or Schedule()
    est = run_schedule(
        schedule,
        lambda T: math.exp(min(nu.log_mass(T) - mu.log_mass(T), 709.0)),
        what="mass ratio",
        divergence_cap=RATIO_CAP,
    )
    return est


def enlarged_mass_ratio(w, tau, schedule=None):
    """Limit of w(Q_{T+tau}) / w(Q_T); finite for the mass-ratio-limited class."""
    schedule = schedule or Schedule()
    trace = []
    values = []
    for T in schedule.radii():
        if T + tau <= 0:
            continue
        r = math.exp(min(w.log_mass(T + tau) - w.log_mass(T), 709.0))
        trace.append((float(T), r))
        values.append(r)
        if schedule.stabilized(values):
            return MeanEstimate(values[-1], trace, True, schedule.rtol)
    return MeanEstimate(values[-1] if values else math.nan, trace, False, schedule.rtol)


def translated_mass_ratio(w, tau, schedule=None):
    """Limit of w(Q_T + tau) / w(Q_T) over shifted windows [-T+tau, T+tau]."""
    schedule = schedule or Schedule()
    est = run_schedule(
        schedule,
        lambda T: math.exp(
            min(w.log_interval_mass(-T + tau, T + tau) - w.log_mass(T), 709.0)
        ),
        what="translated mass ratio",
    )
    return est


def mass_ratio_sup(mu, nu, schedule=None):
    """Running sup of nu(Q_T)/mu(Q_T) over T > 0; (finite?, estimate, trace)."""
    schedule = schedule or Schedule()
    radii = np.concatenate([[schedule.t0 / 8, schedule.t0 / 4, schedule.t0 / 2], schedule.radii()])
    sups, trace = [], []
    cur = 0.0
    for T in radii:
        cur = max(cur, math.exp(min(nu.log_mass(T) - mu.log_mass(T), 709.0)))
        sups.append(cur)
        trace.append((float(T), cur))
    if schedule.stabilized(sups):
        return True, float(sups[-1]), trace
    tail = sups[-4:]
    if all(a < b for a, b in zip(tail, tail[1:])) and tail[-1] > RATIO_CAP:
        return False, math.inf, trace
    raise InconclusiveLimit("sup of the mass ratio did not stabilize")


def mass_ratio_inf(mu, nu, schedule=None):
    """Running inf of nu(Q_T)/mu(Q_T) over T > 0; (positive?, estimate, trace)."""
    schedule = schedule or Schedule()
    radii = np.concatenate([[schedule.t0 / 8, schedule.t0 / 4, schedule.t0 / 2], schedule.radii()])
    infs, trace = [], []
    cur = math.inf
    for T in radii:
        cur = min(cur, math.exp(min(nu.log_mass(T) - mu.log_mass(T), 709.0)))
        infs.append(cur)
        trace.append((float(T), cur))
    if infs[-1] <= INF_FLOOR:
        return False, float(infs[-1]), trace
    if schedule.stabilized(infs):
        return True, float(infs[-1]), trace
    raise InconclusiveLimit("inf of the mass ratio did not stabilize")


def equivalent_weights(mu, nu, schedule=None, dense_span=20.0, dense_step=0.05):
    """True when mu/nu is bounded above and below away from zero.

    Both weights are assumed admissible (construction guarantees it for the
    built-in kinds).  The pointwise ratio is sampled densely on a window and
    at the schedule radii on both tails; the verdict needs the running
    extremes to stabilize.
    """
    schedule = schedule or Schedule()
    window = np.arange(-dense_span, dense_span + dense_step, dense_step)
    base = np.exp(mu.log_eval(window) - nu.log_eval(window))
    sups = [float(base.max())]
    infs = [float(base.min())]
    for T in schedule.radii():
        pts = np.array([-T, T])
        r = np.exp(mu.log_eval(pts) - nu.log_eval(pts))
        sups.append(max(sups[-1], float(r.max())))
        infs.append(min(infs[-1], float(r.min())))
    if infs[-1] <= INF_FLOOR:
        return False
    tail = sups[-4:]
    if all(a < b for a, b in zip(tail, tail[1:])) and tail[-1] > RATIO_CAP:
        return False
    if schedule.stabilized(sups) and schedule.stabilized(infs):
        return True
    raise InconclusiveLimit("pointwise weight ratio extremes did not stabilize")


# ---------------------------------------------------------------------------
# classification


@dataclass
class WeightClassReport:
    """Verdicts for the weight-class hierarchy with full numeric evidence."""

    unbounded_mass: bool
    bounded: bool
    translation_compatible: bool
    continuous_translation_compatible: bool
    mass_ratio_limited: bool
    inf_estimate: float
    sup_estimate: float
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        # class inclusions that every report must respect
        if self.bounded and not self.unbounded_mass:
            raise AssertionError("bounded weights are admissible by construction")
        if self.continuous_translation_compatible and not self.translation_compatible:
            raise AssertionError("continuous translation class sits inside the plain one")

    def to_json(self):
        return {
            "unbounded_mass": self.unbounded_mass,
            "bounded": self.bounded,
            "translation_compatible": self.translation_compatible,
            "continuous_translation_compatible": self.continuous_translation_compatible,
            "mass_ratio_limited": self.mass_ratio_limited,
            "inf_estimate": self.inf_estimate,
            "sup_estimate": None if math.isinf(self.sup_estimate) else self.sup_estimate,
            "evidence": self.evidence,
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def _extremes(w, dense_span, dense_step):
    ts = np.arange(-dense_span, dense_span + dense_step, dense_step)
    samples = w.eval(ts)
    lo, hi = float(samples.min()), float(samples.max())
    k = w.kind
    if k == "constant":
        return float(w.params[0]), float(w.params[0])
    if k == "power":
        scale, n = w.params
        return float(scale), (float(scale) if n == 0 else math.inf)
    if k == "exp_abs":
        return float(w.params[0]), math.inf
    if k == "polynomial":
        c = np.trim_zeros(w.params, "b")
        if len(c) == 1:
            return float(c[0]), float(c[0])
        crit = polyfactor.real_roots(polyfactor.polyder(c))
        cand = [float(polyfactor.polyval(c, x)) for x in crit] + [
            float(polyfactor.polyval(c, 0.0))
        ]
        return min(cand), math.inf
    # tabulated: constant extrapolation pins the extremes to the samples
    return min(lo, float(w.vals.min())), max(hi, float(w.vals.max()))


def _tabulated_radii(w, tau, schedule):
    """Schedule radii that keep x and x+tau inside the tabulated data."""
    span = w.data_span()
    radii = schedule.radii()
    if span is None:
        return radii
    lo, hi = span
    keep = [T for T in radii if -T - abs(tau) >= lo and T + abs(tau) <= hi]
    if len(keep) < schedule.window + 2:
        raise InconclusiveLimit(
            "tabulated grid too short for the translation criteria; "
            "extend the grid or shorten the schedule"
        )
    return np.asarray(keep)


def classify_weight(w, tau_grid=None, schedule=None, dense_span=50.0, dense_step=0.01):
    """Numeric class verdicts for a weight.

    ``tau_grid`` lists the translation offsets probed (both criteria are
    conjunctions over it); verdicts are firm, with InconclusiveLimit raised
    whenever an estimate fails to stabilize.
    """
    schedule = schedule or Schedule()
    if tau_grid is None:
        tau_grid = (-5.0, -1.0, -0.5, 0.5, 1.0, 5.0)
    evidence = {}

    inf_est, sup_est = _extremes(w, dense_span, dense_step)
    evidence["extremes"] = {
        "inf_estimate": inf_est,
        "sup_estimate": None if math.isinf(sup_est) else sup_est,
        "dense_span": dense_span,
        "dense_step": dense_step,
        "on_grid_only": w.kind == "tabulated",
    }

    mass_radii = [float(T) for T in schedule.radii()]
    evidence["log_mass"] = {
        "T": mass_radii,
        "value": [w.log_mass(T) for T in mass_radii],
    }
    unbounded_mass = inf_est > 0.0
    bounded = math.isfinite(sup_est)

    pointwise_ok = True
    mass_ratio_ok = True
    pw_evidence = {}
    mr_evidence = {}
    tw_evidence = {}
    for tau in tau_grid:
        radii = _tabulated_radii(w, tau, schedule)
        tails = {}
        for sign, name in ((1.0, "plus"), (-1.0, "minus")):
            xs = sign * radii
            ratios = [
                float(np.exp(w.log_eval(x + tau) - w.log_eval(x))[0]) for x in xs
            ]
            verdict, limit = _ratio_verdict(
                ratios, schedule, f"pointwise ratio (tau={tau:g}, {name} tail)"
            )
            tails[name] = {
                "x": [float(x) for x in xs],
                "ratio": ratios,
                "verdict": verdict,
                "limit": None if math.isinf(limit) else limit,
            }
            if verdict != "finite":
                pointwise_ok = False
        pw_evidence[repr(float(tau))] = tails

        mr_vals, mr_ts = [], []
        for T in radii:
            if T + tau <= 0:
                continue
            mr_ts.append(float(T))
            mr_vals.append(math.exp(min(w.log_mass(T + tau) - w.log_mass(T), 709.0)))
        verdict, limit = _ratio_verdict(
            mr_vals, schedule, f"enlarged-window mass ratio (tau={tau:g})"
        )
        mr_evidence[repr(float(tau))] = {
            "T": mr_ts,
            "ratio": mr_vals,
            "verdict": verdict,
            "limit": None if math.isinf(limit) else limit,
        }
        if verdict != "finite":
            mass_ratio_ok = False

        tw_vals = [
            math.exp(min(w.log_interval_mass(-T + tau, T + tau) - w.log_mass(T), 709.0))
            for T in radii
        ]
        tw_evidence[repr(float(tau))] = {
            "T": [float(T) for T in radii],
            "ratio": tw_vals,
            "stabilized": schedule.stabilized(tw_vals),
            "limit": tw_vals[-1],
        }
    evidence["pointwise_ratio"] = pw_evidence
    evidence["enlarged_window_ratio"] = mr_evidence
    evidence["translated_window_ratio"] = tw_evidence

    continuous_ok = w.continuous and pointwise_ok
    if continuous_ok and not (pointwise_ok and mass_ratio_ok):
        raise InconclusiveLimit(
            "incoherent evidence: continuous translation class without the plain one"
        )
    return WeightClassReport(
        unbounded_mass=unbounded_mass,
        bounded=bounded,
        translation_compatible=pointwise_ok and mass_ratio_ok,
        continuous_translation_compatible=continuous_ok,
        mass_ratio_limited=mass_ratio_ok,
        inf_estimate=inf_est,
        sup_estimate=sup_est,
        evidence=evidence,
    )
