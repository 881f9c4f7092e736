"""Almost periodic signals, ergodic perturbations, and sampled traces.

The almost periodic component is always a finite trigonometric polynomial;
adding a bounded decaying perturbation gives the pseudo almost periodic
objects the rest of the toolkit analyzes.  Traces are uniformly sampled,
immutable once built, and round-trip through CSV.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    ConditionViolated,
    InconclusiveLimit,
    MissingFrequencies,
    NoTranslationNumberFound,
)
from .limits import Schedule
from .quadrature import adaptive_integral
from .weights import mass_ratio_inf

FREQ_MERGE_TOL = 1e-12
DECAY_CODES = {"zero": 0, "bump": 1, "rational": 2, "gaussian": 3, "tabulated": 4}
_EMPTY = np.empty(0, dtype=np.float64)


def _as_amp(amp, dim):
    a = np.atleast_1d(np.asarray(amp, dtype=np.complex128))
    if a.shape != (dim,):
        raise ValueError(f"amplitude shape {a.shape} does not match dimension {dim}")
    return a


class TrigPolynomial:
    """Finite sum of complex exponentials with vector amplitudes.

    Frequencies are merged when they agree within 1e-12; evaluation is exact
    and the sup norm is bounded by the sum of amplitude norms.
    """

    def __init__(self, freqs, amps, dim=None):
        freqs = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.ndim == 1:
            amps = amps[:, None]
        if dim is None:
            dim = amps.shape[1] if amps.size else 1
        if amps.shape[0] != freqs.shape[0]:
            raise ValueError("one amplitude per frequency required")
        order = np.argsort(freqs, kind="stable")
        freqs, amps = freqs[order], amps[order]
        merged_f, merged_a = [], []
        for f, a in zip(freqs, amps):
            if merged_f and abs(f - merged_f[-1]) <= FREQ_MERGE_TOL:
                merged_a[-1] = merged_a[-1] + a
            else:
                merged_f.append(float(f))
                merged_a.append(a.astype(np.complex128))
        self.freqs = np.array(merged_f, dtype=np.float64)
        self.amps = (
            np.array(merged_a, dtype=np.complex128)
            if merged_a
            else np.empty((0, dim), dtype=np.complex128)
        )
        self.dim = int(dim)

    @classmethod
    def from_terms(cls, terms, dim=None):
        """terms: iterable of (frequency, amplitude) pairs; the dimension is
        inferred from the first amplitude unless given."""
        terms = list(terms)
        if dim is None:
            dim = np.atleast_1d(terms[0][1]).shape[0] if terms else 1
        freqs = [t[0] for t in terms]
        amps = [_as_amp(t[1], dim) for t in terms]
        return cls(freqs, np.array(amps) if amps else np.empty((0, dim)), dim=dim)

    @classmethod
    def zero(cls, dim=1):
        return cls.from_terms([], dim=dim)

    @classmethod
    def cosine(cls, freq, amp=1.0, dim=1, component=0):
        """amp * cos(freq t) placed in one vector component."""
        a = np.zeros(dim, dtype=np.complex128)
        a[component] = 0.5 * amp
        return cls.from_terms([(freq, a), (-freq, a)], dim=dim)

    @property
    def n_terms(self):
        return len(self.freqs)

    def eval(self, t):
        t = np.asarray(t, dtype=np.float64)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = kernels.trig_eval(self.freqs, self.amps, tt)
        return out[0] if scalar else out

    def sup_bound(self):
        if not self.n_terms:
            return 0.0
        return float(np.linalg.norm(self.amps, axis=1).sum())

    def plus(self, other):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return TrigPolynomial(
            np.concatenate([self.freqs, other.freqs]),
            np.concatenate([self.amps, other.amps])
            if self.n_terms or other.n_terms
            else np.empty((0, self.dim)),
            dim=self.dim,
        )

    def scaled(self, factor):
        return TrigPolynomial(self.freqs.copy(), self.amps * factor, dim=self.dim)

    def to_json(self):
        return {
            "dim": self.dim,
            "terms": [
                {
                    "freq": float(f),
                    "amp": [[float(a.real), float(a.imag)] for a in row],
                }
                for f, row in zip(self.freqs, self.amps)
            ],
        }

    @classmethod
    def from_json(cls, spec):
        dim = int(spec.get("dim", 1))
        terms = []
        for item in spec.get("terms", []):
            amp = item["amp"]
            if isinstance(amp, (int, float)):
                vec = np.array([complex(amp)])
            elif amp and isinstance(amp[0], (int, float)) and len(amp) == 2 and dim == 1:
                vec = np.array([complex(amp[0], amp[1])])
            else:
                vec = np.array([complex(re, im) for re, im in amp])
            terms.append((float(item["freq"]), vec))
        return cls.from_terms(terms, dim=dim)


class ErgodicPerturbation:
    """Bounded continuous decay profile times a fixed amplitude vector.

    Built-in profiles: a compactly supported cosine-squared bump, rational
    decay c/(1+t^2)^p with p >= 1, a gaussian, and a tabulated profile that
    is linear between knots and zero outside them.
    """

    def __init__(self, kind, params, amp=1.0, dim=1, grid=None, vals=None):
        if kind not in DECAY_CODES:
            raise ValueError(f"unknown perturbation kind {kind!r}")
        self.kind = kind
        self.code = DECAY_CODES[kind]
        self.params = np.asarray(params, dtype=np.float64)
        self.grid = _EMPTY if grid is None else np.asarray(grid, dtype=np.float64)
        self.vals = _EMPTY if vals is None else np.asarray(vals, dtype=np.float64)
        self.dim = int(dim)
        self.amp = _as_amp(amp, self.dim) if np.ndim(amp) else np.full(
            self.dim, complex(amp)
        )
        if kind == "rational" and self.params[1] < 1.0:
            raise ValueError("rational decay needs p >= 1")
        if kind == "tabulated":
            if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
                raise ValueError("tabulated grid must be increasing")
            if self.vals.shape != self.grid.shape:
                raise ValueError("values must match the grid")

    @classmethod
    def bump(cls, center=0.0, radius=1.0, height=1.0, amp=1.0, dim=1):
        return cls("bump", [center, radius, height], amp=amp, dim=dim)

    @classmethod
    def rational(cls, c=1.0, p=1.0, amp=1.0, dim=1):
        return cls("rational", [c, p], amp=amp, dim=dim)

    @classmethod
    def gaussian(cls, c=1.0, amp=1.0, dim=1):
        return cls("gaussian", [c], amp=amp, dim=dim)

    @classmethod
    def tabulated(cls, grid, values, amp=1.0, dim=1):
        return cls("tabulated", [], amp=amp, dim=dim, grid=grid, vals=values)

    @classmethod
    def zero(cls, dim=1):
        return cls("zero", [], amp=0.0, dim=dim)

    def profile(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return kernels.decay_profile(self.code, self.params, self.grid, self.vals, t)

    def eval(self, t):
        t = np.asarray(t, dtype=np.float64)
        scalar = t.ndim == 0
        prof = self.profile(np.atleast_1d(t))
        out = prof[:, None] * self.amp[None, :]
        return out[0] if scalar else out

    def sup_bound(self):
        k = self.kind
        amp_norm = float(np.linalg.norm(self.amp))
        if k == "zero":
            return 0.0
        if k == "bump":
            return abs(self.params[2]) * amp_norm
        if k == "rational":
            return abs(self.params[0]) * amp_norm
        if k == "gaussian":
            return abs(self.params[0]) * amp_norm
        return float(np.max(np.abs(self.vals))) * amp_norm

    def abs_profile_mass(self, T):
        """Integral of |profile| over [-T, T] (exact or adaptive + tail bound)."""
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "bump":
            c, r, h = self.params
            lo, hi = max(-T, c - r), min(T, c + r)
            if lo >= hi:
                return 0.0

            def anti(x):
                return 0.5 * x + math.sin(math.pi * x) / (2.0 * math.pi)

            return abs(h) * r * (anti((hi - c) / r) - anti((lo - c) / r))
        if k == "gaussian":
            return abs(self.params[0]) * math.sqrt(math.pi) * math.erf(T)
        if k == "rational":
            c, p = self.params
            if p == 1.0:
                return 2.0 * abs(c) * math.atan(T)
            cap = min(T, 1e6)
            body = 2.0 * abs(c) * adaptive_integral(
                lambda x: (1.0 + x * x) ** (-p), 0.0, cap, tol=1e-12
            )
            tail = 0.0
            if T > cap:
                tail = 2.0 * abs(c) * cap ** (1.0 - 2.0 * p) / (2.0 * p - 1.0)
            return body + tail
        g = np.abs(self.vals)
        lo, hi = max(-T, self.grid[0]), min(T, self.grid[-1])
        if lo >= hi:
            return 0.0
        xs = np.linspace(lo, hi, 4097)
        return float(np.trapezoid(np.abs(np.interp(xs, self.grid, g)), xs))

    def support_radius(self, eps=1e-300):
        """Radius beyond which |profile| stays below eps (inf when none)."""
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "bump":
            return abs(self.params[0]) + self.params[1]
        if k == "gaussian":
            c = abs(self.params[0])
            return math.sqrt(max(math.log(c / eps), 0.0)) if c > eps else 0.0
        if k == "tabulated":
            return max(abs(self.grid[0]), abs(self.grid[-1]))
        return math.inf

    def to_json(self):
        base = {"kind": self.kind, "dim": self.dim}
        base["amp"] = [[float(a.real), float(a.imag)] for a in self.amp]
        if self.kind == "bump":
            base.update(
                center=float(self.params[0]),
                radius=float(self.params[1]),
                height=float(self.params[2]),
            )
        elif self.kind == "rational":
            base.update(c=float(self.params[0]), p=float(self.params[1]))
        elif self.kind == "gaussian":
            base.update(c=float(self.params[0]))
        elif self.kind == "tabulated":
            base.update(
                grid=[float(x) for x in self.grid],
                values=[float(x) for x in self.vals],
            )
        return base

    @classmethod
    def from_json(cls, spec):
        kind = spec["kind"]
        dim = int(spec.get("dim", 1))
        amp = spec.get("amp", 1.0)
        if isinstance(amp, list):
            amp = np.array([complex(re, im) for re, im in amp])
        if kind == "bump":
            return cls.bump(
                spec.get("center", 0.0),
                spec.get("radius", 1.0),
                spec.get("height", 1.0),
                amp=amp,
                dim=dim,
            )
        if kind == "rational":
            return cls.rational(spec.get("c", 1.0), spec.get("p", 1.0), amp=amp, dim=dim)
        if kind == "gaussian":
            return cls.gaussian(spec.get("c", 1.0), amp=amp, dim=dim)
        if kind == "tabulated":
            return cls.tabulated(spec["grid"], spec["values"], amp=amp, dim=dim)
        if kind == "zero":
            return cls.zero(dim=dim)
        raise ValueError(f"unknown perturbation kind {kind!r}")


class PAPFunction:
    """Almost periodic part plus ergodic perturbation, both globally defined."""

    def __init__(self, ap=None, ergodic=None, dim=None):
        if ap is None and ergodic is None:
            raise ValueError("need at least one part")
        if dim is None:
            dim = ap.dim if ap is not None else ergodic.dim
        self.dim = int(dim)
        self.ap = ap if ap is not None else TrigPolynomial.zero(dim)
        self.ergodic = ergodic if ergodic is not None else ErgodicPerturbation.zero(dim)
        if self.ap.dim != self.dim or self.ergodic.dim != self.dim:
            raise ValueError("dimension mismatch between parts")

    def eval(self, t):
        t = np.asarray(t, dtype=np.float64)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = self.ap.eval(tt) + self.ergodic.eval(tt)
        return out[0] if scalar else out

    def sup_bound(self):
        return self.ap.sup_bound() + self.ergodic.sup_bound()

    def sample(self, t0=-1e4, t1=1e4, dt=1e-2):
        n = int(round((t1 - t0) / dt)) + 1
        ts = t0 + dt * np.arange(n)
        return Trace(t0, dt, self.eval(ts))

    def to_json(self):
        return {
            "dim": self.dim,
            "trig": self.ap.to_json(),
            "ergodic": self.ergodic.to_json(),
        }

    @classmethod
    def from_json(cls, spec):
        dim = int(spec.get("dim", 1))
        ap = TrigPolynomial.from_json(spec.get("trig", {"dim": dim, "terms": []}))
        erg = spec.get("ergodic")
        ergodic = (
            ErgodicPerturbation.from_json(erg)
            if erg
            else ErgodicPerturbation.zero(dim)
        )
        return cls(ap=ap, ergodic=ergodic, dim=dim)


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled vector signal; values are (n, d) complex."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim == 1:
            v = v[:, None]
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self):
        return self.t0 + self.dt * (self.n - 1)

    def norms(self):
        return np.linalg.norm(self.values, axis=1)

    def sup_norm(self):
        return float(self.norms().max())

    def symmetric_horizon(self):
        """Largest H with [-H, H] inside the sampled span."""
        return min(-self.t0, self.t_end)

    def index_of(self, time):
        return int(round((time - self.t0) / self.dt))

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["t"]
            for c in range(self.dim):
                header += [f"re{c + 1}", f"im{c + 1}"]
            writer.writerow(header)
            for i, time in enumerate(self.t):
                row = [format(time, ".17g")]
                for c in range(self.dim):
                    row += [
                        format(self.values[i, c].real, ".17g"),
                        format(self.values[i, c].imag, ".17g"),
                    ]
                writer.writerow(row)

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            dim = (len(header) - 1) // 2
            ts, vals = [], []
            for row in reader:
                ts.append(float(row[0]))
                vals.append(
                    [
                        complex(float(row[1 + 2 * c]), float(row[2 + 2 * c]))
                        for c in range(dim)
                    ]
                )
        ts = np.array(ts)
        if len(ts) < 2:
            raise ValueError("trace needs at least two samples")
        dts = np.diff(ts)
        dt = float(dts[0])
        if np.max(np.abs(dts - dt)) > 1e-9 * max(abs(dt), 1.0):
            raise ValueError("trace grid is not uniform")
        return cls(float(ts[0]), dt, np.array(vals, dtype=np.complex128))


def trace_weighted_mean_levels(trace, mu, nu, radii):
    """Weighted truncated means of the trace norm at the given radii.

    Value at T is the integral of |trace| * nu over [-T, T] (trapezoid on
    the sample grid) divided by the mu mass, computed overflow-safe.
    """
    h = trace.symmetric_horizon()
    ts = trace.t
    g = trace.norms() * nu.eval(ts)
    seg = 0.5 * (g[1:] + g[:-1]) * trace.dt
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    out = []
    for T in radii:
        if T > h + 0.5 * trace.dt:
            break
        i_lo = trace.index_of(-T)
        i_hi = trace.index_of(T)
        num = cum[i_hi] - cum[i_lo]
        log_mass = mu.log_mass(T)
        val = num * math.exp(-log_mass) if log_mass < 700 else 0.0
        out.append((float(T), float(val)))
    return out


# ---------------------------------------------------------------------------
# translation numbers


@dataclass
class TranslationScan:
    tau_found: float
    l_bound: float
    epsilon: float
    n_windows: int
    dev_at_tau: float


def check_almost_periodic(trace, eps, n_windows=10):
    """Search the trace for relatively dense eps-translation numbers.

    Scans every positive shift on the sample grid up to half the trace
    length.  The returned window length is the largest gap between
    consecutive qualifying shifts (so every window of that length in the
    scanned range contains one); at least ``n_windows`` such windows must
    fit inside the horizon for the verdict to count.  The witness is the
    best shift inside the first qualifying cluster beyond the trivial
    small-shift regime.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    kmax = trace.n // 2
    if kmax < n_windows:
        raise NoTranslationNumberFound("trace too short for the window scan")
    shifts = np.arange(1, kmax + 1, dtype=np.int64)
    dev = kernels.dev_scan(np.ascontiguousarray(trace.values), shifts)
    hits = np.flatnonzero(dev < eps)
    if hits.size == 0:
        raise NoTranslationNumberFound(
            f"no eps-translation number below eps={eps:g} within the horizon"
        )
    taus = (hits + 1) * trace.dt
    tau_max = kmax * trace.dt
    gaps = np.diff(np.concatenate([[0.0], taus, [tau_max]]))
    l_bound = float(gaps.max())
    if n_windows * l_bound > tau_max:
        raise NoTranslationNumberFound(
            f"translation numbers below eps={eps:g} are not relatively dense "
            "within the scanned horizon"
        )
    # first cluster past any significant gap; for dense hit sets (constants)
    # the leading shift itself is the witness
    significant = max(2.0 * trace.dt, 0.5 * l_bound)
    starts = np.flatnonzero(gaps[:-1] > significant)
    if starts.size == 0:
        best = int(hits[np.argmin(dev[hits])])
        idx = best if dev[hits[0]] > dev[best] else int(hits[0])
    else:
        c0 = starts[0]
        c1 = c0
        while c1 + 1 < taus.size and gaps[c1 + 1] <= significant:
            c1 += 1
        cluster = hits[c0 : c1 + 1]
        idx = int(cluster[np.argmin(dev[cluster])])
    return TranslationScan(
        tau_found=float((idx + 1) * trace.dt),
        l_bound=l_bound,
        epsilon=eps,
        n_windows=n_windows,
        dev_at_tau=float(dev[idx]),
    )


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class Decomposition:
    ap: TrigPolynomial
    residual: Trace
    residual_mean_trace: list
    residual_decayed: bool
    delta0: float
    threshold: float


def _trace_bohr(trace, lam, horizon):
    i_lo, i_hi = trace.index_of(-horizon), trace.index_of(horizon)
    ts = trace.t[i_lo : i_hi + 1]
    vals = trace.values[i_lo : i_hi + 1]
    phase = np.exp(-1j * lam * ts)
    integ = np.trapezoid(vals * phase[:, None], dx=trace.dt, axis=0)
    return integ / (2.0 * horizon)


def decompose(
    trace,
    mu,
    nu,
    freq_candidates,
    schedule=None,
    threshold_rel=1e-3,
    delta0_floor=1e-6,
):
    """Split a sampled pseudo almost periodic trace into trig part + residual.

    The candidates must cover the almost periodic spectrum; coefficients are
    truncated Bohr transforms over the largest symmetric window, kept when
    their norm exceeds ``threshold_rel`` times the trace sup.  The weight
    pair must keep the mass ratio bounded below (unique decomposition), and
    any candidate peak left in the residual raises MissingFrequencies.
    """
    schedule = schedule or Schedule()
    ok, delta0, _ = mass_ratio_inf(mu, nu, schedule)
    if not ok or delta0 <= delta0_floor:
        raise ConditionViolated(
            f"mass ratio inf {delta0:.3g} is not bounded away from zero; "
            "the decomposition is not unique for this weight pair"
        )
    horizon = trace.symmetric_horizon()
    if horizon <= 0:
        raise ValueError("trace must straddle t = 0")
    sup = trace.sup_norm()
    threshold = threshold_rel * sup if sup > 0 else threshold_rel
    kept = []
    for lam in freq_candidates:
        coef = _trace_bohr(trace, float(lam), horizon)
        if np.linalg.norm(coef) > threshold:
            kept.append((float(lam), coef))
    ap = TrigPolynomial.from_terms(kept, dim=trace.dim)
    residual_vals = trace.values - ap.eval(trace.t)
    residual = Trace(trace.t0, trace.dt, residual_vals)

    radii = [T for T in schedule.radii() if T <= horizon]
    if len(radii) < 3:
        raise InconclusiveLimit("trace horizon too short for the mean schedule")
    mean_trace = trace_weighted_mean_levels(residual, mu, nu, radii)
    vals = [v for _, v in mean_trace]
    tail = vals[-min(5, len(vals)) :]
    noninc = all(b <= a * 1.05 for a, b in zip(tail, tail[1:]))
    decayed = noninc and (
        vals[-1] < max(threshold, 1e-12) or vals[-1] <= 0.25 * vals[0]
    )

    for lam in freq_candidates:
        leftover = _trace_bohr(residual, float(lam), horizon)
        if np.linalg.norm(leftover) > threshold:
            raise MissingFrequencies(
                f"residual keeps a spectral peak at frequency {lam:g} "
                f"({np.linalg.norm(leftover):.3g} > {threshold:.3g})"
            )
    return Decomposition(
        ap=ap,
        residual=residual,
        residual_mean_trace=mean_trace,
        residual_decayed=decayed,
        delta0=delta0,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# composition


class AffinePAPMap:
    """Bivariate map F(t, u) = gain(t) * u + offset(t) with PAP coefficients.

    The gain is scalar-valued (dimension 1); the Lipschitz constant in the
    second slot is bounded by the gain's sup bound.
    """

    def __init__(self, gain, offset):
        if gain.dim != 1:
            raise ValueError("gain must be scalar-valued")
        self.gain = gain
        self.offset = offset
        self.dim = offset.dim

    def lipschitz_bound(self):
        return self.gain.sup_bound()

    def eval(self, t, u):
        g = self.gain.eval(np.atleast_1d(t))[:, 0]
        return g[:, None] * u + self.offset.eval(np.atleast_1d(t))


def compose_lipschitz(fmap, h, t0=-1e4, t1=1e4, dt=1e-2):
    """Trace of t -> F(t, h(t)) on a uniform grid."""
    n = int(round((t1 - t0) / dt)) + 1
    ts = t0 + dt * np.arange(n)
    u = h.eval(ts)
    return Trace(t0, dt, fmap.eval(ts, u))
