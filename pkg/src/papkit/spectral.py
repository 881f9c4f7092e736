"""Classical and doubly-weighted means, Bohr transforms, and spectra.

All limits are truncated means over symmetric windows evaluated along a
geometric schedule.  Numerators are accumulated shell by shell with
per-period Simpson subdivision; the weighted integrands are carried in a
scaled representation z * e^L so that exponential weights never overflow,
and window masses enter through their logarithms.  Trigonometric terms that
line up exactly with the probe frequency are integrated in closed form
(against the weight's exact window mass), which keeps zero-frequency
coefficients at full accuracy.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import (
    DivergentRatio,
    InconclusiveLimit,
    MassRatioUndefined,
    NotConverged,
    NotMassRatioLimited,
    OscillationConditionFailed,
    ZeroFrequency,
)
from .limits import MeanEstimate, Schedule
from .signals import ErgodicPerturbation, PAPFunction, TrigPolynomial
from .weights import enlarged_mass_ratio, mass_ratio_limit

BASE_STEP = 0.25
FINE_STEP = 0.05
PERIOD_PANELS = 32
MAX_PANELS_PER_CHUNK = 1 << 18
THETA_FLOOR = 1e-6


def _wide(schedule):
    # weight-ratio preconditions are closed-form cheap; give them room
    return replace(schedule, doublings=max(schedule.doublings, 24))


class _ScaledVec:
    """Complex vector held as z * e^L to survive exponential weights."""

    __slots__ = ("z", "L")

    def __init__(self, dim):
        self.z = np.zeros(dim, dtype=np.complex128)
        self.L = -math.inf

    def add(self, z, L):
        if L == -math.inf or not np.any(z):
            return
        if self.L == -math.inf:
            self.z = z.astype(np.complex128, copy=True)
            self.L = float(L)
            return
        top = max(self.L, L)
        self.z = self.z * math.exp(self.L - top) + z * math.exp(L - top)
        self.L = top

    def snapshot(self):
        out = _ScaledVec(self.z.shape[0])
        out.z = self.z.copy()
        out.L = self.L
        return out

    def value(self, log_denom):
        if self.L == -math.inf:
            return np.zeros_like(self.z)
        e = self.L - log_denom
        if e < -745.0:
            return np.zeros_like(self.z)
        return self.z * math.exp(e)


def _simpson(a, b, n_panels):
    x = np.linspace(a, b, n_panels + 1)
    w = np.full(n_panels + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * ((b - a) / n_panels / 3.0)


class _MeanEngine:
    """Incremental truncated mean (1/denom(T)) * int_{-T}^{T} f(t+s) e^{-i lam t} nu(t+s) dt.

    ``value_at`` must be called with nondecreasing radii; shells between
    successive radii are integrated once and accumulated in scaled form.
    """

    def __init__(self, f, lam, mu=None, nu=None, shift=0.0):
        self.f = f
        self.lam = float(lam)
        self.mu = mu
        self.nu = nu
        self.shift = float(shift)
        self.dim = f.dim
        omegas = f.ap.freqs - self.lam
        zero = np.abs(omegas) <= 1e-12
        # aligned terms: closed form against the exact window mass
        self.aligned_amp = np.zeros(self.dim, dtype=np.complex128)
        for k in np.flatnonzero(zero):
            phase = np.exp(1j * f.ap.freqs[k] * self.shift)
            self.aligned_amp = self.aligned_amp + phase * f.ap.amps[k]
        self.osc_freqs = f.ap.freqs[~zero]
        self.osc_amps = f.ap.amps[~zero]
        self.osc_omegas = omegas[~zero]
        self.has_erg = f.ergodic.code != 0
        # trig terms against a plain window integrate in closed form
        self.closed_osc = nu is None
        max_osc = 0.0
        if self.osc_omegas.size and not self.closed_osc:
            max_osc = float(np.max(np.abs(self.osc_omegas)))
        if self.has_erg:
            max_osc = max(max_osc, abs(self.lam))
        self.step = BASE_STEP
        if max_osc > 0.0:
            self.step = min(self.step, 2.0 * math.pi / max_osc / PERIOD_PANELS)
        self.fine_radius = 0.0
        self.erg_skip_radius = 0.0
        if self.has_erg:
            self.fine_radius = self._erg_fine_radius() + abs(self.shift)
            self.erg_skip_radius = f.ergodic.support_radius(1e-18) + abs(self.shift)
        self.numeric_osc = self.osc_omegas.size > 0 and not self.closed_osc
        self.acc = _ScaledVec(self.dim)
        self.prev = 0.0
        self.needs_numeric = self.has_erg or self.numeric_osc

    def _erg_fine_radius(self):
        erg = self.f.ergodic
        if erg.kind == "bump":
            return abs(erg.params[0]) + erg.params[1]
        if erg.kind == "gaussian":
            return 6.0
        if erg.kind == "rational":
            return 50.0
        if erg.kind == "tabulated":
            return max(abs(erg.grid[0]), abs(erg.grid[-1]))
        return 0.0

    def _integrand(self, t):
        ts = t + self.shift
        vals = np.zeros((t.shape[0], self.dim), dtype=np.complex128)
        if self.osc_omegas.size and not self.closed_osc:
            vals += kernels.trig_eval(self.osc_freqs, self.osc_amps, ts)
        if self.has_erg:
            erg = self.f.ergodic
            prof = kernels.decay_profile(erg.code, erg.params, erg.grid, erg.vals, ts)
            vals += prof[:, None] * erg.amp[None, :]
        if self.lam != 0.0:
            vals *= np.exp(-1j * self.lam * t)[:, None]
        return vals

    def _chunk(self, a, b):
        """Scaled Simpson integral of integrand * nu over [a, b]."""
        step = self.step
        if min(abs(a), abs(b)) < self.fine_radius or a < 0.0 < b:
            step = min(step, FINE_STEP)
        total = _ScaledVec(self.dim)
        n_total = max(2, int(math.ceil((b - a) / step)))
        n_chunks = int(math.ceil(n_total / MAX_PANELS_PER_CHUNK))
        edges = np.linspace(a, b, n_chunks + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(2, int(math.ceil((hi - lo) / step)))
            n += n % 2
            x, w = _simpson(lo, hi, n)
            vals = self._integrand(x)
            if self.nu is not None:
                lognu = self.nu.log_eval(x + self.shift)
                top = float(np.max(lognu))
                fac = w * np.exp(lognu - top)
            else:
                top = 0.0
                fac = w
            total.add(fac @ vals, top)
        return total

    def _skippable(self, a, b):
        # a decayed-out shell contributes nothing unless trig terms are
        # being integrated numerically
        if self.numeric_osc:
            return False
        if not self.has_erg:
            return True
        return a >= self.erg_skip_radius or b <= -self.erg_skip_radius

    def _advance(self, T):
        if T < self.prev:
            raise ValueError("radii must be nondecreasing")
        if T == self.prev or not self.needs_numeric:
            self.prev = max(self.prev, T)
            return
        a, b = self.prev, T
        pieces = [(-b, 0.0), (0.0, b)] if a == 0.0 else [(-b, -a), (a, b)]
        for lo, hi in pieces:
            if self._skippable(lo, hi):
                continue
            seg = self._chunk(lo, hi)
            self.acc.add(seg.z, seg.L)
        self.prev = T

    def _aligned_term(self, T):
        if not np.any(self.aligned_amp):
            return None
        if self.nu is None:
            return self.aligned_amp, math.log(2.0 * T)
        lo, hi = -T + self.shift, T + self.shift
        return self.aligned_amp, float(self.nu.log_interval_mass(lo, hi))

    def _closed_osc_term(self, T):
        # plain-window trig integrals: 2 sin(omega T)/omega, with the shift
        # phase folded into the amplitude
        if not (self.closed_osc and self.osc_omegas.size):
            return None
        coef = 2.0 * np.sin(self.osc_omegas * T) / self.osc_omegas
        phases = np.exp(1j * self.osc_freqs * self.shift)
        z = ((coef * phases)[:, None] * self.osc_amps).sum(axis=0)
        return z, 0.0

    def value_at(self, T):
        self._advance(T)
        num = self.acc.snapshot()
        term = self._aligned_term(T)
        if term is not None:
            num.add(*term)
        term = self._closed_osc_term(T)
        if term is not None:
            num.add(*term)
        log_denom = self.mu.log_mass(T) if self.mu is not None else math.log(2.0 * T)
        return num.value(log_denom)


def _collect(engine, f, schedule, rel_floor):
    eff = replace(schedule, atol=max(schedule.atol, rel_floor * max(f.sup_bound(), 1e-30)))
    trace, values = [], []
    converged = False
    for T in schedule.radii():
        v = engine.value_at(float(T))
        trace.append((float(T), v))
        values.append(v)
        if eff.stabilized(values):
            converged = True
            break
    return MeanEstimate(values[-1], trace, converged, eff.rtol)


# ---------------------------------------------------------------------------
# public operations


def classical_mean(f, schedule=None, rel_floor=1e-4):
    """Truncated Lebesgue mean (1/2T) of the signal along the schedule."""
    schedule = schedule or Schedule()
    return _collect(_MeanEngine(f, 0.0), f, schedule, rel_floor)


def bohr_transform(f, lam, schedule=None, rel_floor=1e-4):
    """Truncated mean of f(t) e^{-i lam t}: the Fourier coefficient at lam."""
    schedule = schedule or Schedule()
    return _collect(_MeanEngine(f, lam), f, schedule, rel_floor)


@dataclass
class OscillationCheck:
    holds: bool
    levels: list
    threshold: float
    lam: float

    def to_json(self):
        return {
            "holds": self.holds,
            "lam": self.lam,
            "threshold": self.threshold,
            "levels": [[t, m] for t, m in self.levels],
        }


_OSC_CACHE = {}


def oscillatory_decay(mu, nu, lam, schedule=None, band=8, threshold=1e-3):
    """Check that the mu-normalized oscillatory nu-integral dies out.

    Evaluates |int_{Q_T} e^{i lam t} nu(t) dt| / mu(Q_T) on ``band`` radii
    per schedule level and records the per-level sup.  Holds when the level
    envelope is non-increasing over the last five levels and ends below the
    threshold; a plateau at or above the threshold is a firm failure, and
    anything else is inconclusive.
    """
    if lam == 0.0:
        raise ZeroFrequency("the oscillatory decay condition needs lam != 0")
    schedule = schedule or Schedule()
    cache_key = (
        mu.key(),
        nu.key(),
        round(abs(lam), 12),
        schedule.t0,
        schedule.doublings,
        band,
        threshold,
    )
    hit = _OSC_CACHE.get(cache_key)
    if hit is not None:
        return hit
    out = _oscillatory_decay_impl(mu, nu, lam, schedule, band, threshold)
    _OSC_CACHE[cache_key] = out
    return out


def _oscillatory_decay_impl(mu, nu, lam, schedule, band, threshold):
    probe = PAPFunction(ap=TrigPolynomial.from_terms([(0.0, 1.0)]))
    engine = _MeanEngine(probe, -lam, mu=mu, nu=nu)
    levels = []
    for T in schedule.radii():
        sub = T * (1.0 + np.arange(band) / band)
        m = max(float(np.linalg.norm(engine.value_at(float(s)))) for s in sub)
        levels.append((float(T), m))
        if len(levels) >= 5:
            tail = [v for _, v in levels[-5:]]
            noninc = all(b <= a * 1.05 + 1e-300 for a, b in zip(tail, tail[1:]))
            # exit early only on an unambiguous decay trend
            if noninc and tail[-1] < threshold and tail[-1] <= 0.25 * tail[0]:
                return OscillationCheck(True, levels, threshold, lam)
    vals = [v for _, v in levels]
    tail = vals[-5:]
    noninc = all(b <= a * 1.05 + 1e-300 for a, b in zip(tail, tail[1:]))
    if noninc and vals[-1] < threshold:
        return OscillationCheck(True, levels, threshold, lam)
    if vals[-1] >= threshold and vals[-1] > 0.5 * tail[0]:
        return OscillationCheck(False, levels, threshold, lam)
    raise InconclusiveLimit(
        f"oscillatory decay at lam={lam:g} undecided; extend the schedule"
    )


def _require_oscillation(f, mu, nu, lam, schedule, threshold):
    """Oscillatory decay must hold at every nonzero shifted frequency."""
    seen = set()
    for k, freq in enumerate(f.ap.freqs):
        omega = freq - lam
        if abs(omega) <= 1e-12:
            continue
        key = round(abs(omega) / 1e-9)
        if key in seen:
            continue
        seen.add(key)
        chk = oscillatory_decay(mu, nu, omega, schedule=schedule, threshold=threshold)
        if not chk.holds:
            raise OscillationConditionFailed(
                f"oscillatory weighted mean does not vanish at frequency {omega:g}"
            )


def doubly_weighted_mean(
    f, mu, nu, schedule=None, rel_floor=1e-4, check_preconditions=True
):
    """Truncated nu-weighted mean normalized by the mu mass.

    Preconditions (checked by default): the mass ratio limit of the pair
    exists, and the oscillatory decay condition holds at every nonzero
    frequency of the trig part.  When the estimate converges it satisfies
    value = mass_ratio * classical_mean(f) up to twice the tolerance.
    """
    schedule = schedule or Schedule()
    if check_preconditions:
        mass_ratio_limit(mu, nu, _wide(schedule)).require("mass ratio")
        _require_oscillation(f, mu, nu, 0.0, schedule, 1e-3)
    return _collect(_MeanEngine(f, 0.0, mu=mu, nu=nu), f, schedule, rel_floor)


def doubly_weighted_bohr(
    f, mu, nu, lam, schedule=None, rel_floor=1e-4, check_preconditions=True
):
    """nu-weighted Bohr coefficient at lam, normalized by the mu mass."""
    schedule = schedule or Schedule()
    if check_preconditions:
        mass_ratio_limit(mu, nu, _wide(schedule)).require("mass ratio")
        _require_oscillation(f, mu, nu, lam, schedule, 1e-3)
    return _collect(_MeanEngine(f, lam, mu=mu, nu=nu), f, schedule, rel_floor)


# ---------------------------------------------------------------------------
# spectrum scan


@dataclass
class SpectrumReport:
    lambdas: list
    classical: list
    mass_ratio: float
    dichotomy: str  # "empty" | "equals_classical"
    threshold: float
    t_end: float
    ergodic_bound: float = 0.0

    def lambda_set(self):
        return [lam for lam, _ in self.lambdas]

    def classical_set(self):
        return [lam for lam, _ in self.classical]

    def to_json(self):
        def pairs(items):
            return [
                {
                    "freq": lam,
                    "coef": [[float(c.real), float(c.imag)] for c in np.atleast_1d(vec)],
                }
                for lam, vec in items
            ]

        return {
            "dichotomy": self.dichotomy,
            "mass_ratio": self.mass_ratio,
            "threshold": self.threshold,
            "t_end": self.t_end,
            "weighted": pairs(self.lambdas),
            "classical": pairs(self.classical),
        }


def _plain_coefficients(f, lam_grid, t_end):
    """Exact truncated transforms of the trig part over [-t_end, t_end]."""
    grid = np.atleast_1d(np.asarray(lam_grid, dtype=np.float64))
    out = np.zeros((grid.size, f.dim), dtype=np.complex128)
    for freq, amp in zip(f.ap.freqs, f.ap.amps):
        om = freq - grid
        small = np.abs(om) * t_end <= 1e-12
        denom = np.where(small, 1.0, om * t_end)
        coef = np.where(small, 1.0, np.sin(om * t_end) / denom)
        out += coef[:, None] * amp[None, :]
    return out


def _windowed_coefficients(f, lam_grid, t_end):
    """Triangular-window transforms: nonnegative squared-sinc response.

    Each trig term contributes amp * sinc^2(d t/2); the envelope bound
    4/(d t)^2 makes sidelobe exclusion rigorous during peak extraction.
    """
    grid = np.asarray(lam_grid, dtype=np.float64)
    out = np.zeros((grid.size, f.dim), dtype=np.complex128)
    for freq, amp in zip(f.ap.freqs, f.ap.amps):
        x = (freq - grid) * t_end / 2.0
        small = np.abs(x) <= 1e-12
        denom = np.where(small, 1.0, x)
        coef = np.where(small, 1.0, (np.sin(x) / denom) ** 2)
        out += coef[:, None] * amp[None, :]
    return out


def scan_spectrum(
    f, mu, nu, lam_grid, schedule=None, threshold_rel=1e-3, theta_floor=THETA_FLOOR
):
    """Classical spectrum on the grid plus the weighted-spectrum dichotomy.

    Classical membership thresholds the truncated transform at the largest
    schedule radius (the decaying part is bounded uniformly over the grid
    and stays below any sensible threshold there).  The weighted spectrum is
    empty when the mass ratio vanishes and otherwise carries the classical
    frequencies with coefficients scaled by the mass ratio.
    """
    schedule = schedule or Schedule()
    grid = np.asarray(lam_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("frequency grid must be a nonempty 1-d array")
    t_end = float(schedule.radii()[-1])
    if grid.size > 1:
        # keep the transform's main lobe wider than the grid spacing, else
        # off-grid frequencies slip between the sampled points
        step = float(np.min(np.diff(np.sort(grid))))
        t_end = min(t_end, max(2.5 / step, float(schedule.t0)))
    sup = f.sup_bound()
    threshold = threshold_rel * sup if sup > 0 else threshold_rel

    coefs = _windowed_coefficients(f, grid, t_end)
    erg_bound = f.ergodic.abs_profile_mass(t_end) * float(
        np.linalg.norm(f.ergodic.amp)
    ) / t_end
    norms = np.linalg.norm(coefs, axis=1)
    alive = norms > threshold

    # peak extraction: take the strongest flag, then retire every flag a
    # removed peak could still explain through its sidelobe envelope
    sup_ap = max(f.ap.sup_bound(), threshold)
    step = float(np.min(np.diff(grid))) if grid.size > 1 else 1.0
    r_star = 4.0 * math.sqrt(sup_ap / threshold) / t_end + 2.0 * step
    classical = []
    while np.any(alive):
        i = int(np.argmax(np.where(alive, norms, -1.0)))
        lam_hat = float(grid[i])
        if 0 < i < grid.size - 1 and norms[i - 1] > 0 and norms[i + 1] > 0:
            d2 = norms[i - 1] - 2.0 * norms[i] + norms[i + 1]
            if d2 < 0:
                lam_hat += 0.5 * step * (norms[i - 1] - norms[i + 1]) / d2
        coef = _plain_coefficients(f, lam_hat, t_end)[0]
        classical.append((float(grid[i]), coef))
        alive &= np.abs(grid - grid[i]) > r_star
    classical.sort(key=lambda item: item[0])

    try:
        theta_est = mass_ratio_limit(mu, nu, _wide(schedule))
        theta = float(theta_est.require("mass ratio"))
    except (DivergentRatio, InconclusiveLimit, NotConverged) as exc:
        raise MassRatioUndefined(str(exc)) from exc

    if theta < theta_floor:
        lambdas = []
        dichotomy = "empty"
    else:
        lambdas = [(lam, theta * vec) for lam, vec in classical]
        dichotomy = "equals_classical"
    return SpectrumReport(
        lambdas=lambdas,
        classical=classical,
        mass_ratio=theta,
        dichotomy=dichotomy,
        threshold=threshold,
        t_end=t_end,
        ergodic_bound=float(erg_bound),
    )


def translated_mean(f, mu, nu, a, schedule=None, rel_floor=1e-4, check_preconditions=True):
    """Mean of the shifted signal against the shifted nu weight.

    Both weights must have finite enlarged-window mass ratios at the shift
    (and its negative); the converged value equals the translated-window
    factor of nu times the mass ratio times the classical mean.
    """
    schedule = schedule or Schedule()
    if check_preconditions:
        for w, name in ((mu, "mu"), (nu, "nu")):
            for tau in (a, -a):
                est = enlarged_mass_ratio(w, tau, _wide(schedule))
                if not est.converged or not math.isfinite(est.value):
                    raise NotMassRatioLimited(
                        f"{name} lacks a finite enlarged-window ratio at shift {tau:g}"
                    )
        _require_oscillation(f, mu, nu, 0.0, schedule, 1e-3)
    return _collect(_MeanEngine(f, 0.0, mu=mu, nu=nu, shift=a), f, schedule, rel_floor)


def translation_invariance_probe(mu, nu, shifts=(1.0, 10.0, 100.0), schedule=None, probe=None):
    """Empirical check that decaying perturbations stay negligible in mean
    after translation; returns {shift: decayed} for a gaussian probe."""
    schedule = schedule or Schedule()
    probe = probe or ErgodicPerturbation.gaussian(1.0)
    out = {}
    for s in shifts:
        fshift = PAPFunction(ergodic=probe)
        engine = _MeanEngine(fshift, 0.0, mu=mu, nu=nu, shift=-float(s))
        # no early stop: the shifted mass only enters the window at T ~ s
        vals = [
            float(np.linalg.norm(engine.value_at(float(T)))) for T in schedule.radii()
        ]
        tail = vals[-3:]
        out[float(s)] = bool(
            all(b <= a * 1.05 + 1e-300 for a, b in zip(tail, tail[1:]))
            and vals[-1] < 1e-3
        )
    return out
