"""Truncation schedules and stabilized-limit bookkeeping.

Every T -> infinity limit in the toolkit is estimated along a geometric
truncation schedule T_j = t0 * 2**j.  An estimate counts as stabilized when
the last ``window`` values agree pairwise within the schedule tolerances;
doubling radii expose slow logarithmic drift that a linear schedule hides.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentRatio, NotConverged

DIVERGENCE_CAP = 1e6


@dataclass(frozen=True)
class Schedule:
    """Geometric truncation schedule with stabilization tolerances."""

    t0: float = 1.0
    doublings: int = 20
    rtol: float = 1e-3
    atol: float = 1e-12
    window: int = 3

    def __post_init__(self):
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        if self.doublings < self.window:
            raise ValueError("schedule shorter than its stabilization window")

    def radii(self):
        return self.t0 * 2.0 ** np.arange(self.doublings + 1)

    def close(self, a, b, scale=None):
        a = np.asarray(a)
        b = np.asarray(b)
        gap = float(np.max(np.abs(a - b)))
        if scale is None:
            scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
        return gap <= self.atol + self.rtol * scale

    def stabilized(self, values):
        """True when the last ``window`` entries agree pairwise."""
        if len(values) < self.window:
            return False
        tail = values[-self.window :]
        scale = max(float(np.max(np.abs(np.asarray(v)))) for v in tail)
        for i in range(len(tail)):
            for j in range(i + 1, len(tail)):
                if not self.close(tail[i], tail[j], scale):
                    return False
        return True


@dataclass
class MeanEstimate:
    """A truncated-limit estimate with its trace and convergence verdict."""

    value: object
    trace: list = field(default_factory=list)
    converged: bool = False
    tol_used: float = 1e-3

    def require(self, what="limit"):
        if not self.converged:
            raise NotConverged(f"{what} did not stabilize within the schedule")
        return self.value

    def trace_arrays(self):
        ts = np.array([t for t, _ in self.trace])
        vs = np.array([v for _, v in self.trace])
        return ts, vs


def run_schedule(schedule, level_value, what="limit", divergence_cap=None):
    """Evaluate ``level_value(T)`` along the schedule until stabilized.

    Returns a MeanEstimate.  When ``divergence_cap`` is set, a monotonically
    growing magnitude past the cap raises DivergentRatio instead.
    """
    trace = []
    values = []
    for T in schedule.radii():
        v = level_value(float(T))
        trace.append((float(T), v))
        values.append(v)
        if divergence_cap is not None and len(values) >= 3:
            mags = [float(np.max(np.abs(np.asarray(x)))) for x in values[-3:]]
            if mags[0] < mags[1] < mags[2] and mags[2] > divergence_cap:
                raise DivergentRatio(
                    f"{what} grew monotonically past {divergence_cap:g} "
                    f"(last estimate {mags[2]:.3g} at T={T:g})"
                )
        if schedule.stabilized(values):
            return MeanEstimate(
                value=values[-1], trace=trace, converged=True, tol_used=schedule.rtol
            )
    return MeanEstimate(
        value=values[-1], trace=trace, converged=False, tol_used=schedule.rtol
    )

