"""Adaptive and composite quadrature helpers.

The adaptive rule is plain bisection with a fixed-order Simpson rule on each
panel; it backs the improper-integral cross-checks, kernel norms, and decay
masses where no closed form is wired in.
"""

import numpy as np

from .errors import QuadratureFailure

DEFAULT_TOL = 1e-9


def adaptive_integral(f, a, b, tol=DEFAULT_TOL, max_depth=60):
    """Integrate ``f`` (vectorized) over [a, b] to absolute tolerance ``tol``."""
    if a == b:
        return 0.0
    fa, fm, fb = (float(v) for v in f(np.array([a, 0.5 * (a + b), b])))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _adapt(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _adapt(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = (float(v) for v in f(np.array([lm, rm])))
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    if depth <= 0:
        raise QuadratureFailure(
            f"refinement limit reached on [{a:g}, {b:g}] with error {abs(err):.3g}"
        )
    return _adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + _adapt(
        f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1
    )


def simpson_nodes(a, b, n_panels):
    """Nodes and weights of the composite Simpson rule with n_panels (even >= 2)."""
    n_panels = int(n_panels)
    if n_panels % 2:
        n_panels += 1
    n_panels = max(n_panels, 2)
    x = np.linspace(a, b, n_panels + 1)
    h = (b - a) / n_panels
    w = np.full(n_panels + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * (h / 3.0)

