"""Positivity analysis and quadratic factorization of real polynomials.

A nonconstant real polynomial is an admissible weight exactly when it has
even degree, a positive leading coefficient, and no real roots; it then
factors as a * prod (x^2 + a_k x + b_k)^{m_k} with every a_k^2 - 4 b_k < 0.
Real roots are isolated by recursive derivative splitting plus sign-change
bisection (no eigenvalue machinery); the complex factorization comes from a
Durand-Kerner sweep whose cluster centroids are polished with the modified
Newton step on p/p', which restores full accuracy at multiple roots.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConstantPolynomial, DegenerateCoefficients, PapkitError

LEADING_FLOOR = 1e-12
PAIR_TOL = 1e-8
RECONSTRUCT_RTOL = 1e-8


def _as_coeffs(coeffs):
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficients must be a nonempty 1-d array (ascending)")
    return c


def _check_leading(c):
    top = abs(c[-1])
    if top < LEADING_FLOOR * np.max(np.abs(c)):
        raise DegenerateCoefficients(
            f"leading coefficient {c[-1]:.3g} is negligible next to the others"
        )


def polyval(c, x):
    """Horner evaluation of ascending coefficients at scalar or array x."""
    out = np.zeros_like(np.asarray(x, dtype=np.result_type(c, x, float)))
    for ck in c[::-1]:
        out = out * x + ck
    return out


def polyder(c):
    if len(c) <= 1:
        return np.zeros(1)
    return c[1:] * np.arange(1, len(c))


def cauchy_bound(c):
    """All roots lie in |x| <= 1 + max |c_k / c_n|."""
    return 1.0 + float(np.max(np.abs(c[:-1] / c[-1]))) if len(c) > 1 else 1.0


def _residual_scale(c, x):
    # sum |c_k| |x|^k, the natural backward-error scale of Horner evaluation
    out = np.zeros_like(np.asarray(x, dtype=np.float64))
    for ck in np.abs(c[::-1]):
        out = out * np.abs(x) + ck
    return out


def _bisect(c, lo, hi, iters=120):
    flo = float(polyval(c, lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = float(polyval(c, mid))
        if fm == 0.0:
            return mid
        if (flo < 0) == (fm < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def real_roots(coeffs, touch_rtol=1e-12):
    """All real roots (without multiplicity) via derivative splitting.

    Between consecutive critical points the polynomial is monotone, so a
    sign change pins a simple root for bisection; a critical value within
    rounding error of zero is reported as a (touching) root.
    """
    c = _as_coeffs(coeffs)
    c = np.trim_zeros(c, "b")
    if len(c) <= 1:
        return []
    if len(c) == 2:
        return [-c[0] / c[1]]
    crits = real_roots(polyder(c), touch_rtol)
    bound = cauchy_bound(c)
    pts = [-bound] + sorted(x for x in crits if -bound < x < bound) + [bound]
    roots = []
    for x in pts[1:-1]:
        if abs(polyval(c, x)) <= touch_rtol * _residual_scale(c, x):
            roots.append(float(x))
    for lo, hi in zip(pts[:-1], pts[1:]):
        flo, fhi = float(polyval(c, lo)), float(polyval(c, hi))
        if flo == 0.0:
            roots.append(lo)
            continue
        if (flo < 0) != (fhi < 0):
            roots.append(_bisect(c, lo, hi))
    out = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 1e-10 * max(1.0, abs(r)):
            out.append(r)
    return out


def is_strictly_positive(coeffs):
    """True when the polynomial is > 0 on the whole real line."""
    c = np.trim_zeros(_as_coeffs(coeffs), "b")
    if len(c) == 1:
        return c[0] > 0
    deg = len(c) - 1
    if deg % 2 or c[-1] <= 0 or polyval(c, 0.0) <= 0:
        return False
    return not real_roots(c)


def _durand_kerner(c, iters=500, tol=1e-14):
    monic = (c / c[-1]).astype(np.complex128)
    n = len(monic) - 1
    radius = max(1.0, 0.5 * cauchy_bound(c))
    roots = radius * (0.4 + 0.9j) ** np.arange(n)
    for _ in range(iters):
        vals = polyval(monic, roots)
        step = np.empty_like(roots)
        for k in range(n):
            diff = roots[k] - np.delete(roots, k)
            denom = np.prod(diff)
            step[k] = vals[k] / denom if denom != 0 else vals[k]
        roots = roots - step
        if np.max(np.abs(step)) < tol * max(1.0, np.max(np.abs(roots))):
            break
    return roots


def _polish_with_multiplicity(derivs, m, r, iters=80):
    """Newton on the (m-1)-th derivative, where the root is simple.

    Direct evaluation of p near an m-fold root drowns in rounding noise of
    relative size eps^(1/m); the lower derivative has a simple root there
    and restores full accuracy.
    """
    p = derivs[m - 1]
    dp = derivs[m]
    for _ in range(iters):
        fv = complex(polyval(p, r))
        dv = complex(polyval(dp, r))
        if dv == 0:
            break
        step = fv / dv
        r = r - step
        if abs(step) < 1e-16 * max(1.0, abs(r)):
            break
    return r


def _cluster(points, eps):
    """Greedy clustering; returns list of (centroid, size)."""
    remaining = list(points)
    clusters = []
    while remaining:
        seed = remaining.pop()
        members = [seed]
        changed = True
        while changed:
            changed = False
            for q in remaining[:]:
                if any(abs(q - m) <= eps * max(1.0, abs(m)) for m in members):
                    members.append(q)
                    remaining.remove(q)
                    changed = True
        clusters.append((sum(members) / len(members), len(members)))
    return clusters


def expand_factors(leading, factors):
    """Ascending coefficients of leading * prod (x^2 + a x + b)^m."""
    out = np.array([float(leading)])
    for a, b, m in factors:
        quad = np.array([b, a, 1.0])
        for _ in range(int(m)):
            out = np.convolve(out, quad)
    return out


@dataclass
class PolynomialWeightReport:
    member: bool
    reason: str = ""
    factors: list | None = None
    leading: float | None = None

    def to_json(self):
        d = {"member": self.member, "reason": self.reason}
        if self.member:
            d["leading"] = self.leading
            d["factors"] = [
                {"a": a, "b": b, "multiplicity": m} for a, b, m in self.factors
            ]
        return d


def polynomial_weight_report(coeffs):
    """Decide admissibility of a nonconstant polynomial weight and factor it.

    Membership requires even degree, positive leading coefficient, positive
    value at 0, and no real roots.  For members the quadratic factorization
    is recovered and verified by re-expansion to relative accuracy 1e-8.
    """
    c = _as_coeffs(coeffs)
    _check_leading(c)
    c = np.trim_zeros(c, "b")
    if len(c) <= 1:
        raise ConstantPolynomial("a nonconstant polynomial is required")
    deg = len(c) - 1
    if deg % 2:
        return PolynomialWeightReport(False, reason="odd degree")
    if c[-1] <= 0:
        return PolynomialWeightReport(False, reason="negative leading coefficient")
    if polyval(c, 0.0) <= 0:
        return PolynomialWeightReport(False, reason="nonpositive value at 0")
    if real_roots(c):
        return PolynomialWeightReport(False, reason="changes sign or touches zero")

    derivs = [c]
    for _ in range(deg):
        derivs.append(polyder(derivs[-1]))
    raw = _durand_kerner(c)
    upper = [r for r in raw if r.imag > 0]
    for eps in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 3e-2):
        clusters = _cluster(upper, eps)
        if sum(cnt for _, cnt in clusters) != deg // 2:
            continue
        factors = []
        for z0, m in clusters:
            z = _polish_with_multiplicity(derivs, m, z0)
            factors.append((-2.0 * z.real, abs(z) ** 2, m))
        factors.sort(key=lambda f: (f[1], f[0]))
        rebuilt = expand_factors(c[-1], factors)
        if len(rebuilt) == len(c) and np.max(np.abs(rebuilt - c)) <= (
            RECONSTRUCT_RTOL * np.max(np.abs(c))
        ):
            if all(a * a - 4.0 * b < 0 for a, b, _ in factors):
                return PolynomialWeightReport(
                    True, factors=factors, leading=float(c[-1])
                )
    raise PapkitError("quadratic factorization failed verification")
