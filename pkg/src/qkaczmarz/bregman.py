"""The sparsifying regularizer lambda*||x||_1 + ||x||^2/2 and its geometry.

Provides soft shrinkage, the conjugate function, Bregman distances, the exact
1-D dual line search and the Bregman projection onto a hyperplane.  All
functions are pure; the primal/dual pair (x, x*) is kept consistent through
x = soft_shrink(x*, lam).
"""

import numpy as np

from .errors import DegenerateDirection, InvalidDualPair

PAIR_TOL = 1e-12


def soft_shrink(v, lam):
    """Componentwise max(|v|-lam, 0) * sign(v)."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def f_value(x, lam):
    """lam*||x||_1 + ||x||^2/2."""
    x = np.asarray(x, dtype=float)
    return float(lam * np.abs(x).sum() + 0.5 * np.dot(x, x))


def conjugate_value(x_star, lam):
    """Fenchel conjugate of f, in closed form ||soft_shrink(x*, lam)||^2 / 2.

    The supremum sup_z <x*, z> - f(z) separates per coordinate; each 1-D
    problem is maximized at z = soft_shrink(x*, lam), which collapses to the
    closed form above.
    """
    s = soft_shrink(x_star, lam)
    return float(0.5 * np.dot(s, s))


def validate_pair(x, x_star, lam, tol=PAIR_TOL):
    """Check x = soft_shrink(x*, lam) and subgradient membership.

    Tolerance scales with (1 + ||x*||_inf) to absorb accumulation over long
    solver runs.
    """
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    scale = 1.0 + np.abs(x_star).max(initial=0.0)
    if x.shape != x_star.shape:
        raise InvalidDualPair("primal and dual lengths differ")
    if np.abs(x - soft_shrink(x_star, lam)).max(initial=0.0) > tol * scale:
        raise InvalidDualPair("x != soft_shrink(x*, lam)")
    diff = x_star - x
    if np.abs(diff).max(initial=0.0) > lam + tol * scale:
        raise InvalidDualPair("|x*_j - x_j| exceeds lambda")
    on = x != 0
    if np.any(np.abs(diff[on] - lam * np.sign(x[on])) > tol * scale):
        raise InvalidDualPair("x* - x != lam*sign(x) on the support")


def bregman_distance(x, x_star, y, lam, validate=True):
    """D(x, y) = f(y) - f(x) - <x*, y - x> for the pair (x, x*)."""
    if validate:
        validate_pair(x, x_star, lam)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    return f_value(y, lam) - f_value(x, lam) - float(np.dot(x_star, y - x))


def exact_step(x_star, a, b, lam):
    """Solve argmin_t f*(x* - t a) + t b by breakpoint search.

    Optimality means g(t) := <a, soft_shrink(x* - t a, lam)> - b = 0.  g is
    continuous, piecewise linear and nonincreasing in t, with kinks only at
    the <= 2n points where x*_j - t a_j = +-lam.  We locate the bracketing
    segment from the sorted kinks and solve the linear piece exactly.
    """
    x_star = np.asarray(x_star, dtype=float)
    a = np.asarray(a, dtype=float)
    a_sq = float(np.dot(a, a))
    if a_sq == 0.0:
        raise DegenerateDirection("a must be nonzero")

    live = a != 0
    if lam == 0.0:
        # Quadratic case: g(t) = <a, x*> - t ||a||^2 - b.
        return (float(np.dot(a, x_star)) - b) / a_sq

    bps = np.concatenate(
        [
            (x_star[live] - lam) / a[live],
            (x_star[live] + lam) / a[live],
        ]
    )
    bps = np.unique(bps)
    # evaluate g at every kink in one shot; components with a_j = 0 never
    # contribute to the inner product
    a_live = a[live]
    Z = x_star[live][None, :] - bps[:, None] * a_live[None, :]
    gvals = soft_shrink(Z, lam) @ a_live - b

    if gvals[0] <= 0.0:
        # Root left of every kink, where all live components are active and
        # the slope is -||a||^2.
        return bps[0] + gvals[0] / a_sq
    if gvals[-1] > 0.0:
        # Root right of every kink; slope is again -||a||^2 out there.
        return bps[-1] + gvals[-1] / a_sq

    # g is nonincreasing: first kink with g <= 0 closes the bracket.
    hi = int(np.argmax(gvals <= 0.0))
    lo = hi - 1
    g_lo, g_hi = gvals[lo], gvals[hi]
    if g_hi == 0.0:
        return float(bps[hi])
    if g_lo == g_hi:
        # Flat zero segment; kink convention.
        return float(bps[lo])
    return float(bps[lo] + g_lo * (bps[hi] - bps[lo]) / (g_lo - g_hi))


def bregman_project_hyperplane(x, x_star, a, b, lam):
    """Bregman projection of (x, x*) onto the hyperplane <a, y> = b.

    Returns the new pair (z, z*) with z* = x* - t_hat * a and
    z = soft_shrink(z*, lam); the exact line search puts z on the hyperplane.
    """
    t_hat = exact_step(x_star, a, b, lam)
    z_star = np.asarray(x_star, dtype=float) - t_hat * np.asarray(a, dtype=float)
    return soft_shrink(z_star, lam), z_star
