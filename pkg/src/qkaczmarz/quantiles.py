"""Order-statistic quantiles and the acceptable-row filter.

The quantile convention follows the order-statistic definition used by
quantile-filtered Kaczmarz methods: with n values sorted ascending, the
q-quantile is y_([nq]+1) when nq is not an integer and the midpoint of
y_(nq) and y_(nq+1) when it is.  q = 1 returns the maximum (the midpoint
rule would need y_(n+1)).
"""

import numpy as np

from . import matrices
from .errors import DimensionMismatch, EmptyAcceptableSet, EmptyInput

# nq within this distance of an integer is treated as integral.
_INT_TOL = 1e-9


def q_quantile(values, q):
    """Order-statistic q-quantile of a non-empty sequence, 0 < q <= 1."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInput("quantile of an empty sequence")
    if not 0.0 < q <= 1.0:
        raise EmptyInput(f"q must lie in (0, 1], got {q}")
    n = values.size
    nq = n * q
    k = round(nq)
    s = np.sort(values)
    if abs(nq - k) <= _INT_TOL * n:
        if k >= n:
            return float(s[-1])
        return float(0.5 * (s[k - 1] + s[k]))
    return float(s[int(np.floor(nq))])


def residual_quantile(A, x, b, q):
    """q-quantile of the absolute residuals |<a_i, x> - b_i| over all rows."""
    res = matrices.residuals(A, x, b)
    return q_quantile(np.abs(res), q)


def acceptable_set(abs_residuals, Q, strict=False):
    """Row indices whose residual passes the quantile threshold.

    strict=False keeps residuals <= Q (single-row sampling); strict=True
    keeps residuals < Q (averaged block).  Indices come back ascending.
    """
    abs_residuals = np.asarray(abs_residuals, dtype=float)
    if Q < 0:
        raise DimensionMismatch("threshold Q must be nonnegative")
    if strict:
        idx = np.flatnonzero(abs_residuals < Q)
    else:
        idx = np.flatnonzero(abs_residuals <= Q)
    if idx.size == 0:
        raise EmptyAcceptableSet("no residual passes the quantile threshold")
    return idx
