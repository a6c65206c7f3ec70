"""Pure NumPy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

_MAX_NEWTON = 100


def resolvent_magnitude(r, p):
    """Root s >= 0 of s**(p-1) + s = r, elementwise.

    Newton's method in x = log(s): f(x) = exp((p-1) x) + exp(x) - r is convex
    and increasing, so iterates started above the root decrease
    monotonically to it.  The start is the upper bound min(r, r**(1/(p-1))).
    Iteration stops once the log-step drops below 1e-10; by quadratic
    convergence the error after that step is at rounding level.
    """
    r = np.asarray(r, dtype=float)
    if p == 2.0:
        return 0.5 * r
    q = p - 1.0
    with np.errstate(over="ignore", under="ignore"):
        s = np.minimum(r, r ** (1.0 / q))
    active = np.nonzero(s > 0.0)[0]  # r = 0 or an underflowing root
    for _ in range(_MAX_NEWTON):
        if active.size == 0:
            break
        sa = s[active]
        sq = sa**q
        step = (sq + sa - r[active]) / (q * sq + sa)
        s[active] = sa * np.exp(-step)
        active = active[step > 1e-10]
    return s


def resolvent_field(w, p):
    """nu with |nu|**(p-2) nu + nu = w for every row of ``w`` (M, 2)."""
    w = np.asarray(w, dtype=float)
    r = np.hypot(w[:, 0], w[:, 1])
    s = resolvent_magnitude(r, p)
    scale = np.divide(s, r, out=np.zeros_like(r), where=r > 0.0)
    return w * scale[:, None]


def dc_update(xi, grad, p):
    """Pointwise steps of the splitting.

    Returns ``(xi_next, nu, residual)`` where nu solves the resolvent
    equation for ``xi + grad``, ``xi_next = xi + grad - nu`` and residual is
    max |grad - nu|.
    """
    w = xi + grad
    nu = resolvent_field(w, p)
    d = grad - nu
    resid = float(np.sqrt((d * d).sum(axis=1).max())) if len(d) else 0.0
    return w - nu, nu, resid
