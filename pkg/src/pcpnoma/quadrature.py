"""Globally adaptive 21-point Gauss-Kronrod quadrature.

The kernel integrates a vector-valued integrand ``f(x, args) -> (len(x), k)``
over a union of panels, bisecting the panel with the largest scaled error
until every component meets ``max(abs_tol, rel_tol * |I_j|)``.  It is written
so that the same source runs compiled (numba) or as plain numpy; integrands
passed to it must be decorated with :func:`pcpnoma._jit.jit` as well.

Failure is reported through the returned ``ok`` flag (and NaNs propagate), so
nested integrals can signal non-convergence without raising inside compiled
code.  :func:`integrate` is the Python-facing wrapper that raises.
"""

import dataclasses

import numpy as np

from ._jit import jit
from .exceptions import NumericalError

# QUADPACK qk21 abscissae/weights (Kronrod extension of the 10-point Gauss rule).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208031125917,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate((-_XGK[:10], _XGK[10:], _XGK[9::-1]))
KRONROD_WEIGHTS = np.concatenate((_WGK[:10], _WGK[10:], _WGK[9::-1]))
GAUSS_WEIGHTS = np.zeros(21)
for _i in range(5):
    GAUSS_WEIGHTS[2 * _i + 1] = _WG[_i]
    GAUSS_WEIGHTS[19 - 2 * _i] = _WG[_i]
del _i

_EPMACH = np.finfo(np.float64).eps
_UFLOW = np.finfo(np.float64).tiny


@dataclasses.dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances shared by every integral in the analytic engine.

    ``tail_cutoff_multiplier`` places the split between the finite part and
    the mapped infinite tail of the inter-cluster integral, in units of
    ``max(R, (s P_u)^(1/alpha))``.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 400
    tail_cutoff_multiplier: float = 4.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be > 0")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not self.tail_cutoff_multiplier > 1:
            raise ValueError("tail_cutoff_multiplier must be > 1")


DEFAULT_QUADRATURE = QuadratureConfig()


@jit(cache=False)
def gk_panel(f, a, b, args, k):
    """One 21-point Kronrod panel: estimates and QUADPACK-style error bounds."""
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    y = f(center + half * NODES, args)
    res = np.empty(k)
    err = np.empty(k)
    ahalf = abs(half)
    for j in range(k):
        rk = 0.0
        rg = 0.0
        resabs = 0.0
        for i in range(21):
            v = y[i, j]
            rk += KRONROD_WEIGHTS[i] * v
            rg += GAUSS_WEIGHTS[i] * v
            resabs += KRONROD_WEIGHTS[i] * abs(v)
        mean = 0.5 * rk
        resasc = 0.0
        for i in range(21):
            resasc += KRONROD_WEIGHTS[i] * abs(y[i, j] - mean)
        rk *= half
        e = abs(rk - rg * half)
        resabs *= ahalf
        resasc *= ahalf
        if resasc != 0.0 and e != 0.0:
            e = resasc * min(1.0, (200.0 * e / resasc) ** 1.5)
        if resabs > _UFLOW / (50.0 * _EPMACH):
            e = max(50.0 * _EPMACH * resabs, e)
        res[j] = rk
        err[j] = e
    return res, err


@jit(cache=False)
def gk_integrate(f, points, args, k, abs_tol, rel_tol, max_sub):
    """Adaptive integral of ``f`` over ``[points[0], points[-1]]``.

    ``points`` are initial breakpoints (sorted).  Returns ``(value, error,
    ok)`` with ``value`` and ``error`` of shape ``(k,)``.
    """
    nseg = points.size - 1
    cap = max(max_sub, nseg)
    lo = np.empty(cap)
    hi = np.empty(cap)
    vals = np.zeros((cap, k))
    errs = np.zeros((cap, k))
    n = 0
    for s in range(nseg):
        a = points[s]
        b = points[s + 1]
        if b <= a:
            continue
        r, e = gk_panel(f, a, b, args, k)
        lo[n] = a
        hi[n] = b
        vals[n, :] = r
        errs[n, :] = e
        n += 1
    total = np.zeros(k)
    toterr = np.zeros(k)
    if n == 0:
        return total, toterr, True
    while True:
        total[:] = 0.0
        toterr[:] = 0.0
        for i in range(n):
            total += vals[i]
            toterr += errs[i]
        if not (np.all(np.isfinite(total)) and np.all(np.isfinite(toterr))):
            return total, toterr, False
        done = True
        for j in range(k):
            if toterr[j] > max(abs_tol, rel_tol * abs(total[j])):
                done = False
                break
        if done:
            return total, toterr, True
        if n >= cap:
            return total, toterr, False
        # bisect the panel with the largest tolerance-scaled error
        worst = 0
        worst_score = -1.0
        for i in range(n):
            score = 0.0
            for j in range(k):
                tol = max(abs_tol, rel_tol * abs(total[j]))
                sc = errs[i, j] / tol
                if sc > score:
                    score = sc
            if score > worst_score:
                worst_score = score
                worst = i
        a = lo[worst]
        b = hi[worst]
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            return total, toterr, False
        r1, e1 = gk_panel(f, a, mid, args, k)
        r2, e2 = gk_panel(f, mid, b, args, k)
        hi[worst] = mid
        vals[worst, :] = r1
        errs[worst, :] = e1
        lo[n] = mid
        hi[n] = b
        vals[n, :] = r2
        errs[n, :] = e2
        n += 1


def integrate(f, points, args=(), k=1, config=None, what="integral", full_output=False):
    """Integrate a jit-compatible vector integrand, raising on failure.

    Parameters
    ----------
    f : callable
        ``f(x, args)`` returning an array of shape ``(len(x), k)``.
    points : sequence of float
        Sorted breakpoints; the first and last are the integration limits.
    """
    config = config or DEFAULT_QUADRATURE
    pts = np.asarray(points, dtype=np.float64)
    value, error, ok = gk_integrate(f, pts, args, k, config.abs_tol, config.rel_tol,
                                    int(config.max_subdivisions))
    if not ok:
        raise NumericalError(
            f"{what} did not converge",
            {"value": value.copy(), "error": error.copy(), "limits": (pts[0], pts[-1]),
             "abs_tol": config.abs_tol, "rel_tol": config.rel_tol,
             "max_subdivisions": config.max_subdivisions},
        )
    if full_output:
        return value, error
    return value
