"""Laplace transforms of the intra- and inter-cluster interference.

Under Rayleigh fading an interferer at distance ``r`` contributes the factor
``1 / (1 + s P_u r^-alpha)`` to the Laplace transform; everything below is an
average of products of that factor over the relevant distance laws.  We work
with ``w = s * P_u`` throughout and integrate the complementary factor
``w / (r^alpha + w)`` so that small arguments keep full relative precision.
"""

import math

import numpy as np

from ._jit import jit
from .exceptions import DomainError, NumericalError, UnsupportedConfiguration
from .geometry import _arc_fraction_angle, _inner_rank_pdf
from .params import NetworkParams, check_rank
from .quadrature import DEFAULT_QUADRATURE, gk_integrate
from .special import beta_fn, incomplete_beta, log_beta  # noqa: F401  (re-exported)

# ----------------------------------------------------------------------------
# intra-cluster, perfect SIC


@jit
def _outer_miss_integrand(x, args):
    w, alpha, scale = args
    out = np.empty((x.size, 1))
    for i in range(x.size):
        r = x[i]
        out[i, 0] = w / (r ** alpha + w) * r * scale
    return out


@jit(cache=False)
def outer_interferer_factor(w, rhat, R, alpha, closed4, abs_tol, rel_tol, max_sub):
    """E[1/(1 + w r^-alpha)] for r drawn from the outer conditional law.

    Returns ``(value, ok)``.  ``closed4`` selects the arctan form (alpha = 4).
    """
    if w <= 0.0:
        return 1.0, True
    if rhat >= R:
        # all outer users sit at distance R in the limit
        return R ** alpha / (R ** alpha + w), True
    d = R * R - rhat * rhat
    if closed4:
        sw = math.sqrt(w)
        return 1.0 - sw * math.atan(sw * d / (w + rhat * rhat * R * R)) / d, True
    pts = np.array([rhat, R])
    knee = w ** (1.0 / alpha)
    if rhat < knee < R:
        pts = np.array([rhat, knee, R])
    val, err, ok = gk_integrate(_outer_miss_integrand, pts, (w, alpha, 2.0 / d), 1,
                                abs_tol, rel_tol, max_sub)
    return 1.0 - val[0], ok


# ----------------------------------------------------------------------------
# intra-cluster, undetected closer users


@jit
def _closer_miss_integrand(x, args):
    # one column per closer rank j = 1..m-1 of a fixed rank m
    w, alpha, rhat, m = args
    out = np.empty((x.size, m - 1))
    for j in range(1, m):
        pdf = _inner_rank_pdf(x, j, m, rhat)
        for i in range(x.size):
            out[i, j - 1] = w / (x[i] ** alpha + w) * pdf[i]
    return out


@jit(cache=False)
def closer_interferer_factors(w, rhat, alpha, m, abs_tol, rel_tol, max_sub):
    """E[1/(1 + w r_(j)^-alpha) | r_(m) = rhat] for j = 1..m-1 (fixed ``m``).

    Returns ``(values, ok)``.
    """
    if m <= 1:
        return np.ones(0), True
    if w <= 0.0:
        return np.ones(m - 1), True
    pts = np.array([0.0, rhat])
    knee = w ** (1.0 / alpha)
    if 0.0 < knee < rhat:
        pts = np.array([0.0, knee, rhat])
    val, err, ok = gk_integrate(_closer_miss_integrand, pts, (w, alpha, rhat, m), m - 1,
                                abs_tol, rel_tol, max_sub)
    return 1.0 - val, ok


# ----------------------------------------------------------------------------
# inter-cluster


@jit
def _disk_miss_integrand(x, args):
    w, alpha, R = args
    out = np.empty((x.size, 1))
    for i in range(x.size):
        u = x[i]
        out[i, 0] = w / (u ** alpha + w) * 2.0 * u / (R * R)
    return out


@jit
def _ring_miss_integrand(theta, args):
    # u = center - half * cos(theta) removes the square-root behaviour of the
    # arc-length density at both ends of the ring
    w, alpha, v, R, center, half = args
    out = np.empty((theta.size, 1))
    inv = 2.0 / (math.pi * R * R)
    for i in range(theta.size):
        u = center - half * math.cos(theta[i])
        if u <= 0.0:
            out[i, 0] = 0.0
            continue
        dens = inv * u * _arc_fraction_angle(u, v, R)
        out[i, 0] = w / (u ** alpha + w) * dens * half * math.sin(theta[i])
    return out


@jit(cache=False)
def cluster_miss(w, v, R, alpha, abs_tol, rel_tol, max_sub):
    """1 - E[1/(1 + w u^-alpha)] for one user of a cluster centred at distance v."""
    total = 0.0
    ok = True
    if v < R:
        a = R - v
        knee = w ** (1.0 / alpha)
        pts = np.array([0.0, a])
        if 0.0 < knee < a:
            pts = np.array([0.0, knee, a])
        val, err, ok1 = gk_integrate(_disk_miss_integrand, pts, (w, alpha, R), 1,
                                     abs_tol, rel_tol, max_sub)
        total += val[0]
        ok = ok and ok1
        lo = a
    else:
        lo = v - R
    hi = v + R
    if v > 0.0 and hi > lo:
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        val, err, ok2 = gk_integrate(_ring_miss_integrand, np.array([0.0, math.pi]),
                                     (w, alpha, v, R, center, half), 1,
                                     abs_tol, rel_tol, max_sub)
        total += val[0]
        ok = ok and ok2
    return total, ok


@jit(cache=False)
def _cluster_outer_integrand(x, args):
    w, alpha, R, c, abs_tol, rel_tol, max_sub = args
    out = np.empty((x.size, 1))
    for i in range(x.size):
        v = x[i]
        miss, ok = cluster_miss(w, v, R, alpha, abs_tol, rel_tol, max_sub)
        if not ok:
            out[i, 0] = np.nan
        else:
            out[i, 0] = -math.expm1(c * math.log1p(-miss)) * v
    return out


@jit(cache=False)
def _cluster_tail_integrand(x, args):
    # v = vcut / t maps [vcut, inf) onto (0, 1]
    w, alpha, R, c, vcut, abs_tol, rel_tol, max_sub = args
    out = np.empty((x.size, 1))
    for i in range(x.size):
        t = x[i]
        v = vcut / t
        miss, ok = cluster_miss(w, v, R, alpha, abs_tol, rel_tol, max_sub)
        if not ok:
            out[i, 0] = np.nan
        else:
            out[i, 0] = -math.expm1(c * math.log1p(-miss)) * v * vcut / (t * t)
    return out


@jit(cache=False)
def inter_exponent(w, R, alpha, c, tail_mult, abs_tol, rel_tol, max_sub):
    """A = int_0^inf (1 - (E_u[1/(1 + w u^-alpha)])^c) v dv; L = exp(-2 pi lambda A).

    Returns ``(A, ok)``.
    """
    if w <= 0.0:
        return 0.0, True
    inner_abs = abs_tol * 1e-2
    knee = w ** (1.0 / alpha)
    vcut = R + tail_mult * max(R, knee)
    near = np.array([0.0, R])
    if 0.0 < knee < R:
        near = np.array([0.0, knee, R])
    args = (w, alpha, R, float(c), inner_abs, rel_tol, max_sub)
    a1, e1, ok1 = gk_integrate(_cluster_outer_integrand, near, args, 1, abs_tol, rel_tol, max_sub)
    mid = np.array([R, vcut])
    if R < knee < vcut:
        mid = np.array([R, knee, vcut])
    a2, e2, ok2 = gk_integrate(_cluster_outer_integrand, mid, args, 1, abs_tol, rel_tol, max_sub)
    targs = (w, alpha, R, float(c), vcut, inner_abs, rel_tol, max_sub)
    a3, e3, ok3 = gk_integrate(_cluster_tail_integrand, np.array([0.0, 1.0]), targs, 1,
                               abs_tol, rel_tol, max_sub)
    return a1[0] + a2[0] + a3[0], ok1 and ok2 and ok3


@jit
def bound_exponent(w, alpha, c):
    """pi (s P_u)^(2/alpha) c B(1 - 2/alpha, c + 2/alpha); L_bound = exp(-lambda * this)."""
    if w <= 0.0:
        return 0.0
    d = 2.0 / alpha
    logb = math.lgamma(1.0 - d) + math.lgamma(c + d) - math.lgamma(c + 1.0)
    return math.pi * w ** d * c * math.exp(logb)


# ----------------------------------------------------------------------------
# public API


def _s_array(s):
    arr = np.asarray(s, dtype=np.float64)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("Laplace argument s must be >= 0")
    return arr


def _shape_like(values, arr):
    values = np.asarray(values).reshape(arr.shape)
    return float(values) if arr.ndim == 0 else values


def _check_rhat(rhat, R):
    if not 0 < rhat <= R:
        raise DomainError(f"conditioning distance rhat={rhat!r} must lie in (0, R={R}]")


def laplace_intra_perfect(s, m, rhat, params: NetworkParams, config=None, closed_form=None):
    """Intra-cluster Laplace transform for rank ``m`` after perfect SIC.

    ``[E(1 / (1 + s P_u r^-alpha))]^(c - m)`` with ``r`` on the outer
    conditional law given ``r_(m) = rhat``.  Uses the arctan closed form
    when ``alpha == 4`` (unless ``closed_form=False``), adaptive quadrature
    otherwise.
    """
    c = params.users_per_cluster
    m = check_rank(m, c)
    R = params.cluster_radius
    _check_rhat(rhat, R)
    config = config or DEFAULT_QUADRATURE
    alpha = params.pathloss_exponent
    if closed_form is None:
        closed_form = alpha == 4.0
    elif closed_form and alpha != 4.0:
        raise UnsupportedConfiguration("the arctan closed form needs alpha = 4")
    arr = _s_array(s)
    out = np.empty(arr.size)
    for i, si in enumerate(arr.ravel()):
        if m == c:
            out[i] = 1.0
            continue
        val, ok = outer_interferer_factor(si * params.tx_power, float(rhat), R, alpha,
                                          bool(closed_form), config.abs_tol, config.rel_tol,
                                          int(config.max_subdivisions))
        if not ok:
            raise NumericalError("intra-cluster Laplace integral did not converge",
                                 {"s": si, "m": m, "rhat": rhat})
        out[i] = val ** (c - m)
    return _shape_like(out, arr)


def laplace_intra_perfect_alpha4(s, m, rhat, params: NetworkParams):
    """Arctan closed form of :func:`laplace_intra_perfect`, alpha = 4 only."""
    if params.pathloss_exponent != 4.0:
        raise UnsupportedConfiguration("the arctan closed form needs alpha = 4")
    return laplace_intra_perfect(s, m, rhat, params, closed_form=True)


def _check_combination(b, m):
    b = tuple(int(x) for x in b)
    if len(b) != m - 1 or any(x not in (0, 1) for x in b):
        raise DomainError(f"combination must hold exactly m-1={m - 1} bits in {{0, 1}}")
    return b


def laplace_intra_additional(s, m, rhat, b, params: NetworkParams, config=None):
    """Laplace transform of the undetected closer users' interference.

    ``b[j-1] == 1`` marks rank ``j`` as detected (cancelled).  Each undetected
    rank contributes an independent factor averaged over its conditional
    rank law, treating the closer ranks as independent.
    """
    c = params.users_per_cluster
    m = check_rank(m, c)
    b = _check_combination(b, m)
    R = params.cluster_radius
    _check_rhat(rhat, R)
    config = config or DEFAULT_QUADRATURE
    arr = _s_array(s)
    out = np.ones(arr.size)
    if all(b):
        return _shape_like(out, arr)
    for i, si in enumerate(arr.ravel()):
        factors, ok = closer_interferer_factors(si * params.tx_power, float(rhat),
                                                params.pathloss_exponent, m, config.abs_tol,
                                                config.rel_tol, int(config.max_subdivisions))
        if not ok:
            raise NumericalError("closer-user Laplace integral did not converge",
                                 {"s": si, "m": m, "rhat": rhat})
        for j, bit in enumerate(b, start=1):
            if not bit:
                out[i] *= factors[j - 1]
    return _shape_like(out, arr)


def laplace_intra_imperfect(s, m, rhat, b, params: NetworkParams, config=None):
    """Intra-cluster transform under imperfect SIC for detection pattern ``b``."""
    return (np.asarray(laplace_intra_perfect(s, m, rhat, params, config))
            * np.asarray(laplace_intra_additional(s, m, rhat, b, params, config)))[()]


def laplace_inter_exact(s, params: NetworkParams, config=None, cluster_size=None):
    """Inter-cluster Laplace transform from the PGFL of the parent PPP.

    ``cluster_size`` is the number of simultaneously active users per
    interfering cluster (default ``c``; 1 for TDMA).
    """
    config = config or DEFAULT_QUADRATURE
    c = params.users_per_cluster if cluster_size is None else int(cluster_size)
    arr = _s_array(s)
    out = np.empty(arr.size)
    lam = params.bs_intensity
    for i, si in enumerate(arr.ravel()):
        if lam == 0.0 or si == 0.0:
            out[i] = 1.0
            continue
        A, ok = inter_exponent(si * params.tx_power, params.cluster_radius,
                               params.pathloss_exponent, c, config.tail_cutoff_multiplier,
                               config.abs_tol, config.rel_tol, int(config.max_subdivisions))
        if not ok or not math.isfinite(A):
            raise NumericalError("inter-cluster Laplace integral did not converge",
                                 {"s": si, "cluster_size": c, "partial": A})
        out[i] = math.exp(-2.0 * math.pi * lam * A)
    return _shape_like(out, arr)


def laplace_inter_bound(s, params: NetworkParams, cluster_size=None):
    """Jensen closed form ``exp(-pi lambda (s P_u)^(2/alpha) c B(1-2/alpha, c+2/alpha))``.

    Moving the c-th power inside the expectation co-locates the users of each
    interfering cluster; the result is never below :func:`laplace_inter_exact`.
    """
    alpha = params.pathloss_exponent
    if not alpha > 2:
        raise DomainError("the Beta argument 1 - 2/alpha must be positive (alpha > 2)")
    c = params.users_per_cluster if cluster_size is None else int(cluster_size)
    arr = _s_array(s)
    out = np.array([math.exp(-params.bs_intensity * bound_exponent(si * params.tx_power, alpha, c))
                    for si in arr.ravel()])
    return _shape_like(out, arr)
