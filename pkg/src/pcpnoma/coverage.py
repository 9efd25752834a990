"""Analytic rate coverage for perfect, imperfect and worst-case SIC and TDMA.

Every per-rank quantity is one integral over the serving distance
``rhat = r_(m)``::

    int_0^R exp(-gamma N0 rhat^alpha / P_u) L_intra(.) L_inter(.) f_m(rhat) drhat

with the transforms evaluated at ``s = gamma rhat^alpha / P_u``.  Under
imperfect SIC the integrand gains one factor per undetected closer user, and
all ``2^(m-1)`` detection patterns of rank ``m`` are carried as columns of a
single vector integral.
"""

import dataclasses
import functools
import math

import numpy as np
from scipy import integrate as _integrate

from ._jit import jit
from .exceptions import DomainError, NumericalError, UnsupportedConfiguration
from .laplace import (bound_exponent, closer_interferer_factors, inter_exponent,
                      outer_interferer_factor)
from .params import NetworkParams, SicMode, check_rank
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig, gk_integrate
from .special import beta_fn, hyp1f1, log_beta

#: Largest cluster size for which detection patterns are enumerated exactly.
COMBINATION_CAP = 16

_INTER_NONE, _INTER_EXACT, _INTER_BOUND = 0, 1, 2
_INTRA_NONE, _INTRA_QUAD, _INTRA_ARCTAN = 0, 1, 2


@dataclasses.dataclass(frozen=True)
class CoverageOptions:
    """Switches of the analytic engine.

    use_inter_bound
        Replace the exact inter-cluster transform by its Jensen closed form.
    interference_limited
        Drop the noise term (N0 = 0).
    closed_form_alpha4
        Use the arctan form of the intra-cluster factor when alpha = 4.
    """

    use_inter_bound: bool = False
    interference_limited: bool = False
    closed_form_alpha4: bool = True
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE


DEFAULT_OPTIONS = CoverageOptions()


@dataclasses.dataclass(frozen=True)
class DetectionProfile:
    """Per-rank probabilities that rank ``m`` is detected against ``theta``."""

    p: tuple
    theta: float
    worst_case: bool = False

    def __getitem__(self, m):
        return self.p[m - 1]

    def as_array(self):
        return np.array(self.p)


@dataclasses.dataclass(frozen=True)
class RateResult:
    value: float
    diverged: bool
    units: str


# ----------------------------------------------------------------------------
# kernel


@jit(cache=False)
def _coverage_integrand(x, args):
    (m, c, R, alpha, gamma, noise, inter_kind, lam, inter_c, tail_mult,
     intra_kind, combos, abs_tol, rel_tol, max_sub) = args
    ncol = 1
    if combos:
        ncol = 1 << (m - 1)
    out = np.zeros((x.size, ncol))
    lognorm = math.log(2.0) - 2 * m * math.log(R) - (
        math.lgamma(m) + math.lgamma(c - m + 1) - math.lgamma(c + 1))
    vals = np.empty(ncol)
    for i in range(x.size):
        r = x[i]
        if r <= 0.0 or r > R:
            continue
        if c > m and r >= R:
            continue
        base = lognorm + (2 * m - 1) * math.log(r)
        if c > m:
            base += (c - m) * math.log1p(-(r / R) ** 2)
        w = gamma * r ** alpha
        base -= noise * w
        if inter_kind == 1:
            A, ok = inter_exponent(w, R, alpha, inter_c, tail_mult, abs_tol, rel_tol, max_sub)
            if not ok:
                out[i, :] = np.nan
                continue
            base -= 2.0 * math.pi * lam * A
        elif inter_kind == 2:
            base -= lam * bound_exponent(w, alpha, inter_c)
        f = math.exp(base)
        if intra_kind > 0 and c > m:
            g, ok = outer_interferer_factor(w, r, R, alpha, intra_kind == 2,
                                            abs_tol, rel_tol, max_sub)
            if not ok:
                out[i, :] = np.nan
                continue
            f *= g ** (c - m)
        if not combos or m == 1:
            out[i, 0] = f
            continue
        phi, ok = closer_interferer_factors(w, r, alpha, m, abs_tol, rel_tol, max_sub)
        if not ok:
            out[i, :] = np.nan
            continue
        # column index bit (j-1) set <=> rank j detected (its factor drops out)
        vals[0] = f
        size = 1
        for j in range(m - 1):
            for t in range(size):
                vals[size + t] = vals[t]
                vals[t] = vals[t] * phi[j]
            size *= 2
        out[i, :] = vals
    return out


@functools.lru_cache(maxsize=4096)
def _rank_integrals(m, gamma, params, options, combos=False, oma=False):
    c = params.users_per_cluster
    R = params.cluster_radius
    alpha = params.pathloss_exponent
    q = options.quadrature
    if options.use_inter_bound:
        inter_kind = _INTER_BOUND
    else:
        inter_kind = _INTER_EXACT
    if params.bs_intensity == 0.0:
        inter_kind = _INTER_NONE
    if oma:
        intra_kind = _INTRA_NONE
    elif alpha == 4.0 and options.closed_form_alpha4:
        intra_kind = _INTRA_ARCTAN
    else:
        intra_kind = _INTRA_QUAD
    noise = 0.0 if options.interference_limited else params.noise_power / params.tx_power
    args = (int(m), int(c), float(R), float(alpha), float(gamma), float(noise), inter_kind,
            float(params.bs_intensity), float(1 if oma else c), float(q.tail_cutoff_multiplier),
            intra_kind, bool(combos), float(q.abs_tol), float(q.rel_tol),
            int(q.max_subdivisions))
    ncol = 2 ** (m - 1) if combos else 1
    pts = np.linspace(0.0, R, 5)
    value, error, ok = gk_integrate(_coverage_integrand, pts, args, ncol, q.abs_tol, q.rel_tol,
                                    int(q.max_subdivisions))
    if not ok:
        raise NumericalError("coverage integral did not converge",
                             {"m": m, "gamma": gamma, "value": value[:8].copy(),
                              "error": error[:8].copy()})
    value = np.clip(value, 0.0, 1.0)
    value.setflags(write=False)
    return value


def _check_target(gamma, name="SINR target"):
    gamma = float(gamma)
    if not gamma > 0 or not math.isfinite(gamma):
        raise DomainError(f"{name} must be a finite number > 0 (got {gamma!r})")
    return gamma


def _check_cap(c):
    if c > COMBINATION_CAP:
        raise UnsupportedConfiguration(
            f"exact enumeration of detection patterns is limited to {COMBINATION_CAP} users "
            f"per cluster (got {c}); use the worst-case mode or the simulator")


# ----------------------------------------------------------------------------
# perfect SIC


def coverage_perfect(m, gamma, params: NetworkParams, options=None):
    """P(SINR_m >= gamma) for rank ``m`` when every closer user is cancelled."""
    m = check_rank(m, params.users_per_cluster)
    gamma = _check_target(gamma)
    return float(_rank_integrals(m, gamma, params, options or DEFAULT_OPTIONS)[0])


def coverage_perfect_series_alpha4(m, gamma, params: NetworkParams, quadrature=None):
    """Interference-limited alpha = 4 coverage as a finite binomial sum.

    With ``z = rhat^2 / R^2`` the arctan bracket splits into
    ``(1 - sqrt(g) z acot(sqrt(g) z)) + z (sqrt(g) acot(sqrt(g)) - 1)``; its
    ``(1 - z)`` denominator cancels against the rank law, leaving

        sum_i G(i) int_0^1 z^(c-1-i) (1 - sqrt(g) z acot(sqrt(g) z))^i
              exp(-pi lambda sqrt(g) R^2 c B(1/2, c+1/2) z) dz

    with ``G(i) = (sqrt(g) acot(sqrt(g)) - 1)^(c-m-i) C(c-m, i) / B(m, 1+c-m)``.
    Uses the Jensen form of the inter-cluster transform, so it equals
    :func:`coverage_perfect` with ``use_inter_bound`` and ``interference_limited``.
    """
    if params.pathloss_exponent != 4.0:
        raise UnsupportedConfiguration("the series form needs alpha = 4")
    c = params.users_per_cluster
    m = check_rank(m, c)
    gamma = _check_target(gamma)
    q = quadrature or DEFAULT_QUADRATURE
    sg = math.sqrt(gamma)
    R = params.cluster_radius
    expo = math.pi * params.bs_intensity * sg * R * R * c * beta_fn(0.5, c + 0.5)
    n = c - m
    value, error, ok = gk_integrate(_series_integrand, np.array([0.0, 0.5, 1.0]),
                                    (m, c, sg, expo), n + 1, q.abs_tol * 1e-2, q.rel_tol,
                                    int(q.max_subdivisions))
    if not ok:
        raise NumericalError("series integral did not converge", {"m": m, "gamma": gamma})
    head = sg * math.atan2(1.0, sg) - 1.0
    lb = log_beta(m, 1 + n)
    total = 0.0
    for i in range(n + 1):
        total += head ** (n - i) * math.comb(n, i) * math.exp(-lb) * value[i]
    return float(total)


@jit
def _series_integrand(z, args):
    m, c, sg, expo = args
    n = c - m
    out = np.empty((z.size, n + 1))
    for k in range(z.size):
        zz = z[k]
        x = sg * zz
        h = 1.0 - x * math.atan2(1.0, x) if x > 0.0 else 1.0
        e = math.exp(-expo * zz)
        for i in range(n + 1):
            out[k, i] = zz ** (c - 1 - i) * h ** i * e
    return out


# ----------------------------------------------------------------------------
# imperfect and worst-case SIC


def _pattern_weights(p):
    """Probability of every detection pattern of ranks 1..len(p), bit j-1 = rank j."""
    weights = np.ones(1)
    for pj in p:
        weights = np.concatenate((weights * (1.0 - pj), weights * pj))
    return weights


def pattern_success(m, gamma, params: NetworkParams, options=None):
    """P(SINR_(m,b) >= gamma) for every detection pattern ``b`` of ranks 1..m-1.

    Index bit ``j-1`` is ``b(j)`` (1 = rank ``j`` detected and cancelled); the
    last entry is the perfect-SIC coverage.
    """
    m = check_rank(m, params.users_per_cluster)
    _check_cap(m)
    gamma = _check_target(gamma)
    return _rank_integrals(m, gamma, params, options or DEFAULT_OPTIONS, combos=True).copy()


def detection_profile_exact(params: NetworkParams, theta=None, options=None):
    """Detection probabilities of the sequential SIC chain against ``theta``.

    ``p_(1)`` is the perfect-SIC coverage of rank 1; ``p_(m)`` averages the
    pattern-conditional success probabilities over every detection pattern
    of ranks ``1..m-1`` weighted by the already computed ``p_(j)``.
    """
    c = params.users_per_cluster
    _check_cap(c)
    theta = _check_target(params.detection_threshold if theta is None else theta,
                          "detection threshold")
    options = options or DEFAULT_OPTIONS
    p = []
    for m in range(1, c + 1):
        cond = _rank_integrals(m, theta, params, options, combos=True)
        pm = float(np.dot(_pattern_weights(p), cond))
        p.append(min(max(pm, 0.0), 1.0))
    return DetectionProfile(tuple(p), theta)


def detection_prob_worst(m, theta, params: NetworkParams, options=None):
    """Worst-case detection probability: every closer rank detected under perfect SIC."""
    m = check_rank(m, params.users_per_cluster)
    theta = _check_target(theta, "detection threshold")
    out = 1.0
    for i in range(1, m):
        out *= coverage_perfect(i, theta, params, options)
    return out


def coverage_imperfect(m, gamma, theta, params: NetworkParams, options=None, profile=None):
    """Rate coverage of rank ``m`` with detection errors propagating along the chain.

    Pattern weights come from the detection profile at ``theta``; each
    pattern's coverage is evaluated at ``gamma``.  ``profile`` may supply a
    precomputed (or synthetic) :class:`DetectionProfile`.
    """
    c = params.users_per_cluster
    m = check_rank(m, c)
    _check_cap(c)
    gamma = _check_target(gamma)
    options = options or DEFAULT_OPTIONS
    if profile is None:
        profile = detection_profile_exact(params, theta, options)
    cond = _rank_integrals(m, gamma, params, options, combos=True)
    value = float(np.dot(_pattern_weights(profile.p[: m - 1]), cond))
    return min(max(value, 0.0), 1.0)


def coverage_worst(m, gamma, theta, params: NetworkParams, options=None):
    """Worst-case SIC coverage ``p_worst(m) * C_perfect(m)``."""
    return detection_prob_worst(m, theta, params, options) * coverage_perfect(
        m, gamma, params, options)


# ----------------------------------------------------------------------------
# TDMA baseline


def oma_sinr_target(rate_target, users_per_cluster):
    """SINR a TDMA user needs to reach ``rate_target`` in a 1/c time share."""
    return 2.0 ** (rate_target * users_per_cluster) - 1.0


def coverage_oma(m, rate_target, params: NetworkParams, options=None, method="integral"):
    """TDMA coverage of rank ``m``: no intra-cluster interference, one active
    interferer per cluster, target ``2^(R c) - 1``.

    ``method="closed_form"`` evaluates ``Gamma(c+1) 1F1~(m; 1+c; -K R^2)`` with
    ``K = pi lambda gamma^(2/alpha) B(1 - 2/alpha, 1 + 2/alpha)``, which is the
    integral under the Jensen transform and without noise.
    """
    c = params.users_per_cluster
    m = check_rank(m, c)
    gamma = _check_target(oma_sinr_target(_check_target(rate_target, "rate target"), c))
    if method == "closed_form":
        d = 2.0 / params.pathloss_exponent
        K = math.pi * params.bs_intensity * gamma ** d * beta_fn(1.0 - d, 1.0 + d)
        # Gamma(c+1) * regularized 1F1(m; c+1; x) is the plain 1F1
        return hyp1f1(m, c + 1.0, -K * params.cluster_radius ** 2)
    if method != "integral":
        raise ValueError(f"unknown method {method!r}")
    return float(_rank_integrals(m, gamma, params, options or DEFAULT_OPTIONS, oma=True)[0])


# ----------------------------------------------------------------------------
# cluster-level metrics


def rank_coverage(mode, params: NetworkParams, options=None):
    """Per-rank coverage (length ``c``) of ``mode`` with the targets in ``params``."""
    mode = SicMode.parse(mode)
    c = params.users_per_cluster
    theta = params.detection_threshold
    if mode is SicMode.PERFECT:
        return np.array([coverage_perfect(m, params.sinr_target(m), params, options)
                         for m in range(1, c + 1)])
    if mode is SicMode.WORST:
        return np.array([coverage_worst(m, params.sinr_target(m), theta, params, options)
                         for m in range(1, c + 1)])
    if mode is SicMode.IMPERFECT:
        profile = detection_profile_exact(params, theta, options)
        return np.array([coverage_imperfect(m, params.sinr_target(m), theta, params, options,
                                            profile=profile) for m in range(1, c + 1)])
    return np.array([coverage_oma(m, params.rate_for(m), params, options)
                     for m in range(1, c + 1)])


def mean_cluster_coverage(mode, params: NetworkParams, options=None, per_rank=None):
    """Average of the per-rank coverages of ``mode`` over the ``c`` ranks.

    ``per_rank`` may supply the per-rank values directly.
    """
    if per_rank is None:
        per_rank = rank_coverage(mode, params, options)
    per_rank = np.asarray(per_rank, dtype=float)
    if per_rank.size == 0:
        raise DomainError("need at least one rank")
    return float(per_rank.mean())


def average_rate(m, mode, params: NetworkParams, options=None, bits=False, cutoff=1e-6,
                 t_max=200.0):
    """Ergodic rate ``int_0^inf P(SINR_m > e^t - 1) dt`` of rank ``m``.

    In nats per channel use (``bits=True`` divides by ln 2).  The worst-case
    rate is ``p_worst(m)`` times the perfect-SIC rate; the TDMA rate carries the
    ``1/c`` time share.  If the coverage is still above ``cutoff`` at
    ``t_max`` the integral is reported as diverged and ``value`` is the
    truncated integral.
    """
    mode = SicMode.parse(mode)
    m = check_rank(m, params.users_per_cluster)
    options = options or DEFAULT_OPTIONS
    theta = params.detection_threshold
    c = params.users_per_cluster
    scale = 1.0
    if mode in (SicMode.PERFECT, SicMode.WORST):
        def cov(g):
            return coverage_perfect(m, g, params, options)
        if mode is SicMode.WORST:
            scale = detection_prob_worst(m, theta, params, options)
    elif mode is SicMode.IMPERFECT:
        profile = detection_profile_exact(params, theta, options)

        def cov(g):
            return coverage_imperfect(m, g, theta, params, options, profile=profile)
    else:
        scale = 1.0 / c

        def cov(g):
            return float(_rank_integrals(m, g, params, options, oma=True)[0])

    def integrand(t):
        return cov(math.expm1(t)) if t > 0 else 1.0

    upper = 1.0
    diverged = False
    while integrand(upper) > cutoff:
        if upper >= t_max:
            diverged = True
            upper = t_max
            break
        upper = min(2.0 * upper, t_max)
    value, _ = _integrate.quad(integrand, 0.0, upper, limit=200, epsabs=1e-9, epsrel=1e-7)
    value *= scale
    if bits:
        value /= math.log(2.0)
    return RateResult(float(value), diverged, "bits" if bits else "nats")
