"""Point-process samplers and the distance laws of the clustered network.

All densities are in 1/km and vectorize over their first argument.  The
``_``-prefixed kernels are jit-compatible and are reused by the Laplace
transform integrands.
"""

import dataclasses
import math

import numpy as np
from scipy import special as _sp

from ._jit import jit
from .exceptions import DomainError
from .params import NetworkParams, check_rank

# ----------------------------------------------------------------------------
# samplers


def sample_ppp(intensity, region_side, rng):
    """Homogeneous PPP on the square ``[0, L]^2``; returns an ``(n, 2)`` array."""
    if intensity < 0:
        raise DomainError("PPP intensity must be >= 0")
    if region_side <= 0:
        raise DomainError("region_side must be > 0")
    n = rng.poisson(intensity * region_side ** 2) if intensity > 0 else 0
    return rng.random((n, 2)) * region_side


def sample_disk(shape, radius, rng):
    """Points uniform on a disk of ``radius`` centred at the origin.

    ``shape`` is the leading shape of the output; a trailing axis of size 2
    holds the coordinates.
    """
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    u = rng.random(shape + (2,))
    rho = radius * np.sqrt(u[..., 0])
    phi = 2.0 * np.pi * u[..., 1]
    return np.stack((rho * np.cos(phi), rho * np.sin(phi)), axis=-1)


@dataclasses.dataclass
class ClusterRealization:
    """One sampled Matern cluster network.

    ``users[i]`` holds the users of BS ``i`` in rank order (closest first);
    ``ranked_distances[i, m-1]`` is the rank-``m`` user's distance to BS ``i``.
    """

    bs_positions: np.ndarray
    users: np.ndarray
    ranked_distances: np.ndarray

    @property
    def n_clusters(self):
        return self.bs_positions.shape[0]


def rank_order(values):
    """Ascending order along the last axis; equal values keep index order."""
    return np.argsort(values, axis=-1, kind="stable")


def sample_mcp(params: NetworkParams, rng, fixed_count=False):
    """Sample BSs (PPP) with exactly ``c`` users uniform on a disk around each.

    With ``fixed_count`` the number of clusters is ``round(lambda_m L^2)``
    instead of Poisson.
    """
    L = params.region_side
    if fixed_count:
        n = int(round(params.bs_intensity * L * L))
        bs = rng.random((n, 2)) * L
    else:
        bs = sample_ppp(params.bs_intensity, L, rng)
    offsets = sample_disk((bs.shape[0], params.users_per_cluster), params.cluster_radius, rng)
    dist = np.hypot(offsets[..., 0], offsets[..., 1])
    order = rank_order(dist)
    offsets = np.take_along_axis(offsets, order[..., None], axis=1)
    dist = np.take_along_axis(dist, order, axis=1)
    return ClusterRealization(bs, bs[:, None, :] + offsets, dist)


# ----------------------------------------------------------------------------
# jit kernels (arrays in, arrays out)


@jit
def _log_beta(p, q):
    return math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)


@jit
def _rank_pdf(r, m, c, R):
    out = np.zeros(r.size)
    logc = math.log(2.0) - 2 * m * math.log(R) - _log_beta(m, c - m + 1)
    norm = math.exp(logc)
    for i in range(r.size):
        x = r[i]
        if 0.0 <= x <= R:
            out[i] = norm * x ** (2 * m - 1) * (1.0 - (x / R) ** 2) ** (c - m)
    return out


@jit
def _inner_rank_pdf(g, j, m, rhat):
    # rank-j distance given r_(m) = rhat, j < m
    out = np.zeros(g.size)
    coef = 2.0 * math.exp(math.lgamma(m) - math.lgamma(m - j) - math.lgamma(j))
    scale = rhat ** (2 * m - 2)
    r2 = rhat * rhat
    for i in range(g.size):
        x = g[i]
        if 0.0 < x < rhat:
            out[i] = coef * (r2 - x * x) ** (m - j - 1) * x ** (2 * j - 1) / scale
    return out


@jit
def _outer_rank_pdf(g, j, m, rhat, c, R):
    # rank-j distance given r_(m) = rhat, j > m
    out = np.zeros(g.size)
    coef = 2.0 * math.exp(math.lgamma(c - m + 1) - math.lgamma(j - m) - math.lgamma(c - j + 1))
    scale = (R * R - rhat * rhat) ** (c - m)
    r2 = rhat * rhat
    for i in range(g.size):
        x = g[i]
        if rhat < x <= R:
            out[i] = coef * x * (x * x - r2) ** (j - m - 1) * (R * R - x * x) ** (c - j) / scale
    return out


@jit
def _arc_fraction_angle(u, v, R):
    # angle (radians, in [0, pi]) subtended by the part of the circle |z| = u
    # that lies inside disk(center at distance v, radius R); cancellation-free
    d = u - v
    q = (R * R - d * d) / (4.0 * u * v)
    if q <= 0.0:
        return 0.0
    if q >= 1.0:
        return math.pi
    return 2.0 * math.asin(math.sqrt(q))


@jit
def _intercluster_pdf(u, v, R):
    out = np.zeros(u.size)
    inv = 1.0 / (math.pi * R * R)
    for i in range(u.size):
        x = u[i]
        if x < 0.0 or x > v + R:
            continue
        if x <= R - v:
            out[i] = 2.0 * x / (R * R)
        elif x >= abs(v - R) and x > 0.0 and v > 0.0:
            out[i] = 2.0 * x * inv * _arc_fraction_angle(x, v, R)
    return out


# ----------------------------------------------------------------------------
# public densities


def _as_array(x):
    arr = np.asarray(x, dtype=np.float64)
    return arr, arr.ndim == 0


def _finish(values, shape, scalar):
    values = values.reshape(shape)
    return float(values) if scalar else values


def pdf_rank_distance(r, m, c, R):
    """Density of the rank-``m`` distance among ``c`` users uniform on disk(R).

    A generalized Beta law of the first kind:
    ``2 r^(2m-1) (1 - r^2/R^2)^(c-m) / (R^(2m) B(m, c-m+1))``; zero off [0, R].
    """
    m = check_rank(m, c)
    if R <= 0:
        raise DomainError("R must be > 0")
    arr, scalar = _as_array(r)
    return _finish(_rank_pdf(arr.ravel(), m, int(c), float(R)), arr.shape, scalar)


def cdf_rank_distance(r, m, c, R):
    """CDF matching :func:`pdf_rank_distance`: ``I_{r^2/R^2}(m, c-m+1)``."""
    m = check_rank(m, c)
    z = np.clip(np.asarray(r, dtype=float) / R, 0.0, 1.0) ** 2
    return _sp.betainc(m, c - m + 1, z)


def pdf_inner_conditional(r_in, rhat):
    """Density of a closer-than-rank-m user's distance given ``r_(m) = rhat``."""
    if not rhat > 0:
        raise DomainError("conditioning distance must be > 0")
    arr = np.asarray(r_in, dtype=float)
    out = np.where((arr >= 0) & (arr < rhat), 2.0 * arr / rhat ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def cdf_inner_conditional(r_in, rhat):
    arr = np.clip(np.asarray(r_in, dtype=float), 0.0, rhat)
    return (arr / rhat) ** 2


def pdf_outer_conditional(r_out, rhat, R):
    """Density of a farther-than-rank-m user's distance given ``r_(m) = rhat``."""
    if not 0 < rhat < R:
        raise DomainError("outer conditional law needs 0 < rhat < R")
    arr = np.asarray(r_out, dtype=float)
    out = np.where((arr > rhat) & (arr <= R), 2.0 * arr / (R * R - rhat * rhat), 0.0)
    return float(out) if out.ndim == 0 else out


def cdf_outer_conditional(r_out, rhat, R):
    arr = np.clip(np.asarray(r_out, dtype=float), rhat, R)
    return (arr ** 2 - rhat ** 2) / (R ** 2 - rhat ** 2)


def pdf_rank_conditional(g, j, m, rhat, c, R):
    """Density of the rank-``j`` distance given the rank-``m`` distance ``rhat``.

    For ``j > m`` it is the ``(j-m)``-th order statistic of ``c-m`` draws from
    the outer truncated law; for ``j < m`` the ``j``-th of ``m-1`` draws from
    the inner one.  Zero outside the support.
    """
    m = check_rank(m, c)
    j = check_rank(j, c)
    if j == m:
        raise DomainError("rank-conditional law needs j != m")
    if not 0 < rhat <= R:
        raise DomainError("conditioning distance must lie in (0, R]")
    arr, scalar = _as_array(g)
    flat = arr.ravel()
    if j < m:
        out = _inner_rank_pdf(flat, j, m, float(rhat))
    else:
        if rhat >= R:
            raise DomainError("j > m needs rhat < R")
        out = _outer_rank_pdf(flat, j, m, float(rhat), int(c), float(R))
    return _finish(out, arr.shape, scalar)


def cdf_rank_conditional(g, j, m, rhat, c, R):
    """CDF matching :func:`pdf_rank_conditional` (regularized incomplete Beta)."""
    g = np.asarray(g, dtype=float)
    if j < m:
        x = np.clip(g / rhat, 0.0, 1.0) ** 2
        return _sp.betainc(j, m - j, x)
    x = np.clip((g ** 2 - rhat ** 2) / (R ** 2 - rhat ** 2), 0.0, 1.0)
    return _sp.betainc(j - m, c - j + 1, x)


def pdf_intercluster_distance(u, v, R):
    """Density of ``|x + y|`` for ``|x| = v`` and ``y`` uniform on disk(R).

    ``u / (pi R^2)`` times the length of the arc of the circle of radius
    ``u`` (about the receiver) inside the cluster disk: ``2u/R^2`` while the
    whole circle is inside (``u <= R - v``), otherwise
    ``(2u / (pi R^2)) arccos((u^2 + v^2 - R^2) / (2uv))`` on
    ``|v - R| <= u <= v + R``.
    """
    if v < 0 or R <= 0:
        raise DomainError("need v >= 0 and R > 0")
    arr, scalar = _as_array(u)
    return _finish(_intercluster_pdf(arr.ravel(), float(v), float(R)), arr.shape, scalar)
