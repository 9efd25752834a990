"""Monte-Carlo simulator of the clustered uplink with an explicit SIC chain.

Each trial places the representative BS at the centre of the window and the
other BSs as an independent PPP (the Palm view of the parent process), drops
``c`` users uniformly on a disk around every BS, draws Rayleigh fading, and
evaluates every receiver model on the same realization:

* perfect SIC: rank ``m`` sees only the farther users of its own cluster;
* imperfect SIC: ranks are decoded in order against ``theta`` and only the
  users that were actually detected are subtracted;
* worst case: rank ``m`` succeeds only if all closer ranks were detected
  under perfect SIC and its own perfect-SIC SINR meets the target;
* TDMA: one uniformly chosen user per interfering cluster, no intra-cluster
  interference, target ``2^(R c) - 1``.

Every trial draws from its own Philox stream keyed by ``(seed, trial)``, so
results do not depend on chunking or on the number of worker processes.
"""

import concurrent.futures
import dataclasses
import math
from typing import Optional

import numpy as np

from ._jit import USE_NUMBA, jit
from .exceptions import DomainError
from .geometry import sample_disk, sample_ppp
from .params import NetworkParams, SicMode

_MASK64 = (1 << 64) - 1
_Z95 = 1.959963984540054

BY_DISTANCE = "by_distance"
BY_RECEIVED_POWER = "by_received_power"


def trial_rng(seed, index):
    """Independent generator for trial ``index`` of the run seeded by ``seed``."""
    key = ((int(index) & _MASK64) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclasses.dataclass(frozen=True)
class SimOptions:
    """Simulation controls.

    ``fixed_cluster_count`` replaces the Poisson number of BSs in the window
    by ``round(lambda L^2)`` (the representative one included).  ``chunk_size``
    fixes how trials are grouped for parallel execution; it does not affect
    results.
    """

    n_trials: int = 10_000
    seed: int = 0
    wraparound: bool = True
    ranking_rule: str = BY_DISTANCE
    baseline: str = "mcp"
    fixed_cluster_count: bool = False
    workers: int = 1
    chunk_size: int = 2000

    def __post_init__(self):
        if int(self.n_trials) < 1:
            raise DomainError("n_trials must be >= 1")
        if self.ranking_rule not in (BY_DISTANCE, BY_RECEIVED_POWER):
            raise DomainError(f"unknown ranking_rule {self.ranking_rule!r}")
        if self.baseline not in ("mcp", "ppp_users"):
            raise DomainError(f"unknown baseline {self.baseline!r}")
        if int(self.workers) < 1 or int(self.chunk_size) < 1:
            raise DomainError("workers and chunk_size must be >= 1")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True)
class CoverageEstimate:
    """Empirical probability with a 95% normal-approximation half-width.

    ``n_trials == 0`` marks an undefined estimate (``estimate`` is NaN).
    """

    estimate: float
    half_width_95: float
    n_trials: int
    mode: Optional[SicMode] = None

    @property
    def defined(self):
        return self.n_trials > 0

    @classmethod
    def binomial(cls, successes, n, mode=None):
        if n == 0:
            return cls(math.nan, math.nan, 0, mode)
        p = successes / n
        return cls(p, _Z95 * math.sqrt(p * (1.0 - p) / n), int(n), mode)


@dataclasses.dataclass
class TrialResult:
    """Outcome of one realization for every receiver model.

    Arrays are indexed by rank (0 = closest).  ``intra_power[m-1]`` is the
    perfect-SIC intra-cluster interference of rank ``m``; ``inter_power`` the
    aggregate from the other clusters with all users active and
    ``inter_power_oma`` with one active user per cluster.
    """

    ranked_distances: np.ndarray
    signal_power: np.ndarray
    intra_power: np.ndarray
    inter_power: float
    inter_power_oma: float
    noise_power: float
    sinr: dict
    decode_success: dict
    rate_covered: dict

    def aggregate_interference(self):
        """Perfect-SIC interference seen by each rank (intra + inter)."""
        return self.intra_power + self.inter_power


@dataclasses.dataclass
class ModeEstimate:
    per_rank: list
    mean: CoverageEstimate


@dataclasses.dataclass
class SimulationResult:
    """Per-mode coverage estimates plus per-rank detection frequencies."""

    modes: dict
    detection: dict
    n_trials: int
    options: SimOptions

    def __getitem__(self, mode):
        return self.modes[SicMode.parse(mode)]


# ----------------------------------------------------------------------------
# kernels


@jit
def sic_chain(S, inter, noise, theta, psinr, isinr, intra):
    """Perfect- and imperfect-SIC SINRs of signals ``S`` sorted in decoding order.

    Writes into ``psinr``, ``isinr`` and ``intra``.  A zero denominator gives
    an infinite SINR.
    """
    c = S.size
    tail = 0.0
    for k in range(c - 1, -1, -1):
        intra[k] = tail
        den = tail + inter + noise
        psinr[k] = S[k] / den if den > 0.0 else np.inf
        tail += S[k]
    missed = 0.0
    for k in range(c):
        den = intra[k] + missed + inter + noise
        s = S[k] / den if den > 0.0 else np.inf
        isinr[k] = s
        if not s >= theta:
            missed += S[k]


@jit
def _batch_numba(rep_dist, rep_fad, pos, fad, active, ptr, cx, cy, L, wrap, alpha, P, noise,
                 by_power, theta):
    T, c = rep_dist.shape
    psinr = np.empty((T, c))
    isinr = np.empty((T, c))
    osinr = np.empty((T, c))
    intra = np.empty((T, c))
    inter = np.zeros(T)
    inter_oma = np.zeros(T)
    dist = np.empty((T, c))
    sig = np.empty((T, c))
    for t in range(T):
        acc = 0.0
        acc_oma = 0.0
        for i in range(ptr[t], ptr[t + 1]):
            dx = pos[i, 0] - cx
            dy = pos[i, 1] - cy
            if wrap:
                dx -= L * math.floor(dx / L + 0.5)
                dy -= L * math.floor(dy / L + 0.5)
            g = P * fad[i] * math.hypot(dx, dy) ** (-alpha)
            acc += g
            if active[i]:
                acc_oma += g
        inter[t] = acc
        inter_oma[t] = acc_oma
        raw = np.empty(c)
        for k in range(c):
            raw[k] = P * rep_fad[t, k] * rep_dist[t, k] ** (-alpha)
        if by_power:
            order = np.argsort(-raw, kind="mergesort")
        else:
            order = np.argsort(rep_dist[t], kind="mergesort")
        S = sig[t]
        for k in range(c):
            S[k] = raw[order[k]]
            dist[t, k] = rep_dist[t, order[k]]
        sic_chain(S, acc, noise, theta, psinr[t], isinr[t], intra[t])
        den = acc_oma + noise
        for k in range(c):
            osinr[t, k] = S[k] / den if den > 0.0 else np.inf
    return psinr, isinr, osinr, intra, inter, inter_oma, dist, sig


def _batch_numpy(rep_dist, rep_fad, pos, fad, active, ptr, cx, cy, L, wrap, alpha, P, noise,
                 by_power, theta):
    T, c = rep_dist.shape
    owner = np.repeat(np.arange(T), np.diff(ptr))
    d = pos - np.array([cx, cy])
    if wrap:
        d -= L * np.floor(d / L + 0.5)
    g = P * fad * np.hypot(d[:, 0], d[:, 1]) ** (-alpha)
    inter = np.bincount(owner, weights=g, minlength=T)
    inter_oma = np.bincount(owner, weights=np.where(active, g, 0.0), minlength=T)
    raw = P * rep_fad * rep_dist ** (-alpha)
    key = -raw if by_power else rep_dist
    order = np.argsort(key, axis=1, kind="stable")
    S = np.take_along_axis(raw, order, axis=1)
    dist = np.take_along_axis(rep_dist, order, axis=1)
    intra = np.empty((T, c))
    psinr = np.empty((T, c))
    isinr = np.empty((T, c))
    tail = np.zeros(T)
    with np.errstate(divide="ignore"):
        for k in range(c - 1, -1, -1):
            intra[:, k] = tail
            den = tail + inter + noise
            psinr[:, k] = np.where(den > 0, S[:, k] / np.where(den > 0, den, 1.0), np.inf)
            tail = tail + S[:, k]
        missed = np.zeros(T)
        for k in range(c):
            den = intra[:, k] + missed + inter + noise
            s = np.where(den > 0, S[:, k] / np.where(den > 0, den, 1.0), np.inf)
            isinr[:, k] = s
            missed = np.where(s >= theta, missed, missed + S[:, k])
        den = (inter_oma + noise)[:, None]
        osinr = np.where(den > 0, S / np.where(den > 0, den, 1.0), np.inf)
    return psinr, isinr, osinr, intra, inter, inter_oma, dist, S


_batch = _batch_numba if USE_NUMBA else _batch_numpy


# ----------------------------------------------------------------------------
# sampling


def _sample_mcp_trial(params, options, rng):
    c = params.users_per_cluster
    R = params.cluster_radius
    L = params.region_side
    if options.fixed_cluster_count:
        n = max(int(round(params.bs_intensity * L * L)) - 1, 0)
        others = rng.random((n, 2)) * L
    else:
        others = sample_ppp(params.bs_intensity, L, rng)
    rep = sample_disk(c, R, rng)
    rep_fad = rng.exponential(size=c)
    n = others.shape[0]
    off = sample_disk((n, c), R, rng)
    fad = rng.exponential(size=(n, c))
    pick = rng.integers(c, size=n)
    pos = (others[:, None, :] + off).reshape(-1, 2)
    active = np.zeros((n, c), dtype=np.bool_)
    active[np.arange(n), pick] = True
    return np.hypot(rep[:, 0], rep[:, 1]), rep_fad, pos, fad.ravel(), active.ravel()


def _sample_chunk(params, options, start, stop):
    dists, fads, pos, fad, act, counts = [], [], [], [], [], []
    for idx in range(start, stop):
        d, f, p, g, a = _sample_mcp_trial(params, options, trial_rng(options.seed, idx))
        dists.append(d)
        fads.append(f)
        pos.append(p)
        fad.append(g)
        act.append(a)
        counts.append(p.shape[0])
    ptr = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return (np.array(dists), np.array(fads), np.concatenate(pos).reshape(-1, 2),
            np.concatenate(fad), np.concatenate(act), ptr)


def _evaluate_chunk(params, options, start, stop):
    rep_dist, rep_fad, pos, fad, act, ptr = _sample_chunk(params, options, start, stop)
    L = params.region_side
    noise = params.noise_power
    return _batch(rep_dist, rep_fad, pos, fad, act, ptr, 0.5 * L, 0.5 * L, L,
                  bool(options.wraparound), params.pathloss_exponent, params.tx_power, noise,
                  options.ranking_rule == BY_RECEIVED_POWER, params.detection_threshold)


def _targets(params):
    c = params.users_per_cluster
    gam = np.array([params.sinr_target(m) for m in range(1, c + 1)])
    gam_oma = np.array([params.oma_sinr_target(m) for m in range(1, c + 1)])
    return gam, gam_oma


def _indicators(params, psinr, isinr, osinr):
    gam, gam_oma = _targets(params)
    theta = params.detection_threshold
    pdet = psinr >= theta
    prefix = np.ones_like(pdet)
    prefix[:, 1:] = np.cumprod(pdet[:, :-1], axis=1)
    pcov = psinr >= gam
    decode = {SicMode.PERFECT: pdet, SicMode.IMPERFECT: isinr >= theta,
              SicMode.WORST: prefix & pdet, SicMode.OMA: osinr >= gam_oma}
    covered = {SicMode.PERFECT: pcov, SicMode.IMPERFECT: isinr >= gam,
               SicMode.WORST: prefix & pcov, SicMode.OMA: osinr >= gam_oma}
    return decode, covered


def run_trial(params: NetworkParams, options=None, rng=None, trial_index=0):
    """Simulate one realization; ``rng`` defaults to the stream of ``trial_index``."""
    options = options or SimOptions()
    if rng is None:
        rng = trial_rng(options.seed, trial_index)
    rep_dist, rep_fad, pos, fad, act = _sample_mcp_trial(params, options, rng)
    ptr = np.array([0, pos.shape[0]], dtype=np.int64)
    L = params.region_side
    psinr, isinr, osinr, intra, inter, inter_oma, dist, sig = _batch(
        rep_dist[None], rep_fad[None], pos, fad, act, ptr, 0.5 * L, 0.5 * L, L,
        bool(options.wraparound), params.pathloss_exponent, params.tx_power,
        params.noise_power, options.ranking_rule == BY_RECEIVED_POWER,
        params.detection_threshold)
    decode, covered = _indicators(params, psinr, isinr, osinr)
    sinr = {SicMode.PERFECT: psinr[0], SicMode.IMPERFECT: isinr[0], SicMode.WORST: psinr[0],
            SicMode.OMA: osinr[0]}
    return TrialResult(dist[0], sig[0], intra[0], float(inter[0]), float(inter_oma[0]),
                       params.noise_power, sinr, {k: v[0] for k, v in decode.items()},
                       {k: v[0] for k, v in covered.items()})


# ----------------------------------------------------------------------------
# clustered network estimates


def _chunks(n, size):
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _map_chunks(func, args, options):
    """Apply ``func(*args, start, stop)`` to every chunk, results in chunk order."""
    chunks = _chunks(int(options.n_trials), int(options.chunk_size))
    if int(options.workers) <= 1 or len(chunks) == 1:
        return [func(*args, a, b) for a, b in chunks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=int(options.workers)) as pool:
        futures = [pool.submit(func, *args, a, b) for a, b in chunks]
        return [f.result() for f in futures]


def _mcp_stats(params, options, start, stop):
    psinr, isinr, osinr, *_ = _evaluate_chunk(params, options, start, stop)
    decode, covered = _indicators(params, psinr, isinr, osinr)
    out = {}
    for mode, cov in covered.items():
        k = cov.sum(axis=1).astype(np.int64)
        out[mode] = (cov.sum(axis=0).astype(np.int64), int(k.sum()), int((k * k).sum()))
    det = {mode: d.sum(axis=0).astype(np.int64) for mode, d in decode.items()}
    return out, det


def _mean_estimate(sum_k, sum_k2, n, c, mode):
    # per-trial fraction of covered ranks, CI from its empirical variance
    mean = sum_k / (n * c)
    var = max(sum_k2 / (n * c * c) - mean * mean, 0.0) * n / max(n - 1, 1)
    return CoverageEstimate(mean, _Z95 * math.sqrt(var / n), int(n), mode)


def estimate_coverage(params: NetworkParams, modes=None, options=None):
    """Per-rank and mean-cluster coverage of every requested mode.

    All modes are evaluated on the same realizations (paired samples).
    """
    options = options or SimOptions()
    if int(options.n_trials) < 100:
        raise DomainError("estimate_coverage needs n_trials >= 100")
    modes = [SicMode.parse(m) for m in (modes or list(SicMode))]
    results = _map_chunks(_mcp_stats, (params, options), options)
    n = int(options.n_trials)
    c = params.users_per_cluster
    out = {}
    for mode in modes:
        counts = sum(r[0][mode][0] for r in results)
        sum_k = sum(r[0][mode][1] for r in results)
        sum_k2 = sum(r[0][mode][2] for r in results)
        per_rank = [CoverageEstimate.binomial(int(x), n, mode) for x in counts]
        out[mode] = ModeEstimate(per_rank, _mean_estimate(sum_k, sum_k2, n, c, mode))
    detection = {}
    for mode in (SicMode.PERFECT, SicMode.IMPERFECT):
        counts = sum(r[1][mode] for r in results)
        detection[mode] = [CoverageEstimate.binomial(int(x), n, mode) for x in counts]
    return SimulationResult(out, detection, n, options)


# ----------------------------------------------------------------------------
# PPP-user baseline


def _ppp_trial(params, options, rng):
    """One PPP-user realization; returns per-mode covered flags of the served users."""
    L = params.region_side
    lam = params.bs_intensity
    c = params.users_per_cluster
    alpha = params.pathloss_exponent
    P = params.tx_power
    center = np.array([0.5 * L, 0.5 * L])
    if options.fixed_cluster_count:
        n = max(int(round(lam * L * L)) - 1, 0)
        others = rng.random((n, 2)) * L
    else:
        others = sample_ppp(lam, L, rng)
    bs = np.vstack((center, others))
    users = sample_ppp(c * lam, L, rng)
    nu = users.shape[0]
    fad = rng.exponential(size=nu)
    keys = rng.random(nu)
    if nu == 0:
        return 0, None
    d = users[:, None, :] - bs[None, :, :]
    if options.wraparound:
        d -= L * np.floor(d / L + 0.5)
    dist = np.hypot(d[..., 0], d[..., 1])
    assoc = np.argmin(dist, axis=1)
    g = P * fad * dist[:, 0] ** (-alpha)
    own = assoc == 0
    k = int(own.sum())
    if k == 0:
        return 0, None
    inter = float(np.sum(g[~own]))
    # one uniformly chosen active user in every other non-empty cell
    best = {}
    for i in np.flatnonzero(~own):
        a = assoc[i]
        if a not in best or keys[i] > keys[best[a]]:
            best[a] = i
    inter_oma = float(sum(g[i] for i in sorted(best.values())))
    rd = dist[own, 0]
    rs = g[own]
    order = np.argsort(-rs if options.ranking_rule == BY_RECEIVED_POWER else rd, kind="stable")
    S = rs[order]
    psinr = np.empty(k)
    isinr = np.empty(k)
    intra = np.empty(k)
    noise = params.noise_power
    sic_chain(S, inter, noise, params.detection_threshold, psinr, isinr, intra)
    with np.errstate(divide="ignore"):
        osinr = S / (inter_oma + noise) if inter_oma + noise > 0 else np.full(k, np.inf)
    ranks = np.arange(1, k + 1)
    gam = np.array([params.sinr_target(min(m, c)) for m in ranks])
    # the TDMA share follows the realized load of the cell
    gam_oma = np.array([2.0 ** (params.rate_for(min(m, c)) * k) - 1.0 for m in ranks])
    theta = params.detection_threshold
    pdet = psinr >= theta
    prefix = np.concatenate(([True], np.cumprod(pdet[:-1]).astype(bool)))
    covered = {SicMode.PERFECT: psinr >= gam, SicMode.IMPERFECT: isinr >= gam,
               SicMode.WORST: prefix & (psinr >= gam), SicMode.OMA: osinr >= gam_oma}
    return k, covered


def _ppp_stats(params, options, start, stop):
    c = params.users_per_cluster
    stats = {mode: {"rank_cov": np.zeros(c, np.int64), "rank_n": np.zeros(c, np.int64),
                    "cov": 0, "users": 0, "cov2": 0, "users2": 0, "cross": 0}
             for mode in SicMode}
    cells = 0
    for idx in range(start, stop):
        k, covered = _ppp_trial(params, options, trial_rng(options.seed, idx))
        if k == 0:
            continue
        cells += 1
        kk = min(k, c)
        for mode, cov in covered.items():
            s = stats[mode]
            s["rank_cov"][:kk] += cov[:kk]
            s["rank_n"][:kk] += 1
            nc = int(cov.sum())
            s["cov"] += nc
            s["users"] += k
            s["cov2"] += nc * nc
            s["users2"] += k * k
            s["cross"] += nc * k
    return stats, cells


@dataclasses.dataclass
class PppBaselineResult:
    """PPP-user baseline: rank ``m`` is estimated over cells with at least ``m``
    users; the mean is over all realized users (a ratio estimate)."""

    modes: dict
    cells_with_users: int
    mean_load: float
    n_trials: int

    def __getitem__(self, mode):
        return self.modes[SicMode.parse(mode)]


def estimate_ppp_baseline(params: NetworkParams, modes=None, options=None):
    """Coverage when users form an independent PPP of intensity ``c lambda``
    and attach to the nearest BS; per-cell evaluation as in :func:`run_trial`."""
    options = options or SimOptions(baseline="ppp_users")
    modes = [SicMode.parse(m) for m in (modes or list(SicMode))]
    results = _map_chunks(_ppp_stats, (params, options), options)
    n = int(options.n_trials)
    cells = sum(r[1] for r in results)
    out = {}
    load = math.nan
    for mode in modes:
        tot = {key: sum(r[0][mode][key] for r in results)
               for key in ("rank_cov", "rank_n", "cov", "users", "cov2", "users2", "cross")}
        per_rank = [CoverageEstimate.binomial(int(x), int(m), mode)
                    for x, m in zip(tot["rank_cov"], tot["rank_n"])]
        # the mean load over all trials counts empty cells as zero
        load = tot["users"] / n
        if tot["users"] == 0:
            mean = CoverageEstimate(math.nan, math.nan, 0, mode)
        else:
            p = tot["cov"] / tot["users"]
            kbar = tot["users"] / cells
            # delta-method variance of a ratio of per-cell sums
            resid2 = tot["cov2"] - 2 * p * tot["cross"] + p * p * tot["users2"]
            var = max(resid2, 0.0) / (cells * max(cells - 1, 1) * kbar * kbar)
            mean = CoverageEstimate(p, _Z95 * math.sqrt(var), int(cells), mode)
        out[mode] = ModeEstimate(per_rank, mean)
    return PppBaselineResult(out, cells, load, n)


# ----------------------------------------------------------------------------
# Laplace functionals


@dataclasses.dataclass(frozen=True)
class LaplaceEstimate:
    s: np.ndarray
    estimate: np.ndarray
    half_width_95: np.ndarray
    n_samples: int


def _inter_chunk(params, options, s, start, stop):
    inter = _evaluate_chunk(params, options, start, stop)[4]
    e = np.exp(-np.outer(inter, s))
    return e.sum(axis=0), (e * e).sum(axis=0)


def _intra_chunk(params, m, lo, hi, s, seed, index, size):
    rng = trial_rng(seed, index)
    c = params.users_per_cluster
    off = sample_disk((size, c), params.cluster_radius, rng)
    fad = rng.exponential(size=(size, c))
    r = np.hypot(off[..., 0], off[..., 1])
    order = np.argsort(r, axis=1, kind="stable")
    r = np.take_along_axis(r, order, axis=1)
    keep = (r[:, m - 1] >= lo) & (r[:, m - 1] < hi)
    r = r[keep, m:]
    h = fad[keep, m:]
    intra = (params.tx_power * h * r ** (-params.pathloss_exponent)).sum(axis=1)
    e = np.exp(-np.outer(intra, s))
    return e.sum(axis=0), (e * e).sum(axis=0), int(keep.sum())


def estimate_laplace_functional(params: NetworkParams, s_grid, which="inter", options=None,
                                m=None, rhat=None, half_width=0.005, min_samples=100_000):
    """Empirical ``E[exp(-s I)]`` on ``s_grid``.

    ``which="inter"`` uses the inter-cluster interference at the
    representative BS over ``options.n_trials`` realizations.
    ``which="intra_perfect"`` samples isolated clusters, keeps those with
    ``r_(m)`` in ``[rhat - half_width, rhat + half_width)`` until at least
    ``min_samples`` are kept, and uses the farther users' interference.
    """
    options = options or SimOptions()
    s = np.asarray(s_grid, dtype=float)
    if np.any(s < 0):
        raise DomainError("s must be >= 0")
    if which == "inter":
        parts = _map_chunks(_inter_chunk, (params, options, s), options)
        n = int(options.n_trials)
        total = sum(p[0] for p in parts)
        total2 = sum(p[1] for p in parts)
    elif which == "intra_perfect":
        if m is None or rhat is None:
            raise DomainError("intra_perfect needs m and rhat")
        lo, hi = rhat - half_width, rhat + half_width
        total = np.zeros(s.size)
        total2 = np.zeros(s.size)
        n = 0
        index = 0
        size = 200_000
        while n < min_samples:
            a, b, k = _intra_chunk(params, int(m), lo, hi, s, options.seed, index, size)
            total += a
            total2 += b
            n += k
            index += 1
            if index > 10_000:
                raise DomainError("conditioning bin too narrow to fill")
    else:
        raise DomainError(f"unknown functional {which!r}")
    mean = total / n
    var = np.maximum(total2 / n - mean * mean, 0.0)
    mean = np.where(s == 0, 1.0, mean)
    return LaplaceEstimate(s, mean, _Z95 * np.sqrt(var / n), int(n))


# ----------------------------------------------------------------------------
# per-pattern success frequencies


def _pattern_chunk(params, options, m, threshold, start, stop):
    psinr, isinr, osinr, intra, inter, _io, _d, sig = _evaluate_chunk(params, options, start,
                                                                      stop)
    base = intra[:, m - 1] + inter
    n_pat = 1 << (m - 1)
    counts = np.zeros(n_pat, dtype=np.int64)
    for b in range(n_pat):
        extra = np.zeros(sig.shape[0])
        for j in range(m - 1):
            if not (b >> j) & 1:
                extra = extra + sig[:, j]
        den = base + extra + params.noise_power
        with np.errstate(divide="ignore"):
            s = np.where(den > 0, sig[:, m - 1] / np.where(den > 0, den, 1.0), np.inf)
        counts[b] = int(np.count_nonzero(s >= threshold))
    return counts


def estimate_pattern_success(params: NetworkParams, m, threshold, options=None):
    """Frequency of ``SINR_(m,b) >= threshold`` for every detection pattern ``b``.

    ``SINR_(m,b)`` keeps the closer ranks with ``b(j) = 0`` as interference
    regardless of what the SIC chain actually decoded; index bit ``j-1`` is
    ``b(j)``, as in the analytic engine.
    """
    options = options or SimOptions()
    m = int(m)
    if not 1 <= m <= params.users_per_cluster:
        raise DomainError(f"rank m={m} outside 1..{params.users_per_cluster}")
    parts = _map_chunks(_pattern_chunk, (params, options, m, float(threshold)), options)
    n = int(options.n_trials)
    return [CoverageEstimate.binomial(int(x), n) for x in sum(parts)]
