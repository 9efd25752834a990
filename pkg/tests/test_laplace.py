import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from pcpnoma import geometry as geo
from pcpnoma import laplace as lp
from pcpnoma.exceptions import DomainError, UnsupportedConfiguration
from pcpnoma.params import NetworkParams
from pcpnoma.quadrature import QuadratureConfig

BASE = NetworkParams(bs_intensity=0.08, users_per_cluster=8, cluster_radius=0.8)


def quad(f, a, b, points=None):
    return integrate.quad(f, a, b, points=points, epsabs=1e-13, epsrel=1e-12, limit=400)[0]


def outer_oracle(s, m, rhat, params):
    """Direct quadrature of the outer-user expectation, raised to c - m."""
    w, a, R = s * params.tx_power, params.pathloss_exponent, params.cluster_radius
    e = quad(lambda r: geo.pdf_outer_conditional(r, rhat, R) / (1 + w * r ** -a), rhat, R)
    return e ** (params.users_per_cluster - m)


# ---------------------------------------------------------------- intra, perfect SIC


def test_intra_perfect_trivial_cases():
    assert lp.laplace_intra_perfect(0.0, 3, 0.4, BASE) == 1.0
    assert lp.laplace_intra_perfect(5.0, 8, 0.4, BASE) == 1.0


def test_intra_perfect_small_s():
    assert abs(lp.laplace_intra_perfect(1e-12, 1, 0.4, BASE) - 1.0) < 1e-6


@pytest.mark.parametrize("s", [0.01, 0.3, 4.0])
@pytest.mark.parametrize("m,rhat", [(1, 0.1), (4, 0.4), (7, 0.75)])
def test_intra_perfect_closed_form_matches_quadrature(s, m, rhat):
    closed = lp.laplace_intra_perfect(s, m, rhat, BASE, closed_form=True)
    numeric = lp.laplace_intra_perfect(s, m, rhat, BASE, closed_form=False)
    assert closed == pytest.approx(numeric, abs=1e-8)
    assert closed == pytest.approx(outer_oracle(s, m, rhat, BASE), abs=1e-10)


def test_intra_perfect_general_alpha_against_oracle():
    p = NetworkParams(bs_intensity=0.08, pathloss_exponent=3.2)
    assert lp.laplace_intra_perfect(0.7, 2, 0.3, p) == pytest.approx(
        outer_oracle(0.7, 2, 0.3, p), abs=1e-9)


def test_intra_perfect_closed_form_needs_alpha4():
    p = NetworkParams(pathloss_exponent=3.5)
    with pytest.raises(UnsupportedConfiguration):
        lp.laplace_intra_perfect_alpha4(0.1, 1, 0.3, p)


def test_intra_perfect_edge_of_cluster_is_continuous():
    R, w, s = 0.8, 2.0 * 0.5, 0.5
    limit = (R ** 4 / (R ** 4 + w)) ** 7
    near = lp.laplace_intra_perfect(s, 1, R - 1e-9, BASE)
    assert near == pytest.approx(limit, abs=1e-7)
    assert lp.laplace_intra_perfect(s, 1, R, BASE) == pytest.approx(limit, rel=1e-14)


def test_intra_perfect_vectorized_in_s():
    s = np.array([0.0, 0.1, 1.0])
    v = lp.laplace_intra_perfect(s, 2, 0.3, BASE)
    assert v.shape == (3,)
    assert v[1] == pytest.approx(lp.laplace_intra_perfect(0.1, 2, 0.3, BASE))


def test_intra_perfect_rejects_bad_input():
    with pytest.raises(DomainError):
        lp.laplace_intra_perfect(0.1, 2, 0.9, BASE)
    with pytest.raises(DomainError):
        lp.laplace_intra_perfect(-0.1, 2, 0.3, BASE)
    with pytest.raises(DomainError):
        lp.laplace_intra_perfect(0.1, 9, 0.3, BASE)


@settings(max_examples=40, deadline=None)
@given(s1=st.floats(0, 5), s2=st.floats(0, 5), m=st.integers(1, 7), u=st.floats(0.01, 0.99))
def test_intra_perfect_monotone_in_s(s1, s2, m, u):
    lo, hi = sorted((s1, s2))
    rhat = 0.8 * u
    a = lp.laplace_intra_perfect(lo, m, rhat, BASE)
    b = lp.laplace_intra_perfect(hi, m, rhat, BASE)
    assert 0.0 <= b <= a + 1e-12 <= 1.0 + 1e-12


@settings(max_examples=30, deadline=None)
@given(s=st.floats(0.01, 5), m=st.integers(1, 7), u=st.floats(0.01, 0.99))
def test_intra_perfect_monotone_in_rank(s, m, u):
    # fewer outer interferers at a larger rank, same rhat
    rhat = 0.8 * u
    assert lp.laplace_intra_perfect(s, m + 1, rhat, BASE) >= lp.laplace_intra_perfect(
        s, m, rhat, BASE) - 1e-12


# ---------------------------------------------------------------- intra, undetected users


def test_additional_all_detected_is_one():
    assert lp.laplace_intra_additional(0.5, 4, 0.4, (1, 1, 1), BASE) == 1.0
    assert lp.laplace_intra_additional(0.0, 4, 0.4, (0, 0, 0), BASE) == 1.0


def test_additional_rejects_bad_pattern():
    with pytest.raises(DomainError):
        lp.laplace_intra_additional(0.5, 4, 0.4, (1, 1), BASE)
    with pytest.raises(DomainError):
        lp.laplace_intra_additional(0.5, 4, 0.4, (1, 2, 0), BASE)


def test_additional_matches_rank_law_quadrature():
    s, m, rhat = 0.3, 4, 0.4
    w = s * BASE.tx_power
    expect = 1.0
    for j, bit in enumerate((0, 1, 0), start=1):
        if bit == 0:
            expect *= quad(lambda g: geo.pdf_rank_conditional(g, j, m, rhat, 8, 0.8)
                           / (1 + w * g ** -4), 0, rhat)
    got = lp.laplace_intra_additional(s, m, rhat, (0, 1, 0), BASE)
    assert got == pytest.approx(expect, abs=1e-10)


def test_additional_single_undetected_rank_against_sampling():
    # one undetected rank: no independence assumption involved, exact by sampling
    s, m, rhat = 0.3, 3, 0.4
    w = s * BASE.tx_power
    rng = np.random.default_rng(5)
    inner = np.sort(rhat * np.sqrt(rng.random((1_000_000, m - 1))), axis=1)
    mc = np.mean(1.0 / (1.0 + w * inner[:, 0] ** -4.0))
    got = lp.laplace_intra_additional(s, m, rhat, (0, 1), BASE)
    assert got == pytest.approx(mc, rel=5e-3)


def test_additional_decreases_with_fewer_detections():
    s, m, rhat = 0.3, 4, 0.5
    values = {b: lp.laplace_intra_additional(s, m, rhat, b, BASE)
              for b in [(1, 1, 1), (0, 1, 1), (0, 0, 1), (0, 0, 0)]}
    assert values[(1, 1, 1)] >= values[(0, 1, 1)] >= values[(0, 0, 1)] >= values[(0, 0, 0)]


def test_imperfect_is_product():
    a = lp.laplace_intra_imperfect(0.2, 3, 0.4, (0, 1), BASE)
    b = (lp.laplace_intra_perfect(0.2, 3, 0.4, BASE)
         * lp.laplace_intra_additional(0.2, 3, 0.4, (0, 1), BASE))
    assert a == pytest.approx(b, rel=1e-14)


# ---------------------------------------------------------------- inter-cluster


def exact_inter_oracle(s, params, c=None):
    """PGFL with the per-cluster expectation done as a 2-D polar integral over the disk."""
    c = params.users_per_cluster if c is None else c
    w, a, R = s * params.tx_power, params.pathloss_exponent, params.cluster_radius

    def mean_factor(v):
        def inner(phi):
            return quad(lambda rho: 2 * rho / R ** 2 / (1 + w * (v * v + rho * rho + 2 * v * rho
                                                                  * math.cos(phi)) ** (-a / 2)),
                        0, R)
        return quad(inner, 0, math.pi) / math.pi

    def integrand(v):
        return (1 - mean_factor(v) ** c) * v

    A = quad(integrand, 0, 6.0) + quad(lambda t: integrand(6.0 / t) * 6.0 / t ** 2, 0, 1)
    return math.exp(-2 * math.pi * params.bs_intensity * A)


def test_inter_trivial_cases():
    assert lp.laplace_inter_exact(0.0, BASE) == 1.0
    assert lp.laplace_inter_exact(0.3, NetworkParams(bs_intensity=0.0)) == 1.0
    assert lp.laplace_inter_bound(0.0, BASE) == 1.0


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_inter_exact_against_polar_oracle():
    s = 0.05
    assert lp.laplace_inter_exact(s, BASE) == pytest.approx(exact_inter_oracle(s, BASE),
                                                            abs=1e-7)


def test_inter_exact_frozen_value():
    # frozen from the polar oracle above (lambda = 0.08, c = 8, R = 0.8, alpha = 4)
    assert lp.laplace_inter_exact(0.05, BASE) == pytest.approx(FROZEN_INTER_005, abs=1e-7)


def test_inter_bound_beta_value():
    # c = 1, alpha = 4: exponent pi sqrt(w) B(1/2, 3/2) = pi^2 sqrt(w) / 2
    p = NetworkParams(bs_intensity=0.1, users_per_cluster=1)
    s = 0.3
    expect = math.exp(-0.1 * math.pi ** 2 / 2 * math.sqrt(s * p.tx_power))
    assert lp.laplace_inter_bound(s, p) == pytest.approx(expect, rel=1e-14)


@pytest.mark.parametrize("s", [0.001, 0.01, 0.05, 0.2, 1.0, 10.0])
def test_inter_bound_not_below_exact(s):
    assert lp.laplace_inter_bound(s, BASE) >= lp.laplace_inter_exact(s, BASE) - 1e-12


def test_inter_single_user_clusters_bound_is_exact():
    # with one user per cluster Jensen is an equality (the PCP reduces to a PPP)
    p = NetworkParams(bs_intensity=0.08, users_per_cluster=1)
    for s in (0.01, 0.5):
        assert lp.laplace_inter_exact(s, p) == pytest.approx(lp.laplace_inter_bound(s, p),
                                                             rel=1e-7)


def test_inter_exact_tail_split_insensitive():
    cfg = QuadratureConfig(tail_cutoff_multiplier=12.0)
    assert lp.laplace_inter_exact(0.2, BASE, config=cfg) == pytest.approx(
        lp.laplace_inter_exact(0.2, BASE), abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(s1=st.floats(0, 2), s2=st.floats(0, 2))
def test_inter_exact_monotone(s1, s2):
    lo, hi = sorted((s1, s2))
    assert lp.laplace_inter_exact(hi, BASE) <= lp.laplace_inter_exact(lo, BASE) + 1e-12


def test_inter_bound_needs_alpha_above_two():
    with pytest.raises(ValueError):
        NetworkParams(pathloss_exponent=2.0)


FROZEN_INTER_005 = 0.6062052002504624
