"""Beta-family and confluent hypergeometric functions."""

import math

import numpy as np
from scipy import special as _sp

from .exceptions import DomainError, NumericalError


def log_beta(p, q):
    if not (p > 0 and q > 0):
        raise DomainError(f"Beta function needs p, q > 0 (got p={p!r}, q={q!r})")
    return math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)


def beta_fn(p, q):
    """Euler Beta function B(p, q), evaluated through log-gamma."""
    return math.exp(log_beta(p, q))


def incomplete_beta(z, p, q):
    """Non-regularized incomplete Beta function B_z(p, q) for 0 <= z <= 1."""
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)) or np.any(np.isnan(z)):
        raise DomainError("incomplete_beta needs 0 <= z <= 1")
    out = _sp.betainc(p, q, z) * beta_fn(p, q)
    return out if out.ndim else float(out)


def regularized_incomplete_beta(z, p, q):
    """I_z(p, q) = B_z(p, q) / B(p, q)."""
    return incomplete_beta(z, p, q) / beta_fn(p, q)


def hyp1f1(a, b, x):
    """Kummer's confluent hypergeometric function 1F1(a; b; x) for b > 0.

    Sums the defining series; for x < 0 the Kummer transformation
    ``1F1(a; b; x) = e^x 1F1(b - a; b; -x)`` is applied first so that, when
    ``b - a > 0``, every term is positive and no cancellation occurs.  The
    running sum is rescaled to stay finite for large |x|.
    """
    if not b > 0:
        raise DomainError("hyp1f1 needs b > 0")
    if x < 0:
        a, y, shift = b - a, -x, x
    else:
        y, shift = x, 0.0
    if a == 0 or y == 0:
        return math.exp(shift)
    term = 1.0
    total = 1.0
    log_scale = 0.0
    k = 0
    limit = int(20 * (y + abs(a) + b) + 1000)
    while True:
        term *= (a + k) * y / ((b + k) * (k + 1))
        total += term
        k += 1
        if total > 1e280:
            total *= 1e-280
            term *= 1e-280
            log_scale += 280.0 * math.log(10.0)
        if k > y and abs(term) <= 1e-17 * abs(total):
            break
        if k > limit:
            raise NumericalError("1F1 series did not converge", {"a": a, "b": b, "x": x})
    if total <= 0:
        return math.exp(shift + log_scale) * total
    return math.exp(math.log(total) + log_scale + shift)


def hyp1f1_regularized(a, b, x):
    """Regularized 1F1(a; b; x) / Gamma(b)."""
    return hyp1f1(a, b, x) / math.gamma(b)
