"""Model parameters and small shared enumerations."""

import dataclasses
import enum
import math
from typing import Optional, Tuple

from .exceptions import DomainError, ParameterError

#: Area of the default 10 km x 10 km simulation window.
REFERENCE_AREA_KM2 = 100.0


class SicMode(str, enum.Enum):
    """How the receiver handles the stronger intra-cluster users."""

    PERFECT = "perfect"
    IMPERFECT = "imperfect"
    WORST = "worst"
    OMA = "oma"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown SIC mode {value!r} (expected one of {names})") from None


@dataclasses.dataclass(frozen=True)
class NetworkParams:
    """Scalar parameters of the clustered uplink network.

    Distances are in km, intensities in clusters per km^2, powers in watts.
    ``noise_power`` may be zero (interference-limited).  ``rate_targets``
    optionally overrides ``rate_target`` per rank (bps/Hz).
    """

    bs_intensity: float = 2.0 / REFERENCE_AREA_KM2
    users_per_cluster: int = 8
    cluster_radius: float = 0.8
    pathloss_exponent: float = 4.0
    tx_power: float = 2.0
    noise_power: float = 1e-14
    detection_threshold: float = 1.0
    rate_target: float = 3.0
    rate_targets: Optional[Tuple[float, ...]] = None
    region_side: float = 10.0

    def __post_init__(self):
        if self.rate_targets is not None:
            object.__setattr__(self, "rate_targets", tuple(float(r) for r in self.rate_targets))
        problems = self.problems()
        if problems:
            raise ParameterError(problems)

    def problems(self):
        """Every violated invariant, as human-readable strings."""
        out = []

        def finite(name):
            value = getattr(self, name)
            try:
                ok = math.isfinite(float(value))
            except (TypeError, ValueError):
                ok = False
            if not ok:
                out.append(f"{name} must be a finite number (got {value!r})")
            return ok

        if finite("bs_intensity") and self.bs_intensity < 0:
            out.append("bs_intensity must be >= 0")
        c = self.users_per_cluster
        if isinstance(c, bool) or not isinstance(c, int) or c < 1:
            out.append(f"users_per_cluster must be an integer >= 1 (got {c!r})")
        if finite("cluster_radius") and self.cluster_radius <= 0:
            out.append("cluster_radius must be > 0")
        if finite("pathloss_exponent") and self.pathloss_exponent <= 2:
            out.append("pathloss_exponent: alpha>2 required")
        if finite("tx_power") and self.tx_power <= 0:
            out.append("tx_power must be > 0")
        if finite("noise_power") and self.noise_power < 0:
            out.append("noise_power must be >= 0")
        if finite("detection_threshold") and self.detection_threshold <= 0:
            out.append("detection_threshold must be > 0")
        if finite("rate_target") and self.rate_target <= 0:
            out.append("rate_target must be > 0")
        if self.rate_targets is not None:
            if isinstance(c, int) and len(self.rate_targets) != c:
                out.append("rate_targets must have one entry per rank")
            if any(not (r > 0) for r in self.rate_targets):
                out.append("all rate_targets must be > 0")
        if finite("region_side") and self.region_side <= 0:
            out.append("region_side must be > 0")
        return out

    # ------------------------------------------------------------------
    @classmethod
    def from_cluster_count(cls, clusters_in_window=2.0, **overrides):
        """Default parameters with the BS intensity given as lambda_m |A|.

        ``clusters_in_window`` is lambda_m * |A| for the 10 x 10 km^2 window.
        """
        overrides.setdefault("bs_intensity", clusters_in_window / REFERENCE_AREA_KM2)
        return cls(**overrides)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def clusters_in_window(self):
        return self.bs_intensity * self.region_side ** 2

    def rate_for(self, m):
        """Rate target (bps/Hz) of the rank-``m`` user."""
        check_rank(m, self.users_per_cluster)
        if self.rate_targets is not None:
            return self.rate_targets[m - 1]
        return self.rate_target

    def sinr_target(self, m):
        """NOMA SINR target 2^R_m - 1 of rank ``m``."""
        return 2.0 ** self.rate_for(m) - 1.0

    def oma_sinr_target(self, m=1):
        """TDMA SINR target 2^(R_m * c) - 1 of rank ``m``."""
        return 2.0 ** (self.rate_for(m) * self.users_per_cluster) - 1.0


def check_rank(m, c):
    if isinstance(m, bool) or int(m) != m or not 1 <= m <= c:
        raise DomainError(f"rank m={m!r} outside 1..{c}")
    return int(m)
