"""Network configuration shared by the analytical modules and the simulator.

Everything in :class:`Scenario` is linear and SI: density in BS per m^2,
distances in meters, powers relative to the transmit power with path loss
referenced to 1 m. The helpers at the bottom are the only dB / per-km^2
conversions in the package.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

from .errors import DomainError
from .fading import Exponential, FadingModel, from_dict as fading_from_dict

SCHEDULING_MODES = ("FR", "CS")


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def per_km2(density_km2):
    """BS per km^2 to BS per m^2."""
    return density_km2 * 1e-6


@dataclass(frozen=True)
class Scenario:
    density: float
    alpha: float
    radius: float
    threshold: float = 0.0
    snr: float = db_to_linear(162.0)
    fading: FadingModel = field(default_factory=Exponential)
    cluster_size: int | None = None
    scheduling: str = "FR"
    pilots: int | None = None

    def __post_init__(self):
        if not self.density > 0:
            raise DomainError("density must be positive")
        if not self.alpha > 2:
            raise DomainError("path loss exponent must exceed 2")
        if not self.radius > 0:
            raise DomainError("cooperation radius must be positive")
        if not self.threshold >= 0:
            raise DomainError("activation threshold must be nonnegative")
        if not self.snr > 0:
            raise DomainError("transmit SNR must be positive")
        if self.scheduling not in SCHEDULING_MODES:
            raise DomainError(f"scheduling must be one of {SCHEDULING_MODES}")
        if self.cluster_size is not None and (int(self.cluster_size) != self.cluster_size or self.cluster_size < 1):
            raise DomainError("cluster_size must be a positive integer")
        if self.pilots is not None and (int(self.pilots) != self.pilots or self.pilots < 1):
            raise DomainError("pilots must be a positive integer")

    @classmethod
    def from_edge_threshold(cls, edge_threshold, *, radius, alpha, **kwargs):
        """Build from the cluster-edge threshold T~ = T * D^alpha (linear)."""
        if not edge_threshold >= 0:
            raise DomainError("edge threshold must be nonnegative")
        return cls(radius=radius, alpha=alpha, threshold=edge_threshold * radius ** (-alpha), **kwargs)

    @property
    def edge_threshold(self):
        return self.threshold * self.radius**self.alpha

    @property
    def conditional(self):
        return self.cluster_size is not None

    @property
    def mean_cluster_size(self):
        return self.density * math.pi * self.radius**2

    @property
    def delta(self):
        return 2.0 / self.alpha

    def with_(self, **changes):
        return replace(self, **changes)

    def with_edge_threshold(self, edge_threshold, **changes):
        """Copy with T~ fixed, recomputing T for the (possibly changed) radius and alpha."""
        radius = changes.get("radius", self.radius)
        alpha = changes.get("alpha", self.alpha)
        return replace(self, threshold=edge_threshold * radius ** (-alpha), **changes)

    def to_dict(self):
        return {
            "density": self.density,
            "alpha": self.alpha,
            "radius": self.radius,
            "threshold": self.threshold,
            "snr": self.snr,
            "fading": self.fading.to_dict(),
            "cluster_size": self.cluster_size,
            "scheduling": self.scheduling,
            "pilots": self.pilots,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["fading"] = fading_from_dict(data.get("fading", {"type": "exponential"}))
        return cls(**data)

    def digest(self):
        """Short stable hash of the resolved configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
