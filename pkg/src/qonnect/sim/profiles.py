"""Per-profile worker node parameters.

Energy, cost, and bandwidth follow the published testbed assignment: the
lowest/midpoint/highest energy coefficients and the t4g.nano / midpoint /
p4d.24xlarge cost and bandwidth figures, identical across domains. The
cpu/memory/storage baseline is synthetic: the performance profile keeps the
full baseline while energy and cost profiles give up 4 cores, 5 GiB memory,
and 2 GiB storage, mirroring the reduced-resource worker setup.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ProfileSpec:
    name: str
    energy: float  # kWh per node-hour
    pricing: float  # EUR/h
    bandwidth: float  # Gbps
    cpu: float  # cores
    memory: float  # GiB
    storage: float  # GiB


PROFILES: dict[str, ProfileSpec] = {
    "energy": ProfileSpec(
        name="energy", energy=0.0024042, pricing=16.3884, bandwidth=52.5,
        cpu=4.0, memory=11.0, storage=98.0,
    ),
    "cost": ProfileSpec(
        name="cost", energy=0.0025689, pricing=0.0042, bandwidth=5.0,
        cpu=4.0, memory=11.0, storage=98.0,
    ),
    "performance": ProfileSpec(
        name="performance", energy=0.0027335, pricing=32.7726, bandwidth=100.0,
        cpu=8.0, memory=16.0, storage=100.0,
    ),
}
