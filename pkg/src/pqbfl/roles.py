"""Multi-factor role selection: workers, validators, miners.

Each device gets a scalar selection value combining randomness (VRF
output), resources (stake, computing power) and last-round learning
behaviour (contribution, model divergence, distribution distance,
normalized loss).  Rewarding factors add, penalizing factors subtract:

    sv = a_vrf * vrf + a_stake * stake + a_cp * cp + a_sh * sh
         - (a_cd * cd + a_wd * wd + a_ls * ls)

Role counts come from a fixed worker:validator:miner ratio scaled to the
cohort size; the sorted (or shuffled) device list is then cut into the
worker, validator and miner slices in that order.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ParameterError

WORKER = "worker"
VALIDATOR = "validator"
MINER = "miner"

SCENARIOS = ("dominant_miners", "dominant_workers", "random", "no_ratio")


@dataclass(frozen=True)
class SelectionFactors:
    """Per-device inputs to the selection value, all unit-interval scaled."""

    vrf: float = 0.0
    stake: float = 0.0
    cp: float = 0.0
    sh: float = 0.0
    cd: float = 0.0
    wd: float = 0.0
    ls: float = 0.0


@dataclass(frozen=True)
class Alphas:
    """Weights for the seven selection factors."""

    vrf: float = 1.0
    stake: float = 1.0
    cp: float = 1.0
    sh: float = 1.0
    cd: float = 1.0
    wd: float = 1.0
    ls: float = 1.0


#: per-scenario weight presets.  The miner-heavy scenario ignores learning
#: behaviour entirely.  The worker-heavy scenario is about consistently
#: picking the best-behaved trainers, so the noisy resource factors are
#: damped there; at equal weights the per-round randomness of vrf/cp/stake
#: (each spanning a full unit) drowns the much narrower learning factors
#: and selection degenerates to chance.
SCENARIO_ALPHAS: Dict[str, Alphas] = {
    "dominant_miners": Alphas(vrf=1.0, stake=1.0, cp=1.0, sh=0.0, cd=0.0, wd=0.0, ls=0.0),
    "dominant_workers": Alphas(vrf=0.1, stake=0.1, cp=0.1, sh=1.0, cd=1.0, wd=1.0, ls=1.0),
    "random": Alphas(),
    "no_ratio": Alphas(),
}

DEFAULT_RATIO = (5, 2, 1)


def selection_value(factors: SelectionFactors, alphas: Alphas) -> float:
    """Weighted reward-minus-penalty combination of the seven factors."""
    terms = (
        alphas.vrf * factors.vrf,
        alphas.stake * factors.stake,
        alphas.cp * factors.cp,
        alphas.sh * factors.sh,
        -alphas.cd * factors.cd,
        -alphas.wd * factors.wd,
        -alphas.ls * factors.ls,
    )
    value = sum(terms)
    if not math.isfinite(value):
        raise ParameterError(f"non-finite selection value from {factors}")
    return value


def partition_counts(
    n_devices: int, ratio: Tuple[int, int, int] = DEFAULT_RATIO
) -> Tuple[int, int, int]:
    """Scale the role ratio to ``n_devices`` whole counts.

    Quotas are floored; leftover slots go to workers first, then
    validators.  At least one validator and one miner are always kept
    (taken from the worker quota if needed), which is why fewer than three
    devices cannot form a cohort.
    """
    if n_devices < 3:
        raise ParameterError(f"need at least 3 devices, got {n_devices}")
    if len(ratio) != 3 or any(r <= 0 for r in ratio):
        raise ParameterError(f"ratio must be three positive numbers, got {ratio}")
    total = sum(ratio)
    quotas = [r / total * n_devices for r in ratio]
    counts = [math.floor(q) for q in quotas]
    leftover = n_devices - sum(counts)
    for slot in range(leftover):
        counts[slot % 2] += 1  # workers first, then validators
    while counts[2] < 1:
        counts[0] -= 1
        counts[2] += 1
    while counts[1] < 1:
        counts[0] -= 1
        counts[1] += 1
    if counts[0] < 1:
        raise ParameterError(f"ratio {ratio} leaves no workers for n={n_devices}")
    return counts[0], counts[1], counts[2]


def random_counts(n_devices: int, rng: random.Random) -> Tuple[int, int, int]:
    """Random role counts with every role populated."""
    if n_devices < 3:
        raise ParameterError(f"need at least 3 devices, got {n_devices}")
    miners = rng.randint(1, n_devices - 2)
    validators = rng.randint(1, n_devices - miners - 1)
    workers = n_devices - miners - validators
    return workers, validators, miners


@dataclass
class RoleAssignment:
    roles: Dict[int, str]
    counts: Tuple[int, int, int]  # (workers, validators, miners)

    def of_role(self, role: str) -> List[int]:
        return sorted(d for d, r in self.roles.items() if r == role)


def assign_roles(
    values: Dict[int, float],
    scenario: str,
    ratio: Tuple[int, int, int] = DEFAULT_RATIO,
    rng: Optional[random.Random] = None,
    counts: Optional[Tuple[int, int, int]] = None,
) -> RoleAssignment:
    """Order devices per scenario and cut into worker/validator/miner slices.

    dominant_workers sorts by descending value so the strongest devices
    train; dominant_miners sorts ascending so they mine instead.  The
    random scenarios shuffle.  Ties always break toward the lower device
    id, making assignment fully deterministic given values and seed.
    """
    if scenario not in SCENARIOS:
        raise ParameterError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    device_ids = sorted(values)
    if scenario in ("random", "no_ratio"):
        if rng is None:
            raise ParameterError(f"scenario {scenario!r} needs a seeded rng")
        order = list(device_ids)
        rng.shuffle(order)
    elif scenario == "dominant_workers":
        order = sorted(device_ids, key=lambda d: (-values[d], d))
    else:  # dominant_miners: ascending, best devices land in the miner slice
        order = sorted(device_ids, key=lambda d: (values[d], d))
    if counts is None:
        if scenario == "no_ratio":
            counts = random_counts(len(order), rng)
        else:
            counts = partition_counts(len(order), ratio)
    workers, validators, miners = counts
    if workers + validators + miners != len(order):
        raise ParameterError(f"counts {counts} do not cover {len(order)} devices")
    roles = {}
    for position, device in enumerate(order):
        if position < workers:
            roles[device] = WORKER
        elif position < workers + validators:
            roles[device] = VALIDATOR
        else:
            roles[device] = MINER
    return RoleAssignment(roles=roles, counts=(workers, validators, miners))
