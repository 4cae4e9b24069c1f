from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqbfl.errors import ParameterError
from pqbfl.roles import (
    MINER,
    SCENARIO_ALPHAS,
    SCENARIOS,
    VALIDATOR,
    WORKER,
    Alphas,
    SelectionFactors,
    assign_roles,
    partition_counts,
    random_counts,
    selection_value,
)


def test_selection_value_is_reward_minus_penalty():
    factors = SelectionFactors(vrf=0.5, stake=0.25, cp=0.75, sh=0.1, cd=0.2, wd=0.3, ls=0.4)
    assert selection_value(factors, Alphas()) == pytest.approx(
        0.5 + 0.25 + 0.75 + 0.1 - 0.2 - 0.3 - 0.4
    )
    damped = Alphas(vrf=0.0, stake=0.0, cp=0.0)
    assert selection_value(factors, damped) == pytest.approx(0.1 - 0.2 - 0.3 - 0.4)
    with pytest.raises(ParameterError):
        selection_value(SelectionFactors(vrf=float("inf")), Alphas())


def test_scenario_presets_cover_all_scenarios():
    assert set(SCENARIO_ALPHAS) == set(SCENARIOS)
    miners = SCENARIO_ALPHAS["dominant_miners"]
    assert (miners.sh, miners.cd, miners.wd, miners.ls) == (0.0, 0.0, 0.0, 0.0)
    assert (miners.vrf, miners.stake, miners.cp) == (1.0, 1.0, 1.0)


def test_partition_counts_examples():
    assert partition_counts(8, (5, 2, 1)) == (5, 2, 1)
    assert partition_counts(16, (5, 2, 1)) == (10, 4, 2)
    assert partition_counts(24, (5, 2, 1)) == (15, 6, 3)
    assert partition_counts(7, (5, 2, 1)) == (4, 2, 1)
    assert partition_counts(3, (5, 2, 1)) == (1, 1, 1)
    assert partition_counts(9, (1, 1, 1)) == (3, 3, 3)


def test_partition_counts_always_sum_and_populate():
    for n in range(3, 40):
        w, v, m = partition_counts(n, (5, 2, 1))
        assert w + v + m == n
        assert w >= 1 and v >= 1 and m >= 1


def test_partition_counts_validation():
    with pytest.raises(ParameterError):
        partition_counts(2, (5, 2, 1))
    with pytest.raises(ParameterError):
        partition_counts(8, (5, 0, 1))
    with pytest.raises(ParameterError):
        partition_counts(8, (5, 2))


def test_random_counts_cover_every_role():
    rng = random.Random(5)
    for _ in range(200):
        w, v, m = random_counts(8, rng)
        assert w + v + m == 8
        assert w >= 1 and v >= 1 and m >= 1


def test_dominant_workers_gives_best_devices_the_worker_role():
    values = {i: float(i) for i in range(8)}  # device 7 strongest
    assignment = assign_roles(values, "dominant_workers")
    assert assignment.counts == (5, 2, 1)
    assert assignment.of_role(WORKER) == [3, 4, 5, 6, 7]
    assert assignment.of_role(VALIDATOR) == [1, 2]
    assert assignment.of_role(MINER) == [0]


def test_dominant_miners_gives_best_devices_the_miner_role():
    values = {i: float(i) for i in range(8)}
    assignment = assign_roles(values, "dominant_miners")
    assert assignment.of_role(MINER) == [7]
    assert assignment.of_role(VALIDATOR) == [5, 6]
    assert assignment.of_role(WORKER) == [0, 1, 2, 3, 4]


def test_total_tie_breaks_to_id_order():
    values = {i: 1.0 for i in range(8)}
    for scenario in ("dominant_workers", "dominant_miners"):
        assignment = assign_roles(values, scenario)
        assert assignment.of_role(WORKER) == [0, 1, 2, 3, 4]
        assert assignment.of_role(VALIDATOR) == [5, 6]
        assert assignment.of_role(MINER) == [7]


@settings(max_examples=80, deadline=None)
@given(
    raw=st.lists(st.integers(min_value=-50, max_value=50), min_size=4, max_size=12),
    scale=st.floats(min_value=1e-3, max_value=1e3, allow_nan=False),
)
def test_assignment_is_scale_invariant(raw, scale):
    # coarse value grid keeps distinct values distinct after float scaling
    values = {i: v / 10 for i, v in enumerate(raw)}
    scaled = {i: v * scale for i, v in values.items()}
    for scenario in ("dominant_workers", "dominant_miners"):
        assert assign_roles(values, scenario).roles == assign_roles(scaled, scenario).roles


def test_random_scenario_is_seeded_and_reproducible():
    values = {i: float(i) for i in range(8)}
    one = assign_roles(values, "random", rng=random.Random(3))
    two = assign_roles(values, "random", rng=random.Random(3))
    assert one.roles == two.roles
    assert one.counts == (5, 2, 1)
    with pytest.raises(ParameterError):
        assign_roles(values, "random")


def test_no_ratio_scenario_draws_varying_counts():
    values = {i: float(i) for i in range(8)}
    rng = random.Random(4)
    seen = {assign_roles(values, "no_ratio", rng=rng).counts for _ in range(20)}
    assert len(seen) >= 2
    for w, v, m in seen:
        assert w + v + m == 8
        assert w >= 1 and v >= 1 and m >= 1


def test_unknown_scenario_and_bad_counts_are_rejected():
    values = {i: 0.0 for i in range(4)}
    with pytest.raises(ParameterError):
        assign_roles(values, "anarchy")
    with pytest.raises(ParameterError):
        assign_roles(values, "dominant_workers", counts=(1, 1, 1))
