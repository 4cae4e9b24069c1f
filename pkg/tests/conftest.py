from __future__ import annotations

import pytest

from pqbfl.config import DatasetSpec, RunConfig

#: Pass/fail lines recorded by the acceptance gate, replayed after the run
#: summary so they stay visible even when pytest captures test stdout.
ACCEPTANCE_CHECKLIST: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_CHECKLIST:
        terminalreporter.section("acceptance checklist")
        for line in ACCEPTANCE_CHECKLIST:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_config():
    """Factory for fast-running configurations used across the suite."""

    def make(**overrides) -> RunConfig:
        base = dict(
            rounds=4,
            n_devices=4,
            xmss_height=3,
            seed=11,
            certifier_preset="falcon512",
            dataset=DatasetSpec(
                n_classes=3, dim=4, per_class=30, test_per_class=10, val_per_class=10
            ),
        )
        base.update(overrides)
        return RunConfig(**base)

    return make
