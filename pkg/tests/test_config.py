from __future__ import annotations

import json

import pytest

from pqbfl.config import CostModel, DatasetSpec, Rewards, RunConfig
from pqbfl.errors import ConfigError
from pqbfl.roles import Alphas


def test_defaults_validate_and_match_the_documented_setup():
    config = RunConfig()
    config.validate()
    assert config.scenario == "dominant_workers"
    assert config.mode == "bfl"
    assert config.signature_scheme == "hybrid"
    assert (config.n_devices, config.rounds, config.seed) == (8, 100, 7)
    assert config.ratio == (5, 2, 1)
    assert config.xmss_height == 5
    assert config.certifier_preset == "dilithium5"
    assert config.dataset == DatasetSpec()
    assert config.cost == CostModel()
    assert config.rewards == Rewards()


@pytest.mark.parametrize(
    "overrides",
    [
        {"scenario": "anarchy"},
        {"mode": "p2p"},
        {"signature_scheme": "rsa"},
        {"n_devices": 2},
        {"rounds": 0},
        {"xmss_height": 1},
        {"xmss_height": 11},
        {"certifier_preset": "sphincs"},
        {"ratio": (5, 2)},
        {"ratio": (5, 0, 1)},
        {"epochs": 0},
        {"lr": 0.0},
        {"threshold": 1.5},
        {"endorsement_quorum": 0},
        {"dataset": DatasetSpec(n_classes=1)},
    ],
)
def test_validation_rejects_each_bad_field(overrides):
    config = RunConfig(**overrides)
    with pytest.raises(ConfigError):
        config.validate()


def test_dict_roundtrip():
    config = RunConfig(rounds=9, alphas=Alphas(vrf=0.5), ratio=(3, 2, 1))
    rebuilt = RunConfig.from_dict(config.to_dict())
    assert rebuilt == config
    assert rebuilt.ratio == (3, 2, 1)
    assert rebuilt.alphas == Alphas(vrf=0.5)


def test_unknown_keys_are_rejected_loudly():
    with pytest.raises(ConfigError, match="unknown config keys"):
        RunConfig.from_dict({"roundz": 5})
    with pytest.raises(ConfigError, match="unknown cost keys"):
        RunConfig.from_dict({"cost": {"per_hash": 1e-6, "per_mile": 1.0}})
    with pytest.raises(ConfigError, match="unknown dataset keys"):
        RunConfig.from_dict({"dataset": {"classes": 10}})


def test_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"rounds": 5, "seed": 3, "dataset": {"n_classes": 4}}))
    config = RunConfig.from_file(str(path))
    assert config.rounds == 5
    assert config.seed == 3
    assert config.dataset.n_classes == 4
    assert config.dataset.dim == DatasetSpec().dim  # unset keys keep defaults

    with pytest.raises(ConfigError, match="not found"):
        RunConfig.from_file(str(tmp_path / "nope.json"))

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="valid JSON"):
        RunConfig.from_file(str(bad))

    array = tmp_path / "array.json"
    array.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        RunConfig.from_file(str(array))


def test_dumps_is_parseable_and_sorted():
    text = RunConfig().dumps()
    data = json.loads(text)
    assert data["scenario"] == "dominant_workers"
    assert list(data) == sorted(data)
