"""Run configuration: one flat-ish JSON document, validated on load.

Every CLI flag has a config-file equivalent; flags win.  Unknown keys are
rejected loudly so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .errors import ConfigError
from .hybrid import CERTIFIER_PRESETS
from .roles import SCENARIOS, Alphas

MODES = ("bfl", "fl")
SCHEMES = ("hybrid", "certifier_only")


@dataclass
class CostModel:
    """Coefficients of the simulated-latency model.

    delay = per_hash * hash_calls + per_byte * tx_bytes
            + per_train * sum(epochs * samples / max(cp, cp_floor))
            + per_compare * miners
    """

    per_hash: float = 1e-6
    per_byte: float = 1e-6
    per_train: float = 1e-7
    per_compare: float = 1e-6
    cp_floor: float = 0.05


@dataclass
class DatasetSpec:
    n_classes: int = 10
    dim: int = 16
    per_class: int = 100  # training samples per class
    test_per_class: int = 25  # global held-out accuracy slice
    val_per_class: int = 25  # pool cut into private validator slices
    skew: float = 0.5  # Dirichlet concentration for label skew
    separation: float = 4.0
    spread: float = 1.0
    csv_path: Optional[str] = None  # external dataset, overrides synthesis


@dataclass
class Rewards:
    per_epoch_sample: float = 0.001
    per_validation: float = 0.01
    per_block: float = 0.1


@dataclass
class RunConfig:
    scenario: str = "dominant_workers"
    mode: str = "bfl"
    signature_scheme: str = "hybrid"
    n_devices: int = 8
    rounds: int = 100
    seed: int = 7
    ratio: Tuple[int, int, int] = (5, 2, 1)
    alphas: Optional[Alphas] = None  # None picks the scenario preset
    xmss_height: int = 5
    certifier_preset: str = "dilithium5"
    epochs: int = 3
    lr: float = 0.5
    threshold: float = 0.15
    endorsement_quorum: int = 1
    rewards: Rewards = field(default_factory=Rewards)
    cost: CostModel = field(default_factory=CostModel)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    out_dir: Optional[str] = None

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.signature_scheme not in SCHEMES:
            raise ConfigError(
                f"signature_scheme must be one of {SCHEMES}, got {self.signature_scheme!r}"
            )
        if self.n_devices < 3:
            raise ConfigError(f"n_devices must be >= 3, got {self.n_devices}")
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if not 2 <= self.xmss_height <= 10:
            raise ConfigError(f"xmss_height must be in 2..10, got {self.xmss_height}")
        if self.certifier_preset not in CERTIFIER_PRESETS:
            raise ConfigError(
                f"certifier_preset must be one of {sorted(CERTIFIER_PRESETS)}, "
                f"got {self.certifier_preset!r}"
            )
        if len(self.ratio) != 3 or any(r <= 0 for r in self.ratio):
            raise ConfigError(f"ratio must be three positive numbers, got {self.ratio}")
        if self.epochs < 1 or self.lr <= 0:
            raise ConfigError("epochs must be >= 1 and lr positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.endorsement_quorum < 1:
            raise ConfigError("endorsement_quorum must be >= 1")
        if self.dataset.n_classes < 2 or self.dataset.dim < 1:
            raise ConfigError("dataset needs n_classes >= 2 and dim >= 1")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["ratio"] = list(self.ratio)
        data["alphas"] = None if self.alphas is None else dataclasses.asdict(self.alphas)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key, sub in (("rewards", Rewards), ("cost", CostModel), ("dataset", DatasetSpec)):
            if key in kwargs and isinstance(kwargs[key], dict):
                sub_known = {f.name for f in dataclasses.fields(sub)}
                sub_unknown = set(kwargs[key]) - sub_known
                if sub_unknown:
                    raise ConfigError(f"unknown {key} keys: {sorted(sub_unknown)}")
                kwargs[key] = sub(**kwargs[key])
        if "ratio" in kwargs and kwargs["ratio"] is not None:
            kwargs["ratio"] = tuple(kwargs["ratio"])
        if "alphas" in kwargs and isinstance(kwargs["alphas"], dict):
            kwargs["alphas"] = Alphas(**kwargs["alphas"])
        try:
            config = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return config

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
