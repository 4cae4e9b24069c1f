"""Round-driven simulation of federated learning on the signed ledger.

One round walks the full pipeline: resample computing power, evaluate each
device's VRF on the previous block hash, combine factors into selection
values, cut the cohort into workers/validators/miners, train and sign
updates, validate and endorse them, mine candidate blocks, pick the one
winner by beacon closeness, aggregate the winning block's updates, pay
rewards and emit a metrics row.  Everything is derived from one master
seed through labeled sub-seeds, so a given configuration reproduces its
outputs byte for byte.

In FL mode the ledger is switched off: the same selection and training
happen, updates aggregate directly, and no signatures, transactions or
blocks are produced.  Learning factors always lag one round: selection in
round r sees the reports written in round r-1, and all-zero reports in
round 0.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .chain import (
    Chain,
    CertifierOnlySigner,
    ModelUpdate,
    RewardConstants,
    StakeBook,
    Transaction,
    apply_rewards,
    create_tx,
    mine_block,
    select_winner,
    validate_tx,
)
from .config import RunConfig
from .errors import ConfigError, ConsensusError
from .fl import (
    LabeledDataset,
    Model,
    cosine_distance,
    evaluate,
    fedavg,
    load_csv_dataset,
    make_global_dataset,
    shard,
    train_local,
    wasserstein,
    zero_model,
)
from .hashing import HASH_COUNTER
from .hybrid import HybridKeychain, Registry, make_certifier
from .roles import (
    MINER,
    SCENARIO_ALPHAS,
    VALIDATOR,
    WORKER,
    RoleAssignment,
    SelectionFactors,
    assign_roles,
    selection_value,
)
from .vrf import vrf_keygen, vrf_prove, vrf_verify

logger = logging.getLogger(__name__)

METRIC_FIELDS = [
    "round",
    "w",
    "v",
    "m",
    "winner_id",
    "accuracy",
    "mean_loss",
    "tx_bytes",
    "delay",
    "block_time",
    "hash_calls",
]


def _subseed(master: int, label: str) -> int:
    """Labeled 64-bit sub-seed; plain hashlib so the cost counter stays clean."""
    digest = hashlib.sha256(f"{label}:{master}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _subseed_bytes(master: int, label: str) -> bytes:
    return hashlib.sha256(f"{label}:{master}".encode()).digest()


@dataclass
class LearningReport:
    """Last known training behaviour of one device; zeros before first work."""

    ls: float = 0.0
    val_accuracy: float = 0.0
    sh: float = 0.0
    cd: float = 0.0
    wd: float = 0.0


@dataclass
class DeviceSim:
    index: int
    name: str
    keychain: HybridKeychain
    signer: object  # HybridKeychain or CertifierOnlySigner
    shard_data: LabeledDataset
    val_slice: LabeledDataset
    static_wd: float
    report: LearningReport = field(default_factory=LearningReport)
    cp: float = 0.0
    tip_hash: bytes = b""


@dataclass
class RoundMetrics:
    round_no: int
    counts: Tuple[int, int, int]
    winner_id: str
    accuracy: float
    mean_loss: float
    tx_bytes: int
    delay: float
    block_time: float
    hash_calls: int
    sv: Dict[int, float]
    roles: Dict[int, str]
    factors: Dict[int, SelectionFactors]

    def csv_row(self, n_devices: int) -> list:
        row = [
            self.round_no,
            self.counts[0],
            self.counts[1],
            self.counts[2],
            self.winner_id,
            self.accuracy,
            self.mean_loss,
            self.tx_bytes,
            self.delay,
            self.block_time,
            self.hash_calls,
        ]
        row.extend(self.sv[i] for i in range(n_devices))
        row.extend(self.roles[i] for i in range(n_devices))
        return row


@dataclass
class SimResult:
    config: RunConfig
    metrics: List[RoundMetrics]
    chain: Optional[Chain]
    registry: Optional[Registry]
    devices: List[DeviceSim]
    global_model: Model
    final_accuracy: float
    vrf_pks: Dict[int, Dict[str, str]]
    stakes: Dict[str, float]

    def metrics_header(self) -> List[str]:
        n = len(self.devices)
        return METRIC_FIELDS + [f"sv_{i}" for i in range(n)] + [f"role_{i}" for i in range(n)]

    def write_metrics_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.metrics_header())
            for row in self.metrics:
                writer.writerow(row.csv_row(len(self.devices)))

    def write_chain(self, path: str | Path) -> None:
        from .chain import chain_to_lines

        if self.chain is None:
            raise ConsensusError("FL mode produces no chain to export")
        with open(path, "w") as fh:
            for line in chain_to_lines(self.chain):
                fh.write(line + "\n")

    def write_state(self, path: str | Path) -> None:
        state = {
            "quorum": self.config.endorsement_quorum,
            "devices": [d.keychain.state_dict() for d in self.devices],
            "stakes": self.stakes,
            "vrf_pks": {str(r): pks for r, pks in self.vrf_pks.items()},
        }
        if self.chain is not None:
            state["chain_length"] = len(self.chain.blocks)
        with open(path, "w") as fh:
            json.dump(state, fh, indent=1, sort_keys=True)


def registry_from_state(state: dict) -> Registry:
    """Rebuild verification material (certifier pks, certified roots)."""
    from .hybrid import CertifiedTree, MockCertifier, RegistryRecord

    registry = Registry()
    for dev in state["devices"]:
        certifier = MockCertifier(
            dev["certifier"]["preset"],
            dev["certifier"]["pk_size"],
            dev["certifier"]["sig_size"],
        )
        record = RegistryRecord(
            signer_id=dev["device_id"],
            certifier=certifier,
            certifier_pk=bytes.fromhex(dev["certifier"]["pk"]),
            public_seed=bytes.fromhex(dev["public_seed"]),
        )
        for tree in dev["certified_trees"]:
            record.trees[tree["tree_no"]] = CertifiedTree(
                tree_no=tree["tree_no"],
                root=bytes.fromhex(tree["root"]),
                certifier_sig=bytes.fromhex(tree["certifier_sig"]),
            )
        registry.register(record)
    return registry


class Simulation:
    """Mutable run state; ``run()`` drives it for config.rounds rounds."""

    def __init__(self, config: RunConfig) -> None:
        config.validate()
        self.config = config
        seed = config.seed
        self.cp_rng = random.Random(_subseed(seed, "cp"))
        self.scenario_rng = random.Random(_subseed(seed, "scenario"))
        self.train_set, self.test_set, val_pool = self._make_datasets()
        self.registry = Registry()
        shards = shard(
            self.train_set, config.n_devices, config.dataset.skew, _subseed(seed, "shard")
        )
        empty = [i for i, s in enumerate(shards) if len(s) == 0]
        if empty:
            raise ConfigError(
                f"label-skew sharding left devices {empty} with no training data; "
                "lower dataset.skew, add samples, or reduce n_devices"
            )
        global_hist = self.train_set.label_hist()
        certifier = make_certifier(config.certifier_preset)
        self.devices: List[DeviceSim] = []
        for i in range(config.n_devices):
            name = f"device_{i}"
            keychain = HybridKeychain(
                device_id=name,
                height=config.xmss_height,
                secret_seed=_subseed_bytes(seed, f"sk:{i}"),
                public_seed=_subseed_bytes(seed, f"pk:{i}"),
                certifier=certifier,
                registry=self.registry,
                cert_seed=_subseed_bytes(seed, f"cert:{i}"),
            )
            signer = (
                CertifierOnlySigner(keychain)
                if config.signature_scheme == "certifier_only"
                else keychain
            )
            local = shards[i]
            self.devices.append(
                DeviceSim(
                    index=i,
                    name=name,
                    keychain=keychain,
                    signer=signer,
                    shard_data=local,
                    val_slice=val_pool.subset(np.arange(i, len(val_pool), config.n_devices)),
                    static_wd=wasserstein(local.label_hist(), global_hist),
                )
            )
        self.device_seeds = [
            _subseed_bytes(seed, f"vrf:{i}") for i in range(config.n_devices)
        ]
        self.beacon_seed = _subseed_bytes(seed, "beacon")
        self.stake_book = StakeBook([d.name for d in self.devices])
        self.rewards = RewardConstants(
            per_epoch_sample=config.rewards.per_epoch_sample,
            per_validation=config.rewards.per_validation,
            per_block=config.rewards.per_block,
        )
        self.alphas = (
            config.alphas if config.alphas is not None else SCENARIO_ALPHAS[config.scenario]
        )
        self.chain = Chain() if config.mode == "bfl" else None
        self.global_model = zero_model(config.dataset.n_classes, self.train_set.dim)
        self.metrics: List[RoundMetrics] = []
        self.vrf_pks: Dict[int, Dict[str, str]] = {}
        self._fl_alpha = hashlib.sha256(f"fl-genesis:{seed}".encode()).digest()

    def _make_datasets(self) -> Tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
        spec = self.config.dataset
        if spec.csv_path is not None:
            full = load_csv_dataset(spec.csv_path, spec.n_classes)
            fractions = (0.7, 0.15, 0.15)
            splits: List[List[int]] = [[], [], []]
            for cls in range(full.n_classes):
                idx = np.flatnonzero(full.labels == cls)
                n_test = max(1, int(len(idx) * fractions[1]))
                n_val = max(1, int(len(idx) * fractions[2]))
                splits[1].extend(idx[:n_test])
                splits[2].extend(idx[n_test: n_test + n_val])
                splits[0].extend(idx[n_test + n_val:])
            parts = [full.subset(np.asarray(sorted(s), dtype=np.int64)) for s in splits]
            return parts[0], parts[1], parts[2]
        total_per_class = spec.per_class + spec.test_per_class + spec.val_per_class
        full = make_global_dataset(
            n_classes=spec.n_classes,
            dim=spec.dim,
            per_class=total_per_class,
            seed=_subseed(self.config.seed, "data"),
            separation=spec.separation,
            spread=spec.spread,
        )
        train_idx: List[int] = []
        test_idx: List[int] = []
        val_idx: List[int] = []
        for cls in range(spec.n_classes):
            idx = np.flatnonzero(full.labels == cls)
            train_idx.extend(idx[: spec.per_class])
            test_idx.extend(idx[spec.per_class: spec.per_class + spec.test_per_class])
            val_idx.extend(idx[spec.per_class + spec.test_per_class:])
        return (
            full.subset(np.asarray(sorted(train_idx), dtype=np.int64)),
            full.subset(np.asarray(sorted(test_idx), dtype=np.int64)),
            full.subset(np.asarray(sorted(val_idx), dtype=np.int64)),
        )

    # --- round pipeline ---------------------------------------------------

    def _alpha(self) -> bytes:
        if self.chain is not None:
            return self.chain.tip.block_hash
        return self._fl_alpha

    def run_round(self, round_no: int) -> RoundMetrics:
        config = self.config
        mark = HASH_COUNTER.count
        alpha = self._alpha()
        bfl = config.mode == "bfl"

        # step 1: resources for this round
        for dev in self.devices:
            dev.cp = self.cp_rng.random()

        # step 2: per-device VRF evaluation on the previous block hash
        vrf_units: Dict[int, float] = {}
        round_pks: Dict[str, str] = {}
        for dev in self.devices:
            kp = vrf_keygen(self.device_seeds[dev.index], round_no)
            out = vrf_prove(kp, alpha)
            vrf_units[dev.index] = out.unit_value
            round_pks[dev.name] = kp.vrf_pk.hex()

        # step 3: factor assembly; learning factors lag one round
        stakes = self.stake_book.normalized() if bfl else {d.name: 0.0 for d in self.devices}
        factors: Dict[int, SelectionFactors] = {}
        sv: Dict[int, float] = {}
        for dev in self.devices:
            f = SelectionFactors(
                vrf=vrf_units[dev.index],
                stake=stakes[dev.name],
                cp=dev.cp,
                sh=dev.report.sh,
                cd=dev.report.cd,
                wd=dev.report.wd,
                ls=dev.report.ls,
            )
            factors[dev.index] = f
            sv[dev.index] = selection_value(f, self.alphas)

        # step 4: role partition
        assignment: RoleAssignment = assign_roles(
            sv,
            config.scenario,
            ratio=config.ratio,
            rng=self.scenario_rng,
        )
        workers = assignment.of_role(WORKER)
        validators = assignment.of_role(VALIDATOR)
        miners = assignment.of_role(MINER)

        # step 5: local training and (in bfl mode) signed transactions
        updates: Dict[int, ModelUpdate] = {}
        losses: List[float] = []
        txs: List[Transaction] = []
        for i in workers:
            dev = self.devices[i]
            trained, ls = train_local(self.global_model, dev.shard_data, config.epochs, config.lr)
            self_acc = evaluate(trained, dev.shard_data)
            update = ModelUpdate(
                weights=trained.weights,
                epochs=config.epochs,
                n_samples=len(dev.shard_data),
                val_accuracy=self_acc,
            )
            updates[i] = update
            losses.append(ls)
            dev.report.ls = ls
            if bfl:
                txs.append(create_tx(dev.signer, update, round_no))

        # step 6: validation; validators score every update on private data
        val_acc: Dict[int, List[float]] = {i: [] for i in workers}
        validations: Dict[str, int] = {}
        if bfl:
            worker_by_name = {self.devices[i].name: i for i in workers}
            for v in validators:
                vdev = self.devices[v]
                validations[vdev.name] = len(txs)
                for tx in txs:
                    endorsement = validate_tx(
                        vdev.signer, tx, vdev.val_slice, config.threshold, self.registry
                    )
                    tx.endorsements.append(endorsement)
                    val_acc[worker_by_name[tx.signer_id]].append(endorsement.accuracy)
        else:
            for v in validators:
                vdev = self.devices[v]
                for i, update in updates.items():
                    model = Model(update.weights, self.global_model.n_classes, self.global_model.dim)
                    val_acc[i].append(evaluate(model, vdev.val_slice))

        # step 7: consensus; candidates from every miner, one beacon-picked winner
        winner_name = ""
        block_time = 0.0
        accepted: List[Tuple[int, ModelUpdate]] = []
        tx_bytes = 0
        if bfl:
            tip = self.chain.tip
            candidates = {}
            for m in miners:
                mdev = self.devices[m]
                candidates[mdev.name] = mine_block(
                    mdev.signer, txs, tip, self.registry, config.endorsement_quorum
                )
            beacon_mark = HASH_COUNTER.count
            beacon_kp = vrf_keygen(self.beacon_seed, round_no)
            beacon_out = vrf_prove(beacon_kp, alpha)
            if not vrf_verify(beacon_kp.vrf_pk, alpha, beacon_out):
                raise ConsensusError("beacon output failed verification")
            beacon_hashes = HASH_COUNTER.count - beacon_mark
            round_pks["beacon"] = beacon_kp.vrf_pk.hex()
            block_time = (
                config.cost.per_hash * beacon_hashes + config.cost.per_compare * len(miners)
            )
            winner_index = select_winner(
                {m: vrf_units[m] for m in miners}, beacon_out.unit_value
            )
            winner_name = self.devices[winner_index].name
            block = candidates[winner_name]
            self.chain.append(block, winner_name, self.registry)
            for dev in self.devices:
                dev.tip_hash = block.block_hash
            name_to_index = {d.name: d.index for d in self.devices}
            accepted = [(name_to_index[tx.signer_id], tx.update) for tx in block.txs]
            tx_bytes = sum(tx.wire_bytes() for tx in txs)
            apply_rewards(self.stake_book, block, validations, self.rewards)
        else:
            for i in sorted(updates):
                scores = val_acc[i]
                if any(s >= config.threshold for s in scores):
                    accepted.append((i, updates[i]))
            tx_bytes = sum(len(u.payload()) for u in updates.values())

        # step 8: aggregation in ascending device order, then global scoring
        accepted.sort(key=lambda pair: pair[0])
        if accepted:
            self.global_model = fedavg(
                [Model(u.weights, self.global_model.n_classes, self.global_model.dim)
                 for _, u in accepted],
                [u.n_samples for _, u in accepted],
            )
        accuracy = evaluate(self.global_model, self.test_set)
        mean_loss = float(np.mean(losses)) if losses else 0.0

        # step 9: refresh learning reports for this round's workers
        if val_acc:
            means = {i: float(np.mean(a)) if a else 0.0 for i, a in val_acc.items()}
            cohort_mean = float(np.mean(list(means.values()))) if means else 0.0
            for i in workers:
                dev = self.devices[i]
                dev.report.val_accuracy = means[i]
                dev.report.sh = means[i] - cohort_mean
                dev.report.cd = cosine_distance(updates[i].weights, self.global_model.weights)
                dev.report.wd = dev.static_wd

        hash_calls = HASH_COUNTER.count - mark
        train_cost = sum(
            config.epochs * len(self.devices[i].shard_data)
            / max(self.devices[i].cp, config.cost.cp_floor)
            for i in workers
        )
        delay = (
            config.cost.per_hash * hash_calls
            + config.cost.per_byte * tx_bytes
            + config.cost.per_train * train_cost
            + config.cost.per_compare * len(miners)
        )
        self.vrf_pks[round_no] = round_pks
        metrics = RoundMetrics(
            round_no=round_no,
            counts=assignment.counts,
            winner_id=winner_name,
            accuracy=accuracy,
            mean_loss=mean_loss,
            tx_bytes=tx_bytes,
            delay=delay,
            block_time=block_time,
            hash_calls=hash_calls,
            sv=sv,
            roles=dict(assignment.roles),
            factors=factors,
        )
        self.metrics.append(metrics)
        if self.chain is None:
            self._fl_alpha = hashlib.sha256(self._fl_alpha + str(round_no).encode()).digest()
        return metrics

    def result(self) -> SimResult:
        """Snapshot of everything a caller needs after the rounds have run."""
        return SimResult(
            config=self.config,
            metrics=self.metrics,
            chain=self.chain,
            registry=self.registry,
            devices=self.devices,
            global_model=self.global_model,
            final_accuracy=self.metrics[-1].accuracy if self.metrics else 0.0,
            vrf_pks=self.vrf_pks,
            stakes=dict(self.stake_book.stakes),
        )

    def run(self) -> SimResult:
        for round_no in range(self.config.rounds):
            self.run_round(round_no)
        return self.result()


def run(config: RunConfig, out_dir: Optional[str | Path] = None) -> SimResult:
    """Run a configuration end to end, optionally writing the output files."""
    result = Simulation(config).run()
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.write_metrics_csv(out / "metrics.csv")
        if result.chain is not None:
            result.write_chain(out / "chain.jsonl")
            result.write_state(out / "state.json")
    return result
