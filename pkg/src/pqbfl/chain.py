"""Append-only ledger for model updates with endorsement-gated blocks.

Workers wrap their trained updates in signed transactions; validators
check the signature and the update's accuracy on their private slice and
endorse with their own signature; miners assemble endorsed transactions
into candidate blocks.  One winner per round is picked by closeness of
the miners' VRF values to the round beacon value, and only the winner's
block ever propagates, so honest executions cannot fork.

The chain serializes to line-delimited JSON, one block per line with a
stable field order, and can be fully re-verified from the registry alone.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ChainError, ConsensusError, ParameterError, RegistryLookupError
from .fl import LabeledDataset, Model, evaluate
from .hashing import TAG_BLOCK, TAG_BLOCK_SIG, TAG_ENDORSE, TAG_TX, hash_data, pack_u32
from .hybrid import (
    HybridKeychain,
    HybridSignature,
    Registry,
    certifier_tx_bytes,
    hybrid_verify,
)
from .wots import DEFAULT_PARAMS, WotsSignature
from .xmss import XmssSignature

logger = logging.getLogger(__name__)

GENESIS_PREV_HASH = b"\x00" * 32
GENESIS_ROUND = -1


def _pack_round(round_no: int) -> bytes:
    return struct.pack(">i", round_no)


def _pack_str(s: str) -> bytes:
    raw = s.encode()
    return pack_u32(len(raw)) + raw


@dataclass
class ModelUpdate:
    """A worker's trained model plus the metadata that rides the payload."""

    weights: np.ndarray
    epochs: int
    n_samples: int
    val_accuracy: float  # worker's self-reported accuracy on its own shard

    def weights_digest(self) -> bytes:
        return hash_data(TAG_TX + b"update/" + np.ascontiguousarray(self.weights).tobytes())

    def payload(self) -> bytes:
        """Canonical signed payload: weight digest and training metadata."""
        return json.dumps(
            {
                "epochs": self.epochs,
                "n_samples": self.n_samples,
                "val_accuracy": self.val_accuracy,
                "weights_digest": self.weights_digest().hex(),
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode()


@dataclass(frozen=True)
class CertifierOnlySignature:
    """Baseline scheme: the full stateless signature ships with every tx.

    With no registry-resident tree root to lean on, the public key must
    travel alongside each signature; ``pk_size`` feeds byte accounting.
    """

    signer_id: str
    signature: bytes
    pk_size: int


@dataclass
class Endorsement:
    validator_id: str
    verdict: bool
    reason: str  # "ok", "low_accuracy" or "signature"
    accuracy: float
    signature: HybridSignature | CertifierOnlySignature


@dataclass
class Transaction:
    signer_id: str
    round_no: int
    payload: bytes
    update: Optional[ModelUpdate]  # carried off-ledger; not part of export
    signature: HybridSignature | CertifierOnlySignature
    endorsements: List[Endorsement] = field(default_factory=list)

    def digest(self) -> bytes:
        return hash_data(
            TAG_TX + _pack_round(self.round_no) + _pack_str(self.signer_id) + self.payload
        )

    def positive_endorsements(self) -> int:
        return sum(1 for e in self.endorsements if e.verdict)

    def wire_bytes(self) -> int:
        """Transmitted size: payload, signature material, endorsements."""
        total = len(self.payload) + _signature_wire_bytes(self.signature)
        for endorsement in self.endorsements:
            total += 1 + _signature_wire_bytes(endorsement.signature)
        return total


def _signature_wire_bytes(sig: HybridSignature | CertifierOnlySignature) -> int:
    if isinstance(sig, HybridSignature):
        return len(sig.wire_bytes())
    return len(sig.signature) + sig.pk_size


@dataclass
class Block:
    round_no: int
    miner_id: str
    prev_hash: bytes
    txs: List[Transaction]
    miner_sig: Optional[HybridSignature | CertifierOnlySignature]
    block_hash: bytes = b""

    def compute_hash(self) -> bytes:
        parts = [
            TAG_BLOCK,
            _pack_round(self.round_no),
            _pack_str(self.miner_id),
            self.prev_hash,
            pack_u32(len(self.txs)),
        ]
        parts.extend(tx.digest() for tx in self.txs)
        return hash_data(b"".join(parts))


def genesis_block() -> Block:
    block = Block(
        round_no=GENESIS_ROUND,
        miner_id="genesis",
        prev_hash=GENESIS_PREV_HASH,
        txs=[],
        miner_sig=None,
    )
    block.block_hash = block.compute_hash()
    return block


class Signer:
    """Anything that can sign payload bytes for the ledger.

    ``HybridKeychain`` satisfies this directly; the certifier-only
    baseline wraps a keychain but signs with the stateless scheme alone.
    """

    device_id: str

    def sign(self, payload: bytes) -> HybridSignature | CertifierOnlySignature:
        raise NotImplementedError


class CertifierOnlySigner(Signer):
    def __init__(self, keychain: HybridKeychain) -> None:
        self.keychain = keychain
        self.device_id = keychain.device_id

    def sign(self, payload: bytes) -> CertifierOnlySignature:
        return CertifierOnlySignature(
            signer_id=self.device_id,
            signature=self.keychain.certifier.sign(self.keychain.certifier_sk, payload),
            pk_size=self.keychain.certifier.pk_size,
        )


def verify_signature(
    sig: HybridSignature | CertifierOnlySignature, payload: bytes, registry: Registry
) -> bool:
    if isinstance(sig, HybridSignature):
        return hybrid_verify(sig, payload, registry)
    record = registry.record(sig.signer_id)
    return record.certifier.verify(record.certifier_pk, payload, sig.signature)


def create_tx(
    signer: HybridKeychain | Signer, update: ModelUpdate, round_no: int
) -> Transaction:
    """Sign an update's payload bound to the round and signer."""
    payload = update.payload()
    signing_bytes = tx_signing_bytes(round_no, signer.device_id, payload)
    signature = signer.sign(signing_bytes)
    return Transaction(
        signer_id=signer.device_id,
        round_no=round_no,
        payload=payload,
        update=update,
        signature=signature,
    )


def tx_signing_bytes(round_no: int, signer_id: str, payload: bytes) -> bytes:
    return _pack_round(round_no) + _pack_str(signer_id) + payload


def endorsement_signing_bytes(tx_digest: bytes, verdict: bool) -> bytes:
    return TAG_ENDORSE + tx_digest + (b"\x01" if verdict else b"\x00")


def validate_tx(
    validator: HybridKeychain | Signer,
    tx: Transaction,
    testset: LabeledDataset,
    threshold: float,
    registry: Registry,
) -> Endorsement:
    """Check the transaction and score its model on the validator's slice.

    The verdict is positive only when the signature verifies, the carried
    weights match the payload digest, and held-out accuracy clears the
    threshold.  The endorsement signs the tx digest together with the
    verdict so neither can be swapped later.
    """
    accuracy = 0.0
    try:
        sig_ok = verify_signature(tx.signature, tx_signing_bytes(tx.round_no, tx.signer_id, tx.payload), registry)
    except RegistryLookupError:
        sig_ok = False
    if sig_ok and tx.update is not None:
        meta = json.loads(tx.payload)
        if tx.update.weights_digest().hex() != meta["weights_digest"]:
            sig_ok = False
    if not sig_ok or tx.update is None:
        verdict, reason = False, "signature"
    else:
        model = Model(
            tx.update.weights,
            n_classes=testset.n_classes,
            dim=testset.dim,
        )
        accuracy = evaluate(model, testset)
        verdict = accuracy >= threshold
        reason = "ok" if verdict else "low_accuracy"
    signature = validator.sign(endorsement_signing_bytes(tx.digest(), verdict))
    return Endorsement(
        validator_id=validator.device_id,
        verdict=verdict,
        reason=reason,
        accuracy=accuracy,
        signature=signature,
    )


def mine_block(
    miner: HybridKeychain | Signer,
    txs: Sequence[Transaction],
    tip: Block,
    registry: Registry,
    quorum: int = 1,
) -> Block:
    """Assemble endorsed transactions into a signed candidate block.

    Every transaction signature and endorsement signature is re-verified;
    anything failing, or short of ``quorum`` positive endorsements, is
    dropped with a log line rather than propagated.
    """
    accepted = []
    for tx in txs:
        try:
            ok = verify_signature(
                tx.signature, tx_signing_bytes(tx.round_no, tx.signer_id, tx.payload), registry
            )
            for endorsement in tx.endorsements:
                ok = ok and verify_signature(
                    endorsement.signature,
                    endorsement_signing_bytes(tx.digest(), endorsement.verdict),
                    registry,
                )
        except RegistryLookupError:
            ok = False
        if not ok:
            logger.warning("miner %s dropping tx from %s: bad signature", miner.device_id, tx.signer_id)
            continue
        if tx.positive_endorsements() < quorum:
            logger.info(
                "miner %s dropping tx from %s: %d/%d endorsements",
                miner.device_id, tx.signer_id, tx.positive_endorsements(), quorum,
            )
            continue
        accepted.append(tx)
    block = Block(
        round_no=accepted[0].round_no if accepted else tip.round_no + 1,
        miner_id=miner.device_id,
        prev_hash=tip.block_hash,
        txs=accepted,
        miner_sig=None,
    )
    block.block_hash = block.compute_hash()
    block.miner_sig = miner.sign(TAG_BLOCK_SIG + block.block_hash)
    return block


def select_winner(miner_values: Dict[int, float], beacon_value: float) -> int:
    """Miner whose VRF value sits closest to the beacon value.

    Ties break toward the lowest miner id, so selection is a pure function
    of the round's VRF values.
    """
    if not miner_values:
        raise ConsensusError("no miners to select from")
    return min(miner_values, key=lambda m: (abs(miner_values[m] - beacon_value), m))


class Chain:
    """A device's view of the ledger; starts at the shared genesis block."""

    def __init__(self) -> None:
        self.blocks: List[Block] = [genesis_block()]

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    def append(self, block: Block, winner_id: str, registry: Optional[Registry] = None) -> None:
        if block.miner_id != winner_id:
            raise ChainError(
                f"rejecting block from {block.miner_id}: round winner is {winner_id}"
            )
        if block.prev_hash != self.tip.block_hash:
            raise ChainError("rejecting block: previous-hash linkage broken")
        if block.block_hash != block.compute_hash():
            raise ChainError("rejecting block: stated hash does not match contents")
        if registry is not None:
            if block.miner_sig is None or not verify_signature(
                block.miner_sig, TAG_BLOCK_SIG + block.block_hash, registry
            ):
                raise ChainError("rejecting block: miner signature invalid")
        self.blocks.append(block)


@dataclass
class RewardConstants:
    per_epoch_sample: float = 0.001  # worker: epochs * samples trained
    per_validation: float = 0.01  # validator: transactions checked
    per_block: float = 0.1  # winning miner


class StakeBook:
    """Non-negative, monotonically growing stake per device."""

    def __init__(self, device_ids: Sequence[str]) -> None:
        self.stakes: Dict[str, float] = {d: 0.0 for d in device_ids}

    def add(self, device_id: str, amount: float) -> None:
        if amount < 0:
            raise ParameterError(f"stake increments must be non-negative, got {amount}")
        if device_id not in self.stakes:
            raise ParameterError(f"unknown device {device_id!r}")
        self.stakes[device_id] += amount

    def normalized(self) -> Dict[str, float]:
        top = max(self.stakes.values(), default=0.0)
        if top <= 0:
            return {d: 0.0 for d in self.stakes}
        return {d: s / top for d, s in self.stakes.items()}


def apply_rewards(
    book: StakeBook,
    block: Block,
    validations: Dict[str, int],
    constants: RewardConstants = RewardConstants(),
) -> None:
    """Credit workers per epoch-sample, validators per check, the miner per block."""
    for tx in block.txs:
        if tx.update is not None:
            book.add(
                tx.signer_id,
                constants.per_epoch_sample * tx.update.epochs * tx.update.n_samples,
            )
    for validator_id, count in validations.items():
        book.add(validator_id, constants.per_validation * count)
    book.add(block.miner_id, constants.per_block)


# --- serialization ---------------------------------------------------------


def _sig_to_dict(sig: HybridSignature | CertifierOnlySignature) -> dict:
    if isinstance(sig, CertifierOnlySignature):
        return {
            "scheme": "certifier",
            "signer": sig.signer_id,
            "sig": sig.signature.hex(),
            "pk_size": sig.pk_size,
        }
    return {
        "scheme": "hybrid",
        "signer": sig.signer_id,
        "tree_no": sig.tree_no,
        "key_index": sig.xmss_sig.key_index,
        "sig_chains": [c.hex() for c in sig.xmss_sig.wots_sig.sig_chains],
        "msg_digest": sig.xmss_sig.wots_sig.msg_digest.hex(),
        "wots_pk": [c.hex() for c in sig.xmss_sig.wots_pk],
        "auth_path": [c.hex() for c in sig.xmss_sig.auth_path],
        "xmss_root": sig.xmss_root.hex(),
    }


def _sig_from_dict(data: dict) -> HybridSignature | CertifierOnlySignature:
    if data["scheme"] == "certifier":
        return CertifierOnlySignature(
            signer_id=data["signer"],
            signature=bytes.fromhex(data["sig"]),
            pk_size=data["pk_size"],
        )
    wots_sig = WotsSignature(
        sig_chains=tuple(bytes.fromhex(c) for c in data["sig_chains"]),
        msg_digest=bytes.fromhex(data["msg_digest"]),
    )
    xmss_sig = XmssSignature(
        key_index=data["key_index"],
        wots_sig=wots_sig,
        wots_pk=tuple(bytes.fromhex(c) for c in data["wots_pk"]),
        auth_path=tuple(bytes.fromhex(c) for c in data["auth_path"]),
    )
    return HybridSignature(
        signer_id=data["signer"],
        tree_no=data["tree_no"],
        xmss_sig=xmss_sig,
        xmss_root=bytes.fromhex(data["xmss_root"]),
    )


def block_to_dict(block: Block) -> dict:
    return {
        "round": block.round_no,
        "miner_id": block.miner_id,
        "prev_hash": block.prev_hash.hex(),
        "block_hash": block.block_hash.hex(),
        "miner_sig": None if block.miner_sig is None else _sig_to_dict(block.miner_sig),
        "txs": [
            {
                "signer_id": tx.signer_id,
                "round": tx.round_no,
                "payload": tx.payload.hex(),
                "signature": _sig_to_dict(tx.signature),
                "endorsements": [
                    {
                        "validator_id": e.validator_id,
                        "verdict": e.verdict,
                        "reason": e.reason,
                        "accuracy": e.accuracy,
                        "signature": _sig_to_dict(e.signature),
                    }
                    for e in tx.endorsements
                ],
            }
            for tx in block.txs
        ],
    }


def block_from_dict(data: dict) -> Block:
    txs = []
    for tx_data in data["txs"]:
        tx = Transaction(
            signer_id=tx_data["signer_id"],
            round_no=tx_data["round"],
            payload=bytes.fromhex(tx_data["payload"]),
            update=None,
            signature=_sig_from_dict(tx_data["signature"]),
            endorsements=[
                Endorsement(
                    validator_id=e["validator_id"],
                    verdict=e["verdict"],
                    reason=e["reason"],
                    accuracy=e["accuracy"],
                    signature=_sig_from_dict(e["signature"]),
                )
                for e in tx_data["endorsements"]
            ],
        )
        txs.append(tx)
    return Block(
        round_no=data["round"],
        miner_id=data["miner_id"],
        prev_hash=bytes.fromhex(data["prev_hash"]),
        txs=txs,
        miner_sig=None if data["miner_sig"] is None else _sig_from_dict(data["miner_sig"]),
        block_hash=bytes.fromhex(data["block_hash"]),
    )


def chain_to_lines(chain: Chain) -> List[str]:
    """One block per line, stable field order."""
    return [json.dumps(block_to_dict(b), sort_keys=True) for b in chain.blocks]


def chain_from_lines(lines: Sequence[str]) -> List[Block]:
    blocks = []
    for lineno, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            blocks.append(block_from_dict(json.loads(line)))
        except (KeyError, ValueError) as exc:
            raise ChainError(f"malformed block record on line {lineno + 1}: {exc}") from exc
    return blocks


@dataclass
class ReplayFailure:
    block_index: int
    tx_index: Optional[int]
    what: str


def replay_verify(
    blocks: Sequence[Block], registry: Registry, quorum: int = 1
) -> List[ReplayFailure]:
    """Re-verify an exported chain from genesis using only public material.

    Checks linkage, block hashes, miner signatures, every transaction
    signature and every endorsement signature, plus the endorsement
    quorum.  Returns all failures with their coordinates.
    """
    failures: List[ReplayFailure] = []
    if not blocks:
        return [ReplayFailure(0, None, "empty chain")]
    first = blocks[0]
    if first.prev_hash != GENESIS_PREV_HASH or first.round_no != GENESIS_ROUND:
        failures.append(ReplayFailure(0, None, "first block is not genesis"))
    for i, block in enumerate(blocks):
        if block.block_hash != block.compute_hash():
            failures.append(ReplayFailure(i, None, "block hash mismatch"))
        if i > 0 and block.prev_hash != blocks[i - 1].block_hash:
            failures.append(ReplayFailure(i, None, "previous-hash linkage broken"))
        if i == 0:
            continue
        if block.miner_sig is None:
            failures.append(ReplayFailure(i, None, "missing miner signature"))
        else:
            try:
                ok = verify_signature(
                    block.miner_sig, TAG_BLOCK_SIG + block.block_hash, registry
                )
            except RegistryLookupError:
                ok = False
            if not ok:
                failures.append(ReplayFailure(i, None, "miner signature invalid"))
        for t, tx in enumerate(block.txs):
            if tx.round_no != block.round_no:
                failures.append(ReplayFailure(i, t, "transaction round mismatch"))
            try:
                ok = verify_signature(
                    tx.signature,
                    tx_signing_bytes(tx.round_no, tx.signer_id, tx.payload),
                    registry,
                )
            except RegistryLookupError:
                ok = False
            if not ok:
                failures.append(ReplayFailure(i, t, "transaction signature invalid"))
            positives = 0
            for endorsement in tx.endorsements:
                try:
                    e_ok = verify_signature(
                        endorsement.signature,
                        endorsement_signing_bytes(tx.digest(), endorsement.verdict),
                        registry,
                    )
                except RegistryLookupError:
                    e_ok = False
                if not e_ok:
                    failures.append(ReplayFailure(i, t, "endorsement signature invalid"))
                elif endorsement.verdict:
                    positives += 1
            if positives < quorum:
                failures.append(ReplayFailure(i, t, "endorsement quorum not met"))
    return failures
