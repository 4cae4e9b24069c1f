"""Two-layer signing: stateful Merkle trees certified by a stateless scheme.

Each device signs transactions with XMSS, whose roots are themselves signed
once by a stateless certifier (a lattice-scheme stand-in here).  When a
tree runs out of one-time leaves the keychain transparently builds the
next tree, certifies the new root, publishes (tree ordinal, root,
certifier signature) to the shared registry and retries the signature
exactly once.  Verifiers accept only when both layers check out: the
certifier signature over the claimed root, and the root recomputed from
the one-time signature.

This keeps per-transaction signature material far below what shipping a
full lattice signature plus public key per transaction would cost, while
the certifier anchors long-term identity without any state to lose.
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .errors import (
    ExhaustionError,
    KeygenError,
    ParameterError,
    RegistryLookupError,
    RolloverError,
)
from .hashing import (
    TAG_CERT_KEY,
    TAG_CERT_PK,
    TAG_CERT_SIG,
    TAG_MSG,
    expand,
    hash_data,
)
from .wots import DEFAULT_PARAMS, WotsParams
from .xmss import XmssSignature, XmssTree, build_tree, xmss_sign, xmss_verify

logger = logging.getLogger(__name__)

MIN_HEIGHT = 2
MAX_KEYCHAIN_HEIGHT = 10


class StatelessCertifier:
    """Interface for the long-term certifying scheme.

    Implementations must be stateless: signing twice with the same key is
    always safe.  ``pk_size`` and ``sig_size`` are the wire sizes used for
    byte accounting.
    """

    name: str = "abstract"
    pk_size: int = 0
    sig_size: int = 0

    def keygen(self, seed: Optional[bytes] = None) -> Tuple[bytes, bytes]:
        raise NotImplementedError

    def sign(self, sk: bytes, message: bytes) -> bytes:
        raise NotImplementedError

    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool:
        raise NotImplementedError


class MockCertifier(StatelessCertifier):
    """Keyed-hash stand-in sized like a real lattice scheme.

    The public key embeds the MAC key, so verification can recompute the
    expected signature from public material alone.  That makes it a
    deterministic test double with realistic wire sizes, not an
    unforgeable scheme; adequate for a simulator, nothing more.
    """

    def __init__(self, name: str, pk_size: int, sig_size: int) -> None:
        if pk_size < 32 or sig_size < 32:
            raise ParameterError("certifier sizes must be at least 32 bytes")
        self.name = name
        self.pk_size = pk_size
        self.sig_size = sig_size

    def keygen(self, seed: Optional[bytes] = None) -> Tuple[bytes, bytes]:
        sk = seed if seed is not None else os.urandom(32)
        if not sk:
            raise KeygenError("empty certifier seed")
        mac_key = hash_data(TAG_CERT_KEY + sk)
        pk = mac_key + expand(mac_key, self.pk_size - 32, TAG_CERT_PK)
        return pk, sk

    def sign(self, sk: bytes, message: bytes) -> bytes:
        mac_key = hash_data(TAG_CERT_KEY + sk)
        core = hash_data(TAG_CERT_SIG + mac_key + message)
        return expand(core, self.sig_size, TAG_CERT_SIG)

    def verify(self, pk: bytes, message: bytes, signature: bytes) -> bool:
        if len(pk) != self.pk_size or len(signature) != self.sig_size:
            return False
        core = hash_data(TAG_CERT_SIG + pk[:32] + message)
        return expand(core, self.sig_size, TAG_CERT_SIG) == signature


#: published wire sizes (pk bytes, signature bytes) of common stateless schemes
CERTIFIER_PRESETS: Dict[str, Tuple[int, int]] = {
    "dilithium2": (1312, 2420),
    "dilithium5": (2592, 4595),
    "falcon512": (897, 666),
    "falcon1024": (1793, 1280),
}


def make_certifier(preset: str) -> MockCertifier:
    if preset not in CERTIFIER_PRESETS:
        raise ParameterError(
            f"unknown certifier preset {preset!r}; choose from {sorted(CERTIFIER_PRESETS)}"
        )
    pk_size, sig_size = CERTIFIER_PRESETS[preset]
    return MockCertifier(preset, pk_size, sig_size)


@dataclass(frozen=True)
class CertifiedTree:
    tree_no: int
    root: bytes
    certifier_sig: bytes


@dataclass
class RegistryRecord:
    signer_id: str
    certifier: StatelessCertifier
    certifier_pk: bytes
    public_seed: bytes
    params: WotsParams = DEFAULT_PARAMS
    trees: Dict[int, CertifiedTree] = field(default_factory=dict)


class Registry:
    """Shared lookup of certified tree roots, keyed by signer and ordinal."""

    def __init__(self) -> None:
        self.records: Dict[str, RegistryRecord] = {}

    def register(self, record: RegistryRecord) -> None:
        self.records[record.signer_id] = record

    def publish(self, signer_id: str, certified: CertifiedTree) -> None:
        record = self.record(signer_id)
        record.trees[certified.tree_no] = certified

    def record(self, signer_id: str) -> RegistryRecord:
        if signer_id not in self.records:
            raise RegistryLookupError(f"unknown signer {signer_id!r}")
        return self.records[signer_id]

    def certified(self, signer_id: str, tree_no: int) -> CertifiedTree:
        record = self.record(signer_id)
        if tree_no not in record.trees:
            raise RegistryLookupError(
                f"signer {signer_id!r} has no certified tree {tree_no}"
            )
        return record.trees[tree_no]


@dataclass(frozen=True)
class HybridSignature:
    signer_id: str
    tree_no: int
    xmss_sig: XmssSignature
    xmss_root: bytes

    def wire_bytes(self) -> bytes:
        """Packed transmission form: ordinal, leaf index, chains, pk, path.

        The root itself never travels; verifiers fetch the certified root
        from the registry by (signer, ordinal).
        """
        sig = self.xmss_sig
        return (
            struct.pack(">II", self.tree_no, sig.key_index)
            + b"".join(sig.wots_sig.sig_chains)
            + b"".join(sig.wots_pk)
            + b"".join(sig.auth_path)
        )


class HybridKeychain:
    """Per-device signing state: active tree, next ordinal, certifier keys."""

    def __init__(
        self,
        device_id: str,
        height: int,
        secret_seed: bytes,
        public_seed: bytes,
        certifier: StatelessCertifier,
        registry: Optional[Registry] = None,
        cert_seed: Optional[bytes] = None,
        params: WotsParams = DEFAULT_PARAMS,
        state_sink: Optional[Callable[["HybridKeychain"], None]] = None,
    ) -> None:
        if not MIN_HEIGHT <= height <= MAX_KEYCHAIN_HEIGHT:
            raise ParameterError(
                f"height must be in {MIN_HEIGHT}..{MAX_KEYCHAIN_HEIGHT}, got {height}"
            )
        self.device_id = device_id
        self.height = height
        self.params = params
        self.secret_seed = secret_seed
        self.public_seed = public_seed
        self.certifier = certifier
        self.registry = registry
        self.state_sink = state_sink
        try:
            self.certifier_pk, self.certifier_sk = certifier.keygen(cert_seed)
        except Exception as exc:  # noqa: BLE001 - adapter boundary
            raise KeygenError(f"certifier keygen failed: {exc}") from exc
        self.trees: List[XmssTree] = []
        self.d_signatures: List[bytes] = []
        if registry is not None:
            registry.register(
                RegistryRecord(
                    signer_id=device_id,
                    certifier=certifier,
                    certifier_pk=self.certifier_pk,
                    public_seed=public_seed,
                    params=params,
                )
            )
        self._grow_tree()

    @property
    def tree_no(self) -> int:
        return len(self.trees) - 1

    @property
    def active_tree(self) -> XmssTree:
        return self.trees[-1]

    def _persist(self, _tree: XmssTree) -> None:
        if self.state_sink is not None:
            self.state_sink(self)

    def _grow_tree(self) -> None:
        tree_no = len(self.trees)
        tree = build_tree(
            self.height, self.secret_seed, self.public_seed, tree_no, self.params
        )
        tree.on_state_change = self._persist
        d_sig = self.certifier.sign(self.certifier_sk, tree.root)
        self.trees.append(tree)
        self.d_signatures.append(d_sig)
        certified = CertifiedTree(tree_no=tree_no, root=tree.root, certifier_sig=d_sig)
        if self.registry is not None:
            self.registry.publish(self.device_id, certified)
        self._persist(tree)

    def sign(self, payload: bytes) -> HybridSignature:
        """Sign a payload digest, rolling to a fresh tree when exhausted."""
        digest = hash_data(TAG_MSG + payload)
        try:
            xsig = xmss_sign(self.active_tree, digest)
        except ExhaustionError:
            logger.debug(
                "device %s rolling tree %d -> %d",
                self.device_id,
                self.tree_no,
                self.tree_no + 1,
            )
            self._grow_tree()
            try:
                xsig = xmss_sign(self.active_tree, digest)
            except ExhaustionError as exc:
                raise RolloverError(
                    f"fresh tree for {self.device_id} exhausted immediately"
                ) from exc
        return HybridSignature(
            signer_id=self.device_id,
            tree_no=self.tree_no,
            xmss_sig=xsig,
            xmss_root=self.active_tree.root,
        )

    def state_dict(self) -> dict:
        """Resumable private state plus the published tree records."""
        return {
            "device_id": self.device_id,
            "height": self.height,
            "w": self.params.w,
            "secret_seed": self.secret_seed.hex(),
            "public_seed": self.public_seed.hex(),
            "certifier": {
                "preset": self.certifier.name,
                "pk_size": self.certifier.pk_size,
                "sig_size": self.certifier.sig_size,
                "pk": self.certifier_pk.hex(),
            },
            "tree_no": self.tree_no,
            "next_index": self.active_tree.next_index,
            "certified_trees": [
                {
                    "tree_no": i,
                    "root": tree.root.hex(),
                    "certifier_sig": self.d_signatures[i].hex(),
                }
                for i, tree in enumerate(self.trees)
            ],
        }


def hybrid_keygen(
    device_id: str,
    height: int,
    secret_seed: bytes,
    public_seed: bytes,
    certifier: StatelessCertifier,
    registry: Optional[Registry] = None,
    cert_seed: Optional[bytes] = None,
    params: WotsParams = DEFAULT_PARAMS,
) -> HybridKeychain:
    return HybridKeychain(
        device_id=device_id,
        height=height,
        secret_seed=secret_seed,
        public_seed=public_seed,
        certifier=certifier,
        registry=registry,
        cert_seed=cert_seed,
        params=params,
    )


def hybrid_verify(sig: HybridSignature, payload: bytes, registry: Registry) -> bool:
    """Check both layers against registry material.

    Raises RegistryLookupError when the signer or ordinal is unknown; that
    is a lookup miss, not a failed verification.
    """
    record = registry.record(sig.signer_id)
    certified = registry.certified(sig.signer_id, sig.tree_no)
    cert_ok = record.certifier.verify(
        record.certifier_pk, sig.xmss_root, certified.certifier_sig
    )
    if not cert_ok:
        return False
    digest = hash_data(TAG_MSG + payload)
    return xmss_verify(
        digest,
        sig.xmss_sig,
        sig.xmss_root,
        record.public_seed,
        tree_no=sig.tree_no,
        params=record.params,
    )


def hybrid_signature_bytes(params: WotsParams, height: int) -> int:
    """Wire size of one hybrid signature: 2 u32 headers, chains, pk, path."""
    return 8 + 2 * params.length * params.n + height * params.n


def hybrid_tx_bytes(payload_len: int, params: WotsParams, height: int) -> int:
    """Transaction bytes under hybrid signing: payload plus signature wire."""
    return payload_len + hybrid_signature_bytes(params, height)


def certifier_tx_bytes(payload_len: int, certifier: StatelessCertifier) -> int:
    """Transaction bytes when every tx ships a full stateless signature + pk."""
    return payload_len + certifier.sig_size + certifier.pk_size


def certifier_crypto_bytes(certifier: StatelessCertifier) -> int:
    return certifier.sig_size + certifier.pk_size
