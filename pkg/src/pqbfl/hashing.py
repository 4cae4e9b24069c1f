"""Counted SHA-256 primitives with per-role domain separation.

A single 256-bit hash backs every layer of the stack: Winternitz chains,
Merkle nodes, message digests, certifier MACs and VRF derivations.  Each
use site passes a distinct domain tag so that values from one role can
never collide with another.  Every invocation bumps a global monotonic
counter, which is what the simulated cost model and the benchmark
subcommands read.
"""

from __future__ import annotations

import hashlib
import struct
import threading

DIGEST_BYTES = 32

# Domain tags.  One byte of tag class plus a short mnemonic; all uses below
# feed fixed-width fields after the tag, so parsing ambiguity cannot arise.
TAG_PRF = b"\x00prf/"
TAG_MASK = b"\x01mask/"
TAG_CHAIN = b"\x02chain/"
TAG_LEAF = b"\x03leaf/"
TAG_NODE = b"\x04node/"
TAG_ROOT = b"\x05root/"
TAG_MSG = b"\x06msg/"
TAG_CERT_KEY = b"\x07certkey/"
TAG_CERT_SIG = b"\x08certsig/"
TAG_CERT_PK = b"\x09certpk/"
TAG_VRF_SK = b"\x0avrfsk/"
TAG_VRF_PK = b"\x0bvrfpk/"
TAG_VRF_PROOF = b"\x0cvrfproof/"
TAG_VRF_BETA = b"\x0dvrfbeta/"
TAG_VRF_BIND = b"\x0evrfbind/"
TAG_TX = b"\x0ftx/"
TAG_ENDORSE = b"\x10endorse/"
TAG_BLOCK = b"\x11block/"
TAG_BLOCK_SIG = b"\x12blocksig/"
TAG_KEYSEED = b"\x13keyseed/"
TAG_SK_CHAIN = b"\x14skchain/"


class HashCounter:
    """Monotonic count of hash invocations, for cost accounting.

    The increment is taken under a lock so concurrent callers cannot lose
    updates; reads return a consistent snapshot.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def bump(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def count(self) -> int:
        with self._lock:
            return self._count

    def delta_since(self, mark: int) -> int:
        return self.count - mark


#: Process-wide counter read by benchmarks and the round cost model.
HASH_COUNTER = HashCounter()


def hash_data(data: bytes) -> bytes:
    """SHA-256 digest of ``data``, counted."""
    HASH_COUNTER.bump()
    return hashlib.sha256(data).digest()


def prf(key: bytes, *parts: bytes) -> bytes:
    """Keyed derivation: one counted hash over a tagged key/input concat."""
    return hash_data(TAG_PRF + key + b"".join(parts))


def pack_address(tree: int, leaf: int, chain: int = 0, step: int = 0) -> bytes:
    """Fixed-width encoding of a hash-chain position.

    The tuple (tree ordinal, leaf index, chain index, step) uniquely
    addresses every mask used anywhere in a signing key's lifetime.
    """
    return struct.pack(">IIII", tree, leaf, chain, step)


def pack_u32(value: int) -> bytes:
    return struct.pack(">I", value)


def expand(seed: bytes, size: int, tag: bytes) -> bytes:
    """Stretch ``seed`` to ``size`` bytes with counted hash blocks."""
    if size < 0:
        raise ValueError("size must be non-negative")
    blocks = []
    produced = 0
    counter = 0
    while produced < size:
        block = hash_data(tag + seed + pack_u32(counter))
        blocks.append(block)
        produced += len(block)
        counter += 1
    return b"".join(blocks)[:size]


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError("xor operands must have equal length")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")
