"""Winternitz one-time signatures over bitmask-XOR hash chains.

The chaining function follows the randomized-hashing construction: at every
step the current value is XORed with a mask derived from a public seed and
the (tree, leaf, chain, step) address before being hashed.  Message digests
are cut into base-w digits; a base-w checksum of the inverted digits is
appended so that advancing any message digit forces some checksum chain
backwards, which a forger cannot compute.

For n = 32 and w = 16 the scheme uses len1 = 64 message chains plus
len2 = 3 checksum chains, 67 chains total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

from .errors import OneTimeViolationError, ParameterError
from .hashing import (
    TAG_CHAIN,
    TAG_KEYSEED,
    TAG_MASK,
    TAG_SK_CHAIN,
    hash_data,
    pack_address,
    pack_u32,
    prf,
    xor_bytes,
)


@dataclass(frozen=True)
class WotsParams:
    """Security parameter n (digest bytes) and Winternitz parameter w."""

    n: int = 32
    w: int = 16

    def __post_init__(self) -> None:
        if self.n != 32:
            raise ParameterError(f"unsupported digest size n={self.n}; only 32 is wired up")
        if self.w not in (4, 16):
            raise ParameterError(f"unsupported Winternitz parameter w={self.w}; use 4 or 16")

    @property
    def log_w(self) -> int:
        return self.w.bit_length() - 1

    @property
    def len1(self) -> int:
        # digits needed to encode an 8n-bit digest in base w
        return math.ceil(8 * self.n / self.log_w)

    @property
    def len2(self) -> int:
        # digits needed for the checksum, max value len1 * (w - 1)
        return math.floor(math.log2(self.len1 * (self.w - 1)) / self.log_w) + 1

    @property
    def length(self) -> int:
        return self.len1 + self.len2


DEFAULT_PARAMS = WotsParams()


@dataclass
class WotsKeypair:
    """One-time keypair pinned to a chain address.

    ``used`` flips on the first signature and is never reset; a second
    signing attempt is a hard failure.
    """

    params: WotsParams
    public_seed: bytes
    tree: int
    leaf: int
    sk_chains: Tuple[bytes, ...]
    pk: Tuple[bytes, ...]
    used: bool = field(default=False)


@dataclass(frozen=True)
class WotsSignature:
    sig_chains: Tuple[bytes, ...]
    msg_digest: bytes


def chain(
    value: bytes,
    start: int,
    steps: int,
    public_seed: bytes,
    params: WotsParams = DEFAULT_PARAMS,
    tree: int = 0,
    leaf: int = 0,
    chain_index: int = 0,
) -> bytes:
    """Apply ``steps`` mask-then-hash iterations starting at position ``start``.

    chain(x, 0, a+b) == chain(chain(x, 0, a), a, b) for a + b <= w - 1.
    """
    if len(value) != params.n:
        raise ParameterError(f"chain input must be {params.n} bytes, got {len(value)}")
    if start < 0 or steps < 0 or start + steps > params.w - 1:
        raise ParameterError(
            f"chain positions out of range: start={start} steps={steps} w={params.w}"
        )
    out = value
    for step in range(start, start + steps):
        mask = prf(public_seed, TAG_MASK, pack_address(tree, leaf, chain_index, step))
        out = hash_data(TAG_CHAIN + xor_bytes(out, mask))
    return out


def message_digits(digest: bytes, params: WotsParams = DEFAULT_PARAMS) -> Tuple[int, ...]:
    """Cut a digest into len1 base-w digits plus len2 checksum digits."""
    if len(digest) != params.n:
        raise ParameterError(f"digest must be {params.n} bytes, got {len(digest)}")
    log_w = params.log_w
    digits = []
    acc = int.from_bytes(digest, "big")
    for shift in range(params.len1 - 1, -1, -1):
        digits.append((acc >> (shift * log_w)) & (params.w - 1))
    checksum = sum(params.w - 1 - d for d in digits)
    for shift in range(params.len2 - 1, -1, -1):
        digits.append((checksum >> (shift * log_w)) & (params.w - 1))
    return tuple(digits)


def wots_keygen(
    secret_seed: bytes,
    public_seed: bytes,
    params: WotsParams = DEFAULT_PARAMS,
    leaf: int = 0,
    tree: int = 0,
) -> WotsKeypair:
    """Derive a one-time keypair for the given (tree, leaf) address.

    Fully deterministic in (seeds, address): re-deriving with the same
    inputs yields the same chains.
    """
    if not secret_seed or not public_seed:
        raise ParameterError("seeds must be non-empty")
    leaf_seed = prf(secret_seed, TAG_KEYSEED, pack_address(tree, leaf))
    sk_chains = tuple(
        prf(leaf_seed, TAG_SK_CHAIN, pack_u32(i)) for i in range(params.length)
    )
    pk = tuple(
        chain(sk_chains[i], 0, params.w - 1, public_seed, params, tree, leaf, i)
        for i in range(params.length)
    )
    return WotsKeypair(
        params=params,
        public_seed=public_seed,
        tree=tree,
        leaf=leaf,
        sk_chains=sk_chains,
        pk=pk,
    )


def wots_sign(digest: bytes, keypair: WotsKeypair) -> WotsSignature:
    """Advance each secret chain by its message digit.

    Marks the key used before any signature material is returned.
    """
    if keypair.used:
        raise OneTimeViolationError(
            f"one-time key at tree={keypair.tree} leaf={keypair.leaf} already used"
        )
    digits = message_digits(digest, keypair.params)
    keypair.used = True
    sig_chains = tuple(
        chain(
            keypair.sk_chains[i],
            0,
            digits[i],
            keypair.public_seed,
            keypair.params,
            keypair.tree,
            keypair.leaf,
            i,
        )
        for i in range(keypair.params.length)
    )
    return WotsSignature(sig_chains=sig_chains, msg_digest=digest)


def wots_pk_from_sig(
    digest: bytes,
    sig: WotsSignature,
    public_seed: bytes,
    params: WotsParams = DEFAULT_PARAMS,
    leaf: int = 0,
    tree: int = 0,
) -> Tuple[bytes, ...]:
    """Complete each signature chain to the top, recovering a candidate pk.

    The caller compares the result against the known public key; equality
    holds iff the signature matches the digest.
    """
    digits = message_digits(digest, params)
    if len(sig.sig_chains) != params.length:
        raise ParameterError(
            f"signature has {len(sig.sig_chains)} chains, expected {params.length}"
        )
    return tuple(
        chain(
            sig.sig_chains[i],
            digits[i],
            params.w - 1 - digits[i],
            public_seed,
            params,
            tree,
            leaf,
            i,
        )
        for i in range(params.length)
    )
