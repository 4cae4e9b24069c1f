"""Verifiable random function built from hashing and one-time signatures.

Every round each participant derives a fresh one-time keypair from its
long-term seed and the round number, then publishes a short commitment as
the round's VRF public key.  The proof is a keyed hash of the input; the
output beta is the hash of the proof; and the prover's one-time key signs
a digest binding the input to the proof.  Verification needs public data
only: recompute beta from the proof, recover the one-time public key from
the signature, and match its commitment.

Outputs map to the unit interval by reading the first 8 bytes of beta as
a big-endian integer over 2**64, so honest betas are uniform on [0, 1).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Tuple

from .errors import ParameterError
from .hashing import (
    TAG_VRF_BETA,
    TAG_VRF_BIND,
    TAG_VRF_PK,
    TAG_VRF_PROOF,
    TAG_VRF_SK,
    hash_data,
    pack_u32,
    prf,
)
from .wots import (
    DEFAULT_PARAMS,
    WotsKeypair,
    WotsParams,
    WotsSignature,
    wots_keygen,
    wots_pk_from_sig,
    wots_sign,
)

#: masks for the per-round one-time chains are derived from this fixed
#: public constant; the per-round secrets are what separate participants
#: (plain hashlib so importing the module does not touch the call counter)
VRF_PUBLIC_SEED = hashlib.sha256(b"vrf-public-seed-v1").digest()


@dataclass
class VrfKeypair:
    round_no: int
    wots_kp: WotsKeypair
    vrf_sk: bytes
    vrf_pk: bytes


@dataclass(frozen=True)
class VrfOutput:
    beta: bytes
    proof: bytes
    wots_sig: WotsSignature
    unit_value: float


def vrf_keygen(
    device_seed: bytes, round_no: int, params: WotsParams = DEFAULT_PARAMS
) -> VrfKeypair:
    """Fresh per-round keypair; deterministic in (seed, round)."""
    if not device_seed:
        raise ParameterError("device seed must be non-empty")
    if round_no < 0:
        raise ParameterError("round number must be non-negative")
    secret = prf(device_seed, TAG_VRF_SK, pack_u32(round_no))
    wots_kp = wots_keygen(secret, VRF_PUBLIC_SEED, params, leaf=0, tree=0)
    vrf_sk = hash_data(TAG_VRF_SK + secret)
    vrf_pk = hash_data(TAG_VRF_PK + b"".join(wots_kp.pk))
    return VrfKeypair(round_no=round_no, wots_kp=wots_kp, vrf_sk=vrf_sk, vrf_pk=vrf_pk)


def vrf_prove(keypair: VrfKeypair, alpha: bytes) -> VrfOutput:
    """Evaluate the VRF on ``alpha`` and sign the (alpha, proof) binding.

    The one-time key enforces a single proof per round keypair; a second
    call raises the one-time violation error.
    """
    if not alpha:
        raise ParameterError("alpha must be non-empty")
    proof = prf(keypair.vrf_sk, TAG_VRF_PROOF, alpha)
    beta = hash_data(TAG_VRF_BETA + proof)
    binding = hash_data(TAG_VRF_BIND + alpha + proof)
    wots_sig = wots_sign(binding, keypair.wots_kp)
    return VrfOutput(beta=beta, proof=proof, wots_sig=wots_sig, unit_value=prob(beta))


def vrf_verify(
    vrf_pk: bytes,
    alpha: bytes,
    out: VrfOutput,
    params: WotsParams = DEFAULT_PARAMS,
) -> bool:
    """Accept iff both the hash layer and the one-time signature layer hold."""
    if hash_data(TAG_VRF_BETA + out.proof) != out.beta:
        return False
    if prob(out.beta) != out.unit_value:
        return False
    binding = hash_data(TAG_VRF_BIND + alpha + out.proof)
    try:
        candidate: Tuple[bytes, ...] = wots_pk_from_sig(
            binding, out.wots_sig, VRF_PUBLIC_SEED, params, leaf=0, tree=0
        )
    except ParameterError:
        return False
    return hash_data(TAG_VRF_PK + b"".join(candidate)) == vrf_pk


def prob(beta: bytes) -> float:
    """Map a 32-byte output to [0, 1): first 8 bytes big-endian over 2**64."""
    if len(beta) != 32:
        raise ParameterError(f"beta must be 32 bytes, got {len(beta)}")
    return int.from_bytes(beta[:8], "big") / 2**64
