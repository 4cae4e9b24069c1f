from __future__ import annotations

import pytest

from pqbfl.errors import (
    KeygenError,
    ParameterError,
    RegistryLookupError,
    RolloverError,
)
from pqbfl.hybrid import (
    CERTIFIER_PRESETS,
    HybridKeychain,
    HybridSignature,
    MockCertifier,
    Registry,
    certifier_crypto_bytes,
    certifier_tx_bytes,
    hybrid_keygen,
    hybrid_signature_bytes,
    hybrid_tx_bytes,
    hybrid_verify,
    make_certifier,
)
from pqbfl.wots import DEFAULT_PARAMS


def _keychain(height: int = 2, registry: Registry | None = None) -> HybridKeychain:
    return hybrid_keygen(
        "device_0",
        height,
        b"secret-seed",
        b"public-seed",
        make_certifier("falcon512"),
        registry if registry is not None else Registry(),
        cert_seed=b"cert-seed",
    )


def test_mock_certifier_roundtrip_and_sizes():
    certifier = MockCertifier("toy", 64, 96)
    pk, sk = certifier.keygen(b"seed")
    assert (len(pk), certifier.pk_size, certifier.sig_size) == (64, 64, 96)
    sig = certifier.sign(sk, b"message")
    assert len(sig) == 96
    assert certifier.verify(pk, b"message", sig)
    assert not certifier.verify(pk, b"other", sig)
    assert not certifier.verify(pk, b"message", sig[:-1] + b"\x00")
    assert not certifier.verify(pk[:-1], b"message", sig)


def test_mock_certifier_rejects_tiny_sizes():
    with pytest.raises(ParameterError):
        MockCertifier("toy", 16, 96)
    with pytest.raises(ParameterError):
        MockCertifier("toy", 64, 16)


def test_certifier_presets():
    assert CERTIFIER_PRESETS["dilithium2"] == (1312, 2420)
    assert CERTIFIER_PRESETS["dilithium5"] == (2592, 4595)
    assert CERTIFIER_PRESETS["falcon512"] == (897, 666)
    assert CERTIFIER_PRESETS["falcon1024"] == (1793, 1280)
    with pytest.raises(ParameterError):
        make_certifier("rainbow")


def test_keychain_height_bounds():
    with pytest.raises(ParameterError):
        _keychain(height=1)
    with pytest.raises(ParameterError):
        _keychain(height=11)


def test_keychain_keygen_failure_is_wrapped():
    with pytest.raises(KeygenError):
        hybrid_keygen(
            "d", 2, b"s", b"p", make_certifier("falcon512"), Registry(), cert_seed=b""
        )


def test_rollover_boundaries_and_continuity():
    """A height-2 tree holds 4 signatures; the ninth lands in a third tree."""
    registry = Registry()
    keychain = _keychain(height=2, registry=registry)
    payloads = [f"payload-{i}".encode() for i in range(9)]
    sigs = [keychain.sign(p) for p in payloads]

    assert [s.tree_no for s in sigs] == [0, 0, 0, 0, 1, 1, 1, 1, 2]
    assert keychain.tree_no == 2
    assert len(keychain.trees) == 3
    assert len(registry.record("device_0").trees) == 3
    # every signature across the rollover boundaries remains verifiable
    assert all(hybrid_verify(s, p, registry) for s, p in zip(sigs, payloads))


def test_no_key_reuse_across_keychain_lifetime():
    keychain = _keychain(height=2)
    used = [
        (s.tree_no, s.xmss_sig.key_index)
        for s in (keychain.sign(bytes([i])) for i in range(9))
    ]
    assert len(set(used)) == 9


def test_forced_double_exhaustion_is_a_hard_error():
    keychain = _keychain(height=2)
    keychain.active_tree.next_index = keychain.active_tree.capacity
    grow = keychain._grow_tree

    def grow_exhausted():
        grow()
        keychain.active_tree.next_index = keychain.active_tree.capacity

    keychain._grow_tree = grow_exhausted
    with pytest.raises(RolloverError):
        keychain.sign(b"doomed")


def test_verify_needs_both_layers():
    registry = Registry()
    keychain = _keychain(height=2, registry=registry)
    payload = b"two-layer"
    sig = keychain.sign(payload)
    assert hybrid_verify(sig, payload, registry)

    # break the one-time layer only
    chains = list(sig.xmss_sig.wots_sig.sig_chains)
    chains[0] = chains[0][:-1] + bytes([chains[0][-1] ^ 1])
    bad_xmss = HybridSignature(
        signer_id=sig.signer_id,
        tree_no=sig.tree_no,
        xmss_sig=type(sig.xmss_sig)(
            key_index=sig.xmss_sig.key_index,
            wots_sig=type(sig.xmss_sig.wots_sig)(tuple(chains), sig.xmss_sig.wots_sig.msg_digest),
            wots_pk=sig.xmss_sig.wots_pk,
            auth_path=sig.xmss_sig.auth_path,
        ),
        xmss_root=sig.xmss_root,
    )
    assert not hybrid_verify(bad_xmss, payload, registry)

    # break the certifier layer only (claimed root differs from the certified one)
    bad_root = HybridSignature(
        signer_id=sig.signer_id,
        tree_no=sig.tree_no,
        xmss_sig=sig.xmss_sig,
        xmss_root=sig.xmss_root[:-1] + b"\x00",
    )
    assert not hybrid_verify(bad_root, payload, registry)

    # break the published certifier signature
    record = registry.record("device_0")
    honest = record.trees[sig.tree_no]
    record.trees[sig.tree_no] = type(honest)(
        tree_no=honest.tree_no,
        root=honest.root,
        certifier_sig=honest.certifier_sig[:-1] + b"\x00",
    )
    assert not hybrid_verify(sig, payload, registry)
    record.trees[sig.tree_no] = honest
    assert hybrid_verify(sig, payload, registry)


def test_wrong_payload_is_false_not_an_error():
    registry = Registry()
    keychain = _keychain(registry=registry)
    sig = keychain.sign(b"right")
    assert hybrid_verify(sig, b"wrong", registry) is False


def test_registry_lookup_misses_raise():
    registry = Registry()
    keychain = _keychain(registry=registry)
    sig = keychain.sign(b"payload")
    with pytest.raises(RegistryLookupError):
        hybrid_verify(sig, b"payload", Registry())
    phantom = HybridSignature(
        signer_id=sig.signer_id, tree_no=9, xmss_sig=sig.xmss_sig, xmss_root=sig.xmss_root
    )
    with pytest.raises(RegistryLookupError):
        hybrid_verify(phantom, b"payload", registry)


def test_wire_bytes_match_the_accounting_formula():
    for height in (2, 3):
        keychain = _keychain(height=height)
        sig = keychain.sign(b"sized")
        assert len(sig.wire_bytes()) == hybrid_signature_bytes(DEFAULT_PARAMS, height)
    assert hybrid_signature_bytes(DEFAULT_PARAMS, 4) == 8 + 2 * 67 * 32 + 4 * 32
    assert hybrid_tx_bytes(100, DEFAULT_PARAMS, 4) == 100 + 8 + 2 * 67 * 32 + 4 * 32


def test_certifier_only_accounting():
    dilithium5 = make_certifier("dilithium5")
    assert certifier_crypto_bytes(dilithium5) == 4595 + 2592
    assert certifier_tx_bytes(100, dilithium5) == 100 + 7187


def test_state_dict_round_facts():
    registry = Registry()
    keychain = _keychain(height=2, registry=registry)
    for i in range(5):
        keychain.sign(bytes([i]))
    state = keychain.state_dict()
    assert state["tree_no"] == 1
    assert state["next_index"] == 1
    assert len(state["certified_trees"]) == 2
    assert state["certified_trees"][0]["root"] == keychain.trees[0].root.hex()


def test_state_sink_fires_before_signature_release():
    seen = []
    keychain = HybridKeychain(
        "sink",
        2,
        b"s",
        b"p",
        make_certifier("falcon512"),
        Registry(),
        cert_seed=b"c",
        state_sink=lambda kc: seen.append((kc.tree_no, kc.active_tree.next_index)),
    )
    assert seen == [(0, 0)]  # initial tree publication
    keychain.sign(b"x")
    assert seen[-1] == (0, 1)
