"""Merkle-tree many-time signatures over one-time Winternitz leaves.

A tree of height h certifies 2**h one-time keys.  Each leaf node is the
hash of one WOTS public key; internal nodes hash their two children; the
top node is bound to the tree ordinal to give the published root.  Signing
consumes leaves strictly left to right through a mutable ``next_index``
cursor, which is advanced and persisted before any signature material is
released.  Verification folds the authentication path from a candidate
public key recovered out of the one-time signature and compares roots.

The whole tree is materialized at build time.  That costs a fixed number
of hash calls per leaf, so build cost grows exactly 4x per two levels of
height, and keeps signing O(h).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from .errors import ExhaustionError, ParameterError
from .hashing import (
    TAG_LEAF,
    TAG_NODE,
    TAG_ROOT,
    hash_data,
    pack_address,
    pack_u32,
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

MAX_HEIGHT = 20


@dataclass
class XmssTree:
    height: int
    tree_no: int
    public_seed: bytes
    params: WotsParams
    leaves: List[WotsKeypair]
    levels: List[List[bytes]]  # levels[0] = leaf nodes, levels[height] = [top]
    root: bytes
    next_index: int = 0
    #: invoked with the tree right after ``next_index`` moves, before the
    #: signature leaves this module
    on_state_change: Optional[Callable[["XmssTree"], None]] = field(
        default=None, repr=False, compare=False
    )

    @property
    def capacity(self) -> int:
        return 1 << self.height

    @property
    def remaining(self) -> int:
        return self.capacity - self.next_index


@dataclass(frozen=True)
class XmssSignature:
    key_index: int
    wots_sig: WotsSignature
    wots_pk: Tuple[bytes, ...]
    auth_path: Tuple[bytes, ...]


def _leaf_node(tree_no: int, index: int, pk: Tuple[bytes, ...]) -> bytes:
    # leaf hash binds its position, so identical keys at different slots
    # still produce distinct nodes
    return hash_data(TAG_LEAF + pack_address(tree_no, index) + b"".join(pk))


def _finalize_root(tree_no: int, top: bytes) -> bytes:
    # binding the ordinal into the root stops cross-tree confusion between
    # successive trees of one device
    return hash_data(TAG_ROOT + pack_u32(tree_no) + top)


def build_tree(
    height: int,
    secret_seed: bytes,
    public_seed: bytes,
    tree_no: int = 0,
    params: WotsParams = DEFAULT_PARAMS,
) -> XmssTree:
    """Generate all 2**height one-time keys and hash up the full tree."""
    if not 1 <= height <= MAX_HEIGHT:
        raise ParameterError(f"height must be in 1..{MAX_HEIGHT}, got {height}")
    if tree_no < 0:
        raise ParameterError("tree_no must be non-negative")
    n_leaves = 1 << height
    leaves = [
        wots_keygen(secret_seed, public_seed, params, leaf=i, tree=tree_no)
        for i in range(n_leaves)
    ]
    levels: List[List[bytes]] = [
        [_leaf_node(tree_no, i, leaves[i].pk) for i in range(n_leaves)]
    ]
    while len(levels[-1]) > 1:
        below = levels[-1]
        levels.append(
            [
                hash_data(TAG_NODE + below[i] + below[i + 1])
                for i in range(0, len(below), 2)
            ]
        )
    root = _finalize_root(tree_no, levels[-1][0])
    return XmssTree(
        height=height,
        tree_no=tree_no,
        public_seed=public_seed,
        params=params,
        leaves=leaves,
        levels=levels,
        root=root,
    )


def auth_path(tree: XmssTree, index: int) -> Tuple[bytes, ...]:
    """Sibling nodes from leaf level to just below the top, length == height."""
    if not 0 <= index < tree.capacity:
        raise ParameterError(f"leaf index {index} out of range for height {tree.height}")
    path = []
    node = index
    for level in range(tree.height):
        path.append(tree.levels[level][node ^ 1])
        node >>= 1
    return tuple(path)


def xmss_sign(tree: XmssTree, digest: bytes) -> XmssSignature:
    """Sign with the next unused leaf, advancing and persisting state first."""
    if tree.next_index >= tree.capacity:
        raise ExhaustionError(
            f"tree {tree.tree_no} exhausted after {tree.capacity} signatures"
        )
    index = tree.next_index
    tree.next_index += 1
    if tree.on_state_change is not None:
        tree.on_state_change(tree)
    keypair = tree.leaves[index]
    sig = wots_sign(digest, keypair)
    return XmssSignature(
        key_index=index,
        wots_sig=sig,
        wots_pk=keypair.pk,
        auth_path=auth_path(tree, index),
    )


def compute_root(
    digest: bytes,
    sig: XmssSignature,
    public_seed: bytes,
    tree_no: int = 0,
    params: WotsParams = DEFAULT_PARAMS,
) -> bytes:
    """Fold the authentication path over the pk recovered from the signature."""
    candidate_pk = wots_pk_from_sig(
        digest, sig.wots_sig, public_seed, params, leaf=sig.key_index, tree=tree_no
    )
    node = _leaf_node(tree_no, sig.key_index, candidate_pk)
    index = sig.key_index
    for sibling in sig.auth_path:
        if index & 1:
            node = hash_data(TAG_NODE + sibling + node)
        else:
            node = hash_data(TAG_NODE + node + sibling)
        index >>= 1
    return _finalize_root(tree_no, node)


def xmss_verify(
    digest: bytes,
    sig: XmssSignature,
    root: bytes,
    public_seed: bytes,
    tree_no: int = 0,
    params: WotsParams = DEFAULT_PARAMS,
) -> bool:
    """True iff the signature folds to ``root`` and carries its own pk honestly.

    The carried pk is redundant for root recomputation but travels in every
    signature, so it is checked too; any tampered byte in it must fail.
    """
    candidate_pk = wots_pk_from_sig(
        digest, sig.wots_sig, public_seed, params, leaf=sig.key_index, tree=tree_no
    )
    if tuple(sig.wots_pk) != candidate_pk:
        return False
    node = _leaf_node(tree_no, sig.key_index, candidate_pk)
    index = sig.key_index
    for sibling in sig.auth_path:
        if index & 1:
            node = hash_data(TAG_NODE + sibling + node)
        else:
            node = hash_data(TAG_NODE + node + sibling)
        index >>= 1
    return _finalize_root(tree_no, node) == root
