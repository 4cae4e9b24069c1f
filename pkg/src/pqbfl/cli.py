"""Command line front end.

Subcommands:
  run           simulate a configuration, writing metrics/chain/state files
  verify-chain  replay an exported chain against a state file
  keygen-bench  tree build cost across heights (hash calls, wall clock)
  sig-bench     hybrid sign/verify latency and wire sizes vs the baseline
  show-config   print the effective configuration and exit

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 verification failure.  The default output directory comes from
PQBFL_OUT_DIR when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .chain import chain_from_lines, replay_verify
from .config import RunConfig
from .errors import ConfigError, PqbflError
from .hashing import HASH_COUNTER
from .hybrid import (
    CERTIFIER_PRESETS,
    certifier_crypto_bytes,
    certifier_tx_bytes,
    hybrid_keygen,
    hybrid_signature_bytes,
    hybrid_tx_bytes,
    hybrid_verify,
    make_certifier,
    Registry,
)
from .sim import registry_from_state, run
from .wots import DEFAULT_PARAMS
from .xmss import build_tree

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3

OUT_DIR_ENV = "PQBFL_OUT_DIR"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqbfl", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a configuration")
    run_p.add_argument("--config", help="JSON config file; flags override its values")
    run_p.add_argument("--scenario", help="selection scenario")
    run_p.add_argument("--mode", help="bfl or fl")
    run_p.add_argument("--rounds", type=int, help="number of rounds")
    run_p.add_argument("--devices", type=int, help="cohort size")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument("--height", type=int, help="tree height for signing keys")
    run_p.add_argument("--scheme", help="hybrid or certifier_only")
    run_p.add_argument("--out", help="output directory (default $PQBFL_OUT_DIR or ./out)")

    verify_p = sub.add_parser("verify-chain", help="replay and re-verify an exported chain")
    verify_p.add_argument("--chain", required=True, help="chain file, one block per line")
    verify_p.add_argument("--state", required=True, help="state file with registry material")

    bench_p = sub.add_parser("keygen-bench", help="tree build cost by height")
    bench_p.add_argument(
        "--heights", default="2,4,6,8", help="comma-separated tree heights (2..12)"
    )

    sig_p = sub.add_parser("sig-bench", help="sign/verify cost and wire sizes")
    sig_p.add_argument("--height", type=int, default=5)
    sig_p.add_argument("--certifier", default="dilithium5", choices=sorted(CERTIFIER_PRESETS))
    sig_p.add_argument("--messages", type=int, default=16)

    show_p = sub.add_parser("show-config", help="print the effective configuration")
    show_p.add_argument("--config", help="JSON config file to merge over defaults")

    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {
        "scenario": getattr(args, "scenario", None),
        "mode": getattr(args, "mode", None),
        "rounds": getattr(args, "rounds", None),
        "n_devices": getattr(args, "devices", None),
        "seed": getattr(args, "seed", None),
        "xmss_height": getattr(args, "height", None),
        "signature_scheme": getattr(args, "scheme", None),
        "out_dir": getattr(args, "out", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    config.validate()
    return config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out_dir = config.out_dir or os.environ.get(OUT_DIR_ENV) or "out"
    print("effective configuration:")
    print(config.dumps())
    result = run(config, out_dir=out_dir)
    print(f"rounds: {len(result.metrics)}")
    print(f"final accuracy: {result.final_accuracy:.4f}")
    if result.chain is not None:
        print(f"chain length: {len(result.chain.blocks)} blocks (incl. genesis)")
    print(f"outputs in: {out_dir}")
    return EXIT_OK


def _cmd_verify_chain(args: argparse.Namespace) -> int:
    chain_path = Path(args.chain)
    state_path = Path(args.state)
    for path in (chain_path, state_path):
        if not path.exists():
            raise ConfigError(f"file not found: {path}")
    with open(state_path) as fh:
        state = json.load(fh)
    registry = registry_from_state(state)
    with open(chain_path) as fh:
        blocks = chain_from_lines(fh.readlines())
    failures = replay_verify(blocks, registry, quorum=state.get("quorum", 1))
    txs = sum(len(b.txs) for b in blocks)
    if failures:
        for f in failures:
            where = f"block {f.block_index}" + (
                f" tx {f.tx_index}" if f.tx_index is not None else ""
            )
            print(f"FAIL {where}: {f.what}")
        print(f"verification failed: {len(failures)} failure(s) over {len(blocks)} blocks")
        return EXIT_VERIFY
    print(f"chain ok: {len(blocks)} blocks, {txs} transactions, 0 failures")
    return EXIT_OK


def _cmd_keygen_bench(args: argparse.Namespace) -> int:
    try:
        heights = [int(h) for h in args.heights.split(",") if h.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --heights value {args.heights!r}") from exc
    if not heights or any(not 2 <= h <= 12 for h in heights):
        raise ConfigError("heights must be in 2..12")
    print(f"{'height':>6} {'leaves':>7} {'hash_calls':>12} {'seconds':>9}")
    calls = {}
    for height in heights:
        mark = HASH_COUNTER.count
        started = time.perf_counter()
        tree = build_tree(height, b"bench-secret", b"bench-public", 0)
        elapsed = time.perf_counter() - started
        calls[height] = HASH_COUNTER.count - mark
        print(f"{height:>6} {len(tree.leaves):>7} {calls[height]:>12} {elapsed:>9.3f}")
    for low, high in zip(heights, heights[1:]):
        if high == low + 2:
            print(f"hash-call ratio h={high} vs h={low}: {calls[high] / calls[low]}")
    return EXIT_OK


def _cmd_sig_bench(args: argparse.Namespace) -> int:
    if not 2 <= args.height <= 10:
        raise ConfigError("--height must be in 2..10")
    if args.messages < 1:
        raise ConfigError("--messages must be >= 1")
    registry = Registry()
    certifier = make_certifier(args.certifier)
    keychain = hybrid_keygen(
        "bench", args.height, b"bench-secret", b"bench-public", certifier, registry,
        cert_seed=b"bench-cert",
    )
    payloads = [f"message-{i}".encode() for i in range(args.messages)]
    started = time.perf_counter()
    sigs = [keychain.sign(p) for p in payloads]
    sign_time = time.perf_counter() - started
    started = time.perf_counter()
    ok = all(hybrid_verify(s, p, registry) for s, p in zip(sigs, payloads))
    verify_time = time.perf_counter() - started
    params = DEFAULT_PARAMS
    payload_len = len(payloads[0])
    print(f"scheme: hybrid (tree height {args.height}) vs {certifier.name}-only")
    print(f"signed {args.messages} messages: {sign_time:.3f}s sign, {verify_time:.3f}s verify, all_ok={ok}")
    print(f"hybrid signature bytes: {hybrid_signature_bytes(params, args.height)}")
    print(f"hybrid tx bytes (payload {payload_len}): {hybrid_tx_bytes(payload_len, params, args.height)}")
    print(f"{certifier.name}-only crypto bytes: {certifier_crypto_bytes(certifier)}")
    print(f"{certifier.name}-only tx bytes (payload {payload_len}): {certifier_tx_bytes(payload_len, certifier)}")
    return EXIT_OK


def _cmd_show_config(args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    config.validate()
    print(config.dumps())
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; that is a configuration error here
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "run": _cmd_run,
        "verify-chain": _cmd_verify_chain,
        "keygen-bench": _cmd_keygen_bench,
        "sig-bench": _cmd_sig_bench,
        "show-config": _cmd_show_config,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PqbflError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main(argv=sys.argv[1:]))
