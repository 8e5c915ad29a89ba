"""``delivchain`` command-line entry point.

Exit codes: 0 success, 1 failed check (verification, invariant, corrupt dump),
2 usage or I/O problem (missing file, invalid config, garbled input).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .encoding import EncodingError, decode
from .errors import CorruptDump, InvalidConfig
from .ledger import load_dump, verify_dump
from .simulator import CANONICAL_SCENARIOS, Simulation, audit, canonical_scenario, load_config, replay

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _err(message: str) -> None:
    print(f"delivchain: {message}", file=sys.stderr)


def _read(path: str) -> Optional[str]:
    try:
        return Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        _err(f"cannot read {path}: {exc}")
        return None


def cmd_run(args: argparse.Namespace) -> int:
    try:
        if Path(args.config).is_file():
            config = load_config(args.config)
        elif Path(args.config).name.removesuffix(".json") in CANONICAL_SCENARIOS:
            config = canonical_scenario(Path(args.config).name.removesuffix(".json"))
        else:
            _err(f"no such scenario file: {args.config}")
            return EXIT_USAGE
    except (InvalidConfig, OSError, UnicodeDecodeError) as exc:
        _err(f"invalid config: {exc}")
        return EXIT_USAGE
    seed = os.environ.get("DELIVCHAIN_SEED")
    if seed is not None:
        try:
            config = dataclasses.replace(config, seed=int(seed))
        except ValueError:
            _err(f"DELIVCHAIN_SEED is not an integer: {seed!r}")
            return EXIT_USAGE
    sim = Simulation(config)
    report = sim.run()
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "ledger.ndjson").write_text(sim.contract.ledger.dumps())
        (out / "report.json").write_text(report.to_json())
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return EXIT_USAGE
    problems = audit(sim)
    for problem in problems:
        _err(f"invariant breach: {problem}")
    print(
        f"{config.name or args.config}: {len(report.orders)} orders, "
        f"{report.violations['food']} food / {report.violations['delivery']} delivery warnings, "
        f"head {report.head_hash}"
    )
    return EXIT_FAIL if problems else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    text = _read(args.ledger)
    if text is None:
        return EXIT_USAGE
    if not text.strip():
        _err(f"{args.ledger} is empty")
        return EXIT_USAGE
    try:
        report = verify_dump(text)
    except ValueError as exc:
        _err(f"{args.ledger} is not an NDJSON ledger dump: {exc}")
        return EXIT_USAGE
    if report.ok:
        print("ok")
        return EXIT_OK
    print(f"FAIL block {report.first_failure}: {report.reason}")
    return EXIT_FAIL


def _decoded(raw: bytes):
    try:
        value = decode(raw)
    except EncodingError:
        return raw.hex()
    return json.loads(json.dumps(value, default=lambda b: b.hex()))


def cmd_dump(args: argparse.Namespace) -> int:
    text = _read(args.ledger)
    if text is None:
        return EXIT_USAGE
    try:
        ledger = load_dump(text)
    except ValueError as exc:
        _err(f"cannot parse {args.ledger}: {exc}")
        return EXIT_USAGE
    for block in ledger:
        print(f"block {block.index}  t={block.timestamp}  hash={block.block_hash.hex()}")
        print(f"  prev={block.prev_hash.hex()}  tx_root={block.tx_root.hex()}")
        for tx in block.transactions:
            print(f"  {tx.operation}  caller={tx.caller}  gas={tx.gas_charged}  tx={tx.tx_hash.hex()}")
            print(f"    input:  {json.dumps(_decoded(tx.input))}")
            print(f"    output: {json.dumps(_decoded(tx.output))}")
            for event in tx.events:
                print(f"    event:  {json.dumps(event.as_dict())}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    text = _read(str(Path(args.dir) / "report.json"))
    if text is None:
        return EXIT_USAGE
    try:
        report = json.loads(text)
        summary = {
            "scenario": report["scenario"],
            "head_hash": report["head_hash"],
            "completed": report["completed"],
            "violations": report["violations"],
            "settlements": report["receipts"],
            "gas": report["gas"],
            "reputation": {a["address"]: a["reputation"] for a in report["actors"]},
        }
    except (ValueError, KeyError, TypeError) as exc:
        _err(f"malformed report: {exc}")
        return EXIT_USAGE
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    text = _read(args.ledger)
    if text is None:
        return EXIT_USAGE
    try:
        contract = replay(text)
    except CorruptDump as exc:
        _err(f"corrupt dump: {exc}")
        return EXIT_FAIL
    state = contract.state()
    print(json.dumps({
        "state_digest": contract.state_digest().hex(),
        "head_hash": contract.ledger.head_hash.hex(),
        "orders": {o["order_id"]: o["status"] for o in state["orders"]},
        "balances": state["balances"],
        "reputation": contract.registry.reputations(),
    }, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delivchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write ledger.ndjson + report.json")
    run.add_argument("config", help="scenario JSON file, or a bundled scenario name such as happy_path.json")
    run.add_argument("--out", default=".", help="output directory (default: current directory)")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify-ledger", help="check hashes and links of a ledger dump")
    verify.add_argument("ledger")
    verify.set_defaults(func=cmd_verify)

    dump = sub.add_parser("dump-ledger", help="pretty-print a ledger dump")
    dump.add_argument("ledger")
    dump.set_defaults(func=cmd_dump)

    report = sub.add_parser("report", help="summarize settlements and gas from a run directory")
    report.add_argument("dir")
    report.set_defaults(func=cmd_report)

    rep = sub.add_parser("replay", help="re-execute a ledger dump and print the final state")
    rep.add_argument("ledger")
    rep.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
