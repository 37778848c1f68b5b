from __future__ import annotations

from pathlib import Path
from typing import Sequence
import argparse
import logging
import sys

from sdirng.core.config import (
    CertifyConfig,
    ExtractConfig,
    GridConfig,
    GRID_MAX_SETTINGS,
    SeesawConfig,
    SimulationConfig,
    VerifyConfig,
)
from sdirng.core.errors import SdirngError
from sdirng.core.logging import setup_logging
from sdirng.data.round_log import read_round_log, write_round_log
from sdirng.analysis.entropy import r43_curve_table
from sdirng.analysis.extract import byte_uniformity_pvalue, extract_from_log, output_budget
from sdirng.analysis.protocol import BUILTIN_PROTOCOLS, builtin_protocol, certify, simulate_rounds
from sdirng.analysis.witness import (
    BUILTIN_WITNESSES,
    classical_bound,
    load_builtin,
    quantum_bound_grid,
    quantum_bound_seesaw,
)
from sdirng.diagnostics.checks import run_checks
from sdirng.persistence.files import (
    dumps_json,
    load_certification,
    load_witness,
    save_certification,
    save_strategy,
    write_csv,
)

logger = logging.getLogger(__name__)


def _emit(payload, *, compact: bool = False) -> None:
    sys.stdout.write(dumps_json(payload, compact=compact).decode() + "\n")


def _cmd_bounds(args: argparse.Namespace) -> int:
    witness = load_witness(args.witness) if args.witness else load_builtin(args.builtin)
    seesaw = quantum_bound_seesaw(witness, config=SeesawConfig(restarts=args.restarts, seed=args.seed))
    if args.strategy_out:
        save_strategy(seesaw.argmax_strategy, args.strategy_out)
    grid = None
    if witness.num_measurements <= GRID_MAX_SETTINGS:
        grid = quantum_bound_grid(witness, args.resolution)
    _emit(
        {
            "name": witness.name,
            "classical": classical_bound(witness).value,
            "quantum_seesaw": seesaw.value,
            "quantum_grid": grid,
        }
    )
    return 0


def _cmd_curve(args: argparse.Namespace) -> int:
    table = r43_curve_table(args.points)
    if args.out:
        write_csv(table, args.out)
    else:
        write_csv(table, sys.stdout)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = builtin_protocol(args.protocol)
    config = SimulationConfig(
        rounds=args.rounds,
        test_fraction=args.test_fraction,
        noise=args.noise,
        generation_setting=tuple(args.generation_setting),
        seed=args.seed,
        workers=args.workers,
    )
    log = simulate_rounds(spec, args.rounds, config=config)
    write_round_log(log, args.out)
    tests = int(log.rounds["is_test"].sum())
    _emit(
        {
            "protocol": spec.name,
            "rounds": len(log),
            "test_rounds": tests,
            "generation_rounds": len(log) - tests,
            "seed": args.seed,
            "out": str(args.out),
        }
    )
    return 0


def _cmd_certify(args: argparse.Namespace) -> int:
    log = read_round_log(args.log)
    protocol = args.protocol or log.metadata.get("protocol", "r43")
    result = certify(log, builtin_protocol(protocol), args.confidence)
    if args.out:
        save_certification(result, args.out)
    _emit(result.to_dict())
    return 0


def _cmd_extract(args: argparse.Namespace) -> int:
    log = read_round_log(args.log)
    result = load_certification(args.cert)
    data = extract_from_log(
        log,
        result,
        args.seed_hex,
        output_length=args.output_length,
        security_margin=ExtractConfig().security_margin,
    )
    args.out.write_bytes(data)
    _emit(
        {
            "input_bits": result.generation_rounds,
            "output_bits": args.output_length or output_budget(result.certified_bits),
            "output_bytes": len(data),
            "byte_uniformity_pvalue": byte_uniformity_pvalue(data),
            "out": str(args.out),
        }
    )
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    config = VerifyConfig.quick(args.seed) if args.quick else VerifyConfig(seed=args.seed)
    results = run_checks(config)
    for result in results:
        _emit(result.to_dict(), compact=True)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Log debug diagnostics to stderr")

    parser = argparse.ArgumentParser(
        prog="sdirng",
        description="Semi-device-independent randomness certification for qubit prepare-and-measure protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bounds = sub.add_parser("bounds", parents=[common], help="Classical and qubit bounds of a witness")
    source = bounds.add_mutually_exclusive_group(required=True)
    source.add_argument("--witness", type=Path, help="Witness file (JSON or YAML)")
    source.add_argument("--builtin", choices=BUILTIN_WITNESSES)
    bounds.add_argument("--restarts", type=int, default=SeesawConfig.restarts)
    bounds.add_argument("--seed", type=int, default=0)
    bounds.add_argument("--resolution", type=int, default=GridConfig.resolution)
    bounds.add_argument("--strategy-out", type=Path, help="Write the see-saw optimal strategy as JSON")
    bounds.set_defaults(handler=_cmd_bounds)

    curve = sub.add_parser("curve", parents=[common], help="R43 witness-to-entropy curve as CSV")
    curve.add_argument("--points", type=int, default=20)
    curve.add_argument("--out", type=Path)
    curve.set_defaults(handler=_cmd_curve)

    simulate = sub.add_parser("simulate", parents=[common], help="Simulate protocol rounds into a log")
    simulate.add_argument("--protocol", choices=BUILTIN_PROTOCOLS, default="r43")
    simulate.add_argument("--rounds", type=int, required=True)
    simulate.add_argument("--test-fraction", type=float, default=SimulationConfig.test_fraction)
    simulate.add_argument("--noise", type=float, default=0.0)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--generation-setting", type=int, nargs=2, metavar=("X", "Y"), default=[0, 0])
    simulate.add_argument("--workers", type=int, default=1)
    simulate.add_argument("--out", type=Path, required=True, help="Round log (.csv or .parquet)")
    simulate.set_defaults(handler=_cmd_simulate)

    cert = sub.add_parser("certify", parents=[common], help="Certify min-entropy from a round log")
    cert.add_argument("--log", type=Path, required=True)
    cert.add_argument("--protocol", choices=BUILTIN_PROTOCOLS)
    cert.add_argument("--confidence", type=float, default=CertifyConfig.confidence_level)
    cert.add_argument("--out", type=Path)
    cert.set_defaults(handler=_cmd_certify)

    extract = sub.add_parser("extract", parents=[common], help="Toeplitz-extract certified generation bits")
    extract.add_argument("--log", type=Path, required=True)
    extract.add_argument("--cert", type=Path, required=True)
    extract.add_argument("--out", type=Path, required=True)
    extract.add_argument("--seed-hex", required=True)
    extract.add_argument("--output-length", type=int)
    extract.set_defaults(handler=_cmd_extract)

    verify = sub.add_parser("verify", parents=[common], help="Run the numerical self-checks")
    verify.add_argument("--quick", action="store_true")
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(handler=_cmd_verify)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    setup_logging(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.handler(args)
    except (SdirngError, OSError) as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        sys.stderr.write(dumps_json({"error": type(exc).__name__, "message": str(exc)}, compact=True).decode() + "\n")
        return 1


def main() -> None:
    sys.exit(run())
