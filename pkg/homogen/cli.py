"""Command-line harness: validate | cell | effective | simulate | converge | oracle | residual."""
import argparse
import logging
import os
import sys
from typing import List

from homogen.config.settings import settings
from homogen.models.run import RunConfig, RunResults
from homogen.repository.report_repo import emit_report, write_snapshots
from homogen.services.harness_service import (
    apply_overrides,
    box_grid,
    check_convergence,
    config_digest,
    load_config,
    run_convergence,
    run_effective,
    simulate_epsilon,
    validate_config,
)
from homogen.services.oracle_service import compare_with_oracle, dense_oracle
from homogen.services.residual_service import ansatz_residual, initial_corrector_norm
from homogen.utils.errors import HomogenizationError

logger = logging.getLogger(__name__)

CONVERGENCE_RATIO = 0.6


def _epsilons(text: str | None) -> List[str] | None:
    """Split the override list; parsing happens in the config model."""
    if not text:
        return None
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homogen", description=__doc__)
    parser.add_argument("command", choices=["validate", "cell", "effective", "simulate", "converge", "oracle", "residual"])
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--epsilon", default=None, help="comma-separated list, e.g. 1/8,1/16")
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--check", action="store_true", help="fail with exit code 4 when convergence is not monotone")
    return parser


def run_command(command: str, cfg: RunConfig, check: bool = False) -> RunResults:
    results = RunResults(config_digest=config_digest(cfg))
    out_dir = cfg.output.dir

    if command == "validate":
        results.diagnostics["validation"] = validate_config(cfg)
        return results

    correctors, dec, tensors = run_effective(cfg)
    results.correctors = correctors
    if command != "cell":
        results.decomposition = dec
        results.tensors = tensors
    effective = (correctors, dec, tensors)

    if command == "simulate":
        for eps in cfg.box.epsilons:
            row, states = simulate_epsilon(cfg, eps, dec, tensors)
            results.diagnostics[f"eps={eps!r}"] = row.model_dump()
            if cfg.output.snapshots:
                x = box_grid(cfg, eps).x
                for name, state in states.items():
                    write_snapshots(state, x, os.path.join(out_dir, "snapshots"), f"{name}_q{cfg.box.q(eps)}",
                                    binary=cfg.output.binary)
    elif command == "converge":
        results.table = run_convergence(cfg, effective)
        if check:
            check_convergence(results.table, CONVERGENCE_RATIO)
    elif command == "oracle":
        results.diagnostics["oracle"] = compare_with_oracle(correctors, dense_oracle(cfg), cfg.tolerances.oracle)
    elif command == "residual":
        for eps in cfg.box.epsilons:
            results.residuals[f"ansatz eps={eps!r}"] = ansatz_residual(cfg, eps, effective=effective)
            results.residuals[f"initial eps={eps!r}"] = initial_corrector_norm(cfg, eps, effective=effective)
    return results


def main(argv: List[str] | None = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL)
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), _epsilons(args.epsilon), args.alpha, args.seed, args.out_dir)
        results = run_command(args.command, cfg, check=args.check)
        emit_report(results, cfg.output.dir)
    except HomogenizationError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return e.exit_code
    logger.info(f"{args.command} finished")
    return 0


if __name__ == "__main__":
    sys.exit(main())
