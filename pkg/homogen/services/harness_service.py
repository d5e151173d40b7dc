import hashlib
import json
import logging
import time
from typing import Dict, Sequence

import numpy as np
from pydantic import ValidationError

from homogen.models.cell import SSampleSet, TorusGrid
from homogen.models.correctors import CorrectorSet
from homogen.models.effective import DriftDecomposition, EffectiveTensors
from homogen.models.run import ConvergenceRow, ConvergenceTable, RunConfig, as_list
from homogen.models.simulation import BoxGrid, EvolutionState
from homogen.services.cell_service import assemble_generator, check_coercivity
from homogen.services.corrector_service import build_corrector_chain, corrector_schedule
from homogen.services.effective_service import (
    average_theta,
    cumulative_theta,
    drift_decomposition,
    drift_frame,
)
from homogen.services.kernel_service import discretize_kernel, raise_for_violations, validate_kernel
from homogen.services.simulate_service import (
    BoxOperator,
    boundary_mass,
    evolve_epsilon,
    gaussian_initial,
    shift_field,
    solve_heat_multiplier,
    sup_l2_error,
)
from homogen.utils.errors import ConvergenceCheckFailed, IoFailure, ValidationFailure
from homogen.utils.pool import map_parallel

logger = logging.getLogger(__name__)

BOUNDARY_MASS_TOL = 1e-8


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        logger.error(f"Cannot read config {path}: {e}")
        raise IoFailure(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        logger.error(f"Config {path} is not valid JSON: {e}")
        raise ValidationFailure(f"{path}: {e}")
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        logger.error(f"Invalid run config: {e}")
        raise ValidationFailure(str(e))


def apply_overrides(cfg: RunConfig, epsilons: Sequence[float | str] | None = None, alpha: float | None = None,
                    seed: int | None = None, out_dir: str | None = None) -> RunConfig:
    raw = cfg.model_dump(mode="json")
    if epsilons:
        raw["box"]["epsilons"] = list(epsilons)
    if alpha is not None:
        raw["alpha"] = alpha
    if seed is not None:
        raw["seed"] = seed
    if out_dir is not None:
        raw["output"]["dir"] = out_dir
    return parse_config(raw)


def config_digest(cfg: RunConfig) -> str:
    """sha256 of the canonical JSON form; output settings do not take part."""
    payload = cfg.model_dump(mode="json", exclude={"output"})
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def cell_grid(cfg: RunConfig) -> TorusGrid:
    return TorusGrid(dimension=cfg.grid.dimension, n=cfg.grid.n_cell)


def box_grid(cfg: RunConfig, eps: float) -> BoxGrid:
    if cfg.grid.dimension != 1:
        raise ValidationFailure("box simulation supports d = 1 only")
    return BoxGrid(length=cfg.box.length, q=cfg.box.q(eps), n_cell=cfg.grid.n_cell)


def validate_config(cfg: RunConfig, keystone: bool = True) -> Dict[str, object]:
    """Kernel, coefficient and schedule checks; optional keystone rows per epsilon."""
    report = validate_kernel(cfg.kernel)
    raise_for_violations(report)
    check_coercivity(cfg.mu)
    SSampleSet(m=cfg.grid.m)
    schedule = corrector_schedule(cfg.alpha)
    summary: Dict[str, object] = {
        "config_digest": config_digest(cfg),
        "kernel_mass": report.mass,
        "first_moment": report.first_moment,
        "second_moment": report.second_moment,
        "mu_minus": cfg.mu.mu_minus,
        "mu_plus": cfg.mu.mu_plus,
        "k": schedule.k,
        "gammas": schedule.gammas,
        "exceptional": schedule.exceptional,
    }
    if keystone and cfg.grid.dimension == 1:
        summary["keystone"] = {
            str(eps): keystone_check(cfg, eps) for eps in cfg.box.epsilons
        }
    logger.info(f"Config valid: k={schedule.k}, mu in [{cfg.mu.mu_minus}, {cfg.mu.mu_plus}]")
    return summary


def run_cell(cfg: RunConfig) -> CorrectorSet:
    schedule = corrector_schedule(cfg.alpha)
    raise_for_violations(validate_kernel(cfg.kernel))
    return build_corrector_chain(
        schedule, cell_grid(cfg), cfg.kernel, cfg.mu, SSampleSet(m=cfg.grid.m),
        tol_compat=cfg.tolerances.compat, tol_solve=cfg.tolerances.solve,
    )


def run_effective(cfg: RunConfig, correctors: CorrectorSet | None = None
                  ) -> tuple[CorrectorSet, DriftDecomposition, EffectiveTensors]:
    correctors = correctors or run_cell(cfg)
    dec = drift_decomposition(correctors)
    tensors = average_theta(correctors.theta)
    return correctors, dec, tensors


def frame_trajectory(state: EvolutionState, dec: DriftDecomposition, eps: float, grid: BoxGrid) -> EvolutionState:
    """u^eps(x + b^eps(t), t) at every checkpoint."""
    frames = drift_frame(dec, eps, np.asarray(state.checkpoints))
    shifted = np.stack([shift_field(u, -frames[i], grid) for i, u in enumerate(state.snapshots)])
    return state.model_copy(update={"snapshots": shifted})


def simulate_epsilon(cfg: RunConfig, eps: float, dec: DriftDecomposition, tensors: EffectiveTensors
                     ) -> tuple[ConvergenceRow, Dict[str, EvolutionState]]:
    start = time.perf_counter()
    grid = box_grid(cfg, eps)
    u0 = gaussian_initial(grid, cfg.initial.width, cfg.initial.center)
    checkpoints = cfg.time.checkpoints
    op = BoxOperator(grid, discretize_kernel(cfg.kernel, grid.n_cell), cfg.mu, cfg.alpha)
    u_eps = evolve_epsilon(u0, cfg.time.T, grid, op.kern, cfg.mu, cfg.alpha, checkpoints, operator=op,
                           cfl_fraction=cfg.time.cfl_fraction)
    framed = frame_trajectory(u_eps, dec, eps, grid)

    Theta = tensors.Theta_sym
    u_hom = solve_heat_multiplier(u0, lambda t: Theta * t, grid, checkpoints)
    rho = solve_heat_multiplier(u0, cumulative_theta(tensors, cfg.alpha, eps), grid, checkpoints)

    edge = boundary_mass(u_hom.snapshots[-1], grid)
    if edge > BOUNDARY_MASS_TOL:
        logger.warning(f"Mass {edge:.3e} of u0(T) within distance 1 of the box boundary (eps={eps:.5g})")
    row = ConvergenceRow(
        eps=eps,
        e_full=sup_l2_error(framed, u_hom),
        e_partial=sup_l2_error(framed, rho),
        runtime=time.perf_counter() - start,
        steps=u_eps.steps,
        dt=u_eps.dt,
        max_principle_ok=u_eps.max_principle_ok,
        positivity_ok=u_eps.positivity_ok,
        boundary_mass=edge,
    )
    logger.info(f"eps={eps:.5g}: E_full={row.e_full:.6e}, E_partial={row.e_partial:.6e}, {row.steps} steps in {row.runtime:.1f}s")
    return row, {"u_eps": u_eps, "framed": framed, "u_hom": u_hom, "rho": rho}


def run_convergence(cfg: RunConfig, effective: tuple | None = None) -> ConvergenceTable:
    correctors, dec, tensors = effective or run_effective(cfg)
    rows = map_parallel(lambda eps: simulate_epsilon(cfg, eps, dec, tensors)[0], cfg.box.epsilons)
    return ConvergenceTable(
        rows=rows,
        metadata={
            "config_digest": config_digest(cfg),
            "alpha": cfg.alpha,
            "Theta": as_list(tensors.Theta),
            "Theta_sym": as_list(tensors.Theta_sym),
            "b": as_list(dec.b),
        },
    )


def check_convergence(table: ConvergenceTable, ratio: float | None = None) -> None:
    """Monotone decay of both errors and sup-norm contraction in every run."""
    for row in table.rows:
        if not row.max_principle_ok or not row.positivity_ok:
            raise ConvergenceCheckFailed(f"maximum principle or positivity violated at eps={row.eps}")
    for name in ("e_full", "e_partial"):
        values = table.column(name)
        if any(b >= a for a, b in zip(values, values[1:])):
            logger.error(f"{name} not strictly decreasing: {values}")
            raise ConvergenceCheckFailed(f"{name} does not decrease with eps: {values}")
    if ratio is not None and table.rows:
        first, last = table.rows[0].e_full, table.rows[-1].e_full
        if last > ratio * first:
            raise ConvergenceCheckFailed(f"E_full fell from {first:.3e} to {last:.3e}, above the factor {ratio}")


def keystone_check(cfg: RunConfig, eps: float, rows: int = 100, seed: int | None = None) -> float:
    """Largest deviation between folded eps^2 L^eps rows and the cell operator rows."""
    grid = box_grid(cfg, eps)
    cgrid = cell_grid(cfg)
    op = BoxOperator(grid, cfg.kernel, cfg.mu, cfg.alpha)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    picks = rng.integers(0, grid.n_box, size=rows)
    times = rng.uniform(0.0, 1.0, size=rows) * eps ** cfg.alpha
    cells = grid.cell_index
    worst = 0.0
    for i, t in zip(picks, times):
        s = t / eps ** cfg.alpha
        row = op.scaled_row(int(i), float(t))
        folded = np.zeros(cgrid.size)
        np.add.at(folded, cells, row)
        cell_row = assemble_generator(cgrid, cfg.kernel, cfg.mu, s).matrix[cells[i]]
        scale = max(1.0, float(np.abs(cell_row).max()))
        worst = max(worst, float(np.abs(folded - cell_row).max()) / scale)
    if worst > cfg.tolerances.keystone:
        logger.error(f"Keystone deviation {worst:.3e} at eps={eps}")
        raise ConvergenceCheckFailed(f"folded box rows differ from the cell operator by {worst:.3e}")
    logger.info(f"Keystone check at eps={eps:.5g}: {rows} rows, max deviation {worst:.2e}")
    return worst
