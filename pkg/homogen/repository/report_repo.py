import json
import logging
import os
from datetime import datetime, timezone
from typing import Dict, List

import numpy as np
import pandas as pd

from homogen.models.cell import TorusGrid
from homogen.models.correctors import CorrectorSet
from homogen.models.run import RunResults, as_list
from homogen.models.simulation import EvolutionState
from homogen.utils.errors import IoFailure

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
CONVERGENCE_COLUMNS = ["eps", "E_full", "E_partial", "runtime"]


def _ensure_dir(out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        logger.error(f"Cannot create output directory {out_dir}: {e}")
        raise IoFailure(f"cannot create {out_dir}: {e}")


def _write_csv(frame: pd.DataFrame, path: str) -> str:
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.debug(f"Wrote {len(frame)} rows to {path}")
        return path
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise IoFailure(f"cannot write {path}: {e}")


def _write_json(payload: dict, path: str) -> str:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        return path
    except (OSError, TypeError, ValueError) as e:
        logger.error(f"Failed to write {path}: {e}")
        raise IoFailure(f"cannot write {path}: {e}")


def _component_columns(prefix: str, values: np.ndarray) -> Dict[str, np.ndarray]:
    """Flatten trailing axes of (M, ...) samples into named columns."""
    flat = values.reshape(values.shape[0], -1)
    if values.ndim == 2:
        names = [f"{prefix}_{a}" for a in range(values.shape[1])]
    else:
        names = [f"{prefix}_{a}{b}" for a in range(values.shape[1]) for b in range(values.shape[2])]
    return {name: flat[:, i] for i, name in enumerate(names)}


def sample_tables(results: RunResults) -> Dict[str, pd.DataFrame]:
    tables: Dict[str, pd.DataFrame] = {}
    correctors = results.correctors
    s = correctors.s_points if correctors is not None else np.zeros(0)

    solvability = {"s": s}
    if correctors is not None:
        for level in range(correctors.F.shape[0]):
            solvability.update(_component_columns(f"F{level + 1}", correctors.F[level]))
    tables["solvability"] = pd.DataFrame(solvability)

    frame = {"s": s}
    if results.decomposition is not None:
        frame.update(_component_columns("beta0", results.decomposition.beta0))
        frame.update(_component_columns("B0", results.decomposition.B0))
    tables["frame"] = pd.DataFrame(frame)

    theta = {"s": s}
    if correctors is not None:
        theta.update(_component_columns("theta", correctors.theta))
    tables["theta"] = pd.DataFrame(theta)

    rows = results.table.rows if results.table is not None else []
    tables["convergence"] = pd.DataFrame(
        [[r.eps, r.e_full, r.e_partial, r.runtime] for r in rows], columns=CONVERGENCE_COLUMNS
    ).astype(float)
    return tables


def report_payload(results: RunResults) -> dict:
    payload: dict = {
        "config_digest": results.config_digest,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "residuals": dict(results.residuals),
        "diagnostics": results.diagnostics,
    }
    if results.correctors is not None:
        c = results.correctors
        payload["schedule"] = {
            "alpha": c.schedule.alpha,
            "k": c.schedule.k,
            "gammas": list(c.schedule.gammas),
            "exceptional": c.schedule.exceptional,
        }
        payload["max_compatibility_defect"] = c.max_defect()
        payload["max_solve_residual"] = c.max_residual()
        payload["correctors"] = {
            "n": c.n,
            "m": c.m,
            "F": as_list(c.F),
            "p_min": float(c.p.min()),
            "p_max": float(c.p.max()),
            # rows: chain levels 1..k+1, then kappa
            "max_defect_by_level": as_list(c.compatibility_defects.max(axis=1)),
            "max_residual_by_level": as_list(c.residuals.max(axis=1)),
        }
    if results.decomposition is not None:
        payload["b"] = as_list(results.decomposition.b)
        payload["B0_max"] = float(np.abs(results.decomposition.B0).max())
    if results.tensors is not None:
        t = results.tensors
        payload.update({
            "Theta": as_list(t.Theta),
            "Theta_sym": as_list(t.Theta_sym),
            "lambda_min": t.lambda_min,
            "lambda_max": t.lambda_max,
        })
    if results.table is not None:
        payload["convergence"] = [row.model_dump() for row in results.table.rows]
        payload["convergence_metadata"] = results.table.metadata
    return payload


def emit_report(results: RunResults, out_dir: str) -> List[str]:
    """report.json plus one CSV per sampled table; returns the written paths."""
    _ensure_dir(out_dir)
    written = [_write_json(report_payload(results), os.path.join(out_dir, "report.json"))]
    for name, frame in sample_tables(results).items():
        written.append(_write_csv(frame, os.path.join(out_dir, f"{name}.csv")))
    if results.correctors is not None:
        written.extend(write_correctors(results.correctors, os.path.join(out_dir, "correctors")))
    logger.info(f"Report written to {out_dir}: {len(written)} files")
    return written


def write_correctors(correctors: CorrectorSet, out_dir: str) -> List[str]:
    """One CSV per field per s-sample: p, chi_1 .. chi_{k+1} and kappa on the cell nodes."""
    _ensure_dir(out_dir)
    grid = TorusGrid(dimension=correctors.dimension, n=correctors.n)
    base = {"node": np.arange(grid.size)}
    base.update({f"xi_{a}": grid.nodes[:, a] for a in range(grid.dimension)})
    written = []
    for index in range(correctors.m):
        fields = {"p": {"p": correctors.p[index]}}
        for level in range(correctors.chi.shape[0]):
            fields[f"chi{level + 1}"] = _component_columns(f"chi{level + 1}", correctors.chi[level, index])
        fields["kappa"] = _component_columns("kappa", correctors.kappa[index])
        for name, columns in fields.items():
            frame = pd.DataFrame({**base, **columns})
            written.append(_write_csv(frame, os.path.join(out_dir, f"{name}_s{index:03d}.csv")))
    logger.info(f"Corrector fields written to {out_dir}: {len(written)} files")
    return written


def load_report(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Failed to read report {path}: {e}")
        raise IoFailure(f"cannot read {path}: {e}")


def write_snapshots(state: EvolutionState, x: np.ndarray, out_dir: str, name: str, binary: bool = False) -> List[str]:
    """Checkpoint fields as (x, value) CSVs, or one flat float64 file with a JSON sidecar."""
    _ensure_dir(out_dir)
    if binary:
        data_path = os.path.join(out_dir, f"{name}.f64")
        try:
            np.ascontiguousarray(state.snapshots, dtype="<f8").tofile(data_path)
        except OSError as e:
            logger.error(f"Failed to write {data_path}: {e}")
            raise IoFailure(f"cannot write {data_path}: {e}")
        sidecar = {
            "dtype": "float64",
            "byte_order": "little",
            "shape": list(state.snapshots.shape),
            "checkpoints": list(state.checkpoints),
            "length": state.length,
            "spacing": state.spacing,
            "x0": float(x[0]),
        }
        return [data_path, _write_json(sidecar, os.path.join(out_dir, f"{name}.json"))]
    return [
        _write_csv(pd.DataFrame({"x": x, "value": u}), os.path.join(out_dir, f"{name}_t{index}.csv"))
        for index, u in enumerate(state.snapshots)
    ]


def read_snapshots(data_path: str) -> tuple[np.ndarray, dict]:
    sidecar = load_report(os.path.splitext(data_path)[0] + ".json")
    try:
        values = np.fromfile(data_path, dtype="<f8")
    except OSError as e:
        raise IoFailure(f"cannot read {data_path}: {e}")
    return values.reshape(sidecar["shape"]), sidecar
