from fastapi import APIRouter, HTTPException
from homogen.models.run import RunConfig, as_list
from homogen.services.harness_service import config_digest, run_effective, validate_config
from homogen.services.oracle_service import compare_with_oracle, dense_oracle
from homogen.utils.errors import HomogenizationError, ValidationFailure
import logging

logger = logging.getLogger(__name__)
router = APIRouter()


def _http_error(e: HomogenizationError) -> HTTPException:
    status = 422 if isinstance(e, ValidationFailure) else 500
    return HTTPException(status_code=status, detail=f"{type(e).__name__}: {e}")


@router.post("/validate")
def validate(cfg: RunConfig):
    logger.debug(f"Validate request: {cfg.model_dump(mode='json')}")
    try:
        return validate_config(cfg, keystone=False)
    except HomogenizationError as e:
        raise _http_error(e)
    except Exception as e:
        logger.error(f"Validation failed: {e}")
        raise HTTPException(status_code=500, detail="Validation failed")


@router.post("/cell")
def cell(cfg: RunConfig):
    try:
        correctors, _, _ = run_effective(cfg)
        return {
            "config_digest": config_digest(cfg),
            "k": correctors.schedule.k,
            "gammas": list(correctors.schedule.gammas),
            "exceptional": correctors.schedule.exceptional,
            "s": as_list(correctors.s_points),
            "F": as_list(correctors.F),
            "max_compatibility_defect": correctors.max_defect(),
            "max_solve_residual": correctors.max_residual(),
        }
    except HTTPException:
        raise
    except HomogenizationError as e:
        raise _http_error(e)
    except Exception as e:
        logger.error(f"Cell pipeline failed: {e}")
        raise HTTPException(status_code=500, detail="Cell pipeline failed")


@router.post("/effective")
def effective(cfg: RunConfig):
    try:
        _, dec, tensors = run_effective(cfg)
        return {
            "config_digest": config_digest(cfg),
            "b": as_list(dec.b),
            "B0": as_list(dec.B0),
            "Theta": as_list(tensors.Theta),
            "Theta_sym": as_list(tensors.Theta_sym),
            "lambda_min": tensors.lambda_min,
            "lambda_max": tensors.lambda_max,
        }
    except HTTPException:
        raise
    except HomogenizationError as e:
        raise _http_error(e)
    except Exception as e:
        logger.error(f"Effective pipeline failed: {e}")
        raise HTTPException(status_code=500, detail="Effective pipeline failed")


@router.post("/oracle")
def oracle(cfg: RunConfig):
    try:
        correctors, _, _ = run_effective(cfg)
        deviations = compare_with_oracle(correctors, dense_oracle(cfg), cfg.tolerances.oracle)
        return {"config_digest": config_digest(cfg), "deviations": deviations}
    except HTTPException:
        raise
    except HomogenizationError as e:
        raise _http_error(e)
    except Exception as e:
        logger.error(f"Oracle comparison failed: {e}")
        raise HTTPException(status_code=500, detail="Oracle comparison failed")
