"""
Runner for the exterior_hessian pipelines.

Loads a run config, applies command-line overrides, runs one pipeline and
reports the outcome as a status dict; progress is mirrored in the run registry.
"""
import logging
import os
from datetime import datetime
from typing import Any, Dict, Optional

from exterior_hessian.errors import (
    CheckpointError,
    ConfigurationError,
    HessianError,
    NumericalError,
    PreconditionError,
)
from exterior_hessian.settings import get_settings
from exterior_hessian.components.cli.config_io import load_config
from exterior_hessian.components.cli.utilities.run_registry import RunRegistry
from exterior_hessian.pipeline import PIPELINES, RunOptions, RunState

logger = logging.getLogger(__name__)


def _error_type(error: Exception) -> str:
    if isinstance(error, ConfigurationError):
        return "configuration"
    if isinstance(error, CheckpointError):
        return "checkpoint"
    if isinstance(error, NumericalError):
        return "convergence"
    if isinstance(error, PreconditionError):
        return "precondition"
    if isinstance(error, OSError):
        return "io"
    return "internal"


def _registry(settings, out_dir: str) -> RunRegistry:
    path = settings.registry or os.path.join(out_dir, "runs.json")
    return RunRegistry(path)


def _failure(registry: RunRegistry, run_id: str, state: RunState, error: Exception) -> Dict[str, Any]:
    message = str(error) if isinstance(error, (HessianError, OSError)) else f"{type(error).__name__}: {str(error)}"
    registry.set_error(run_id, message)
    result = {
        "status": "error",
        "error_type": _error_type(error),
        "error": message,
        "field": getattr(error, "field", None),
        "run_id": run_id,
        "reports": state.reports,
    }
    if state.continuation is not None:
        result["continuation"] = state.continuation.model_dump()
    return result


def run_command(command: str, config_path: str, options: Optional[RunOptions] = None,
                run_id: Optional[str] = None) -> Dict[str, Any]:
    """
    Run one pipeline ("solve", "verify", "fit-decay" or "ring").

    Args:
        command: pipeline name
        config_path: INI run config
        options: command-line overrides
        run_id: registry key, generated from the command and time when omitted

    Returns:
        {"status": "success", "passed": bool, "reports": [...], "checks": {...}, "summary": {...}}
        or {"status": "error", "error_type": ..., "error": ..., "field": ...}
    """
    options = options or RunOptions()
    settings = get_settings()
    if not run_id:
        run_id = f"{command}_{datetime.now().strftime('%Y%m%d_%H%M%S_%f')}"

    try:
        config = load_config(config_path)
    except (ConfigurationError, OSError) as e:
        logger.error(f"[!] Cannot use config {config_path}: {str(e)}")
        return {"status": "error", "error_type": _error_type(e), "error": str(e),
                "field": getattr(e, "field", None), "run_id": run_id}

    out_dir = options.out_dir or config.out_dir(settings.out_dir)
    state = RunState(
        config=config,
        out_dir=out_dir,
        checkpoint=options.checkpoint or config.checkpoint_path(out_dir),
        force=options.force,
        threads=options.threads or config.analysis.threads or settings.threads,
        probe_radii=options.probe_radii,
    )

    registry = _registry(settings, out_dir)
    registry.create_run(run_id, command, config_path)
    pipeline = PIPELINES[command]

    def progress(step: str, percentage: int):
        registry.update_progress(run_id, step, percentage, state.reports)

    try:
        pipeline.run(state, progress)
    except (HessianError, OSError) as e:
        logger.error(f"[!] {command} failed: {str(e)}")
        return _failure(registry, run_id, state, e)
    except Exception as e:
        logger.exception(f"[!] {command} failed unexpectedly: {type(e).__name__}: {str(e)}")
        return _failure(registry, run_id, state, e)

    failed = [name for name, ok in state.checks.items() if not ok]
    if failed:
        logger.warning(f"[!] {command}: {len(failed)} check(s) failed: {', '.join(failed)}")
    else:
        logger.info(f"[+] {command}: all {len(state.checks)} checks passed")
    return {
        "status": "success",
        "run_id": run_id,
        "passed": not failed,
        "failed_checks": failed,
        "checks": state.checks,
        "reports": state.reports,
        "summary": state.summary,
        "out_dir": out_dir,
    }
