"""
Subcommands. Each returns a process exit code:

    0   success, every check passed
    1   finished, some check failed
    2   continuation stage or Newton failure, or an unexpected error in a stage
    64  invalid config (the message names the field)
    65  data precondition failed (level outside the range, span too short, ...)
    66  checkpoint missing or unusable
    74  IO error
"""
import logging
from typing import Any, Dict, List, Optional

from exterior_hessian.pipeline import RunOptions
from exterior_hessian.runner import run_command

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_STAGE_FAILURE = 2
EXIT_CONFIG = 64
EXIT_DATA = 65
EXIT_NO_INPUT = 66
EXIT_IO = 74

EXIT_CODES = {
    "configuration": EXIT_CONFIG,
    "checkpoint": EXIT_NO_INPUT,
    "convergence": EXIT_STAGE_FAILURE,
    "precondition": EXIT_DATA,
    "io": EXIT_IO,
    "internal": EXIT_STAGE_FAILURE,
}


def exit_code(result: Dict[str, Any]) -> int:
    """Exit code of a runner status dict"""
    if result["status"] == "success":
        return EXIT_OK if result["passed"] else EXIT_CHECKS_FAILED
    return EXIT_CODES.get(result.get("error_type"), EXIT_STAGE_FAILURE)


def _run(command: str, config_path: str, checkpoint: Optional[str], out_dir: Optional[str], force: bool,
         threads: Optional[int], probe_radii: Optional[List[float]]) -> int:
    options = RunOptions(checkpoint=checkpoint, out_dir=out_dir, force=force, threads=threads,
                         probe_radii=probe_radii)
    result = run_command(command, config_path, options)
    code = exit_code(result)
    if result["status"] == "error":
        logger.error(f"[!] {command} exited with {code}: {result['error']}")
    else:
        for path in result["reports"]:
            logger.info(f"[+] Report: {path}")
    return code


def cmd_solve(config_path: str, checkpoint: Optional[str] = None, out_dir: Optional[str] = None,
              force: bool = False, threads: Optional[int] = None,
              probe_radii: Optional[List[float]] = None) -> int:
    """Continuation to the limit, checkpoint and diagnostics table"""
    return _run("solve", config_path, checkpoint, out_dir, force, threads, probe_radii)


def cmd_verify(config_path: str, checkpoint: Optional[str] = None, out_dir: Optional[str] = None,
               force: bool = False, threads: Optional[int] = None) -> int:
    """Inequality, monotone series, area growth and capacity of a stored solution"""
    return _run("verify", config_path, checkpoint, out_dir, force, threads, None)


def cmd_fit_decay(config_path: str, checkpoint: Optional[str] = None, out_dir: Optional[str] = None,
                  force: bool = False) -> int:
    """Fitted decay slopes of a stored solution"""
    return _run("fit-decay", config_path, checkpoint, out_dir, force, None, None)


def cmd_ring(config_path: str, out_dir: Optional[str] = None, force: bool = False,
             threads: Optional[int] = None) -> int:
    """Ring-mode family over analysis.ring_eps and its ordering table"""
    return _run("ring", config_path, None, out_dir, force, threads, None)
