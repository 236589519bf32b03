"""
Checkpoint files for continuation runs.

A checkpoint is an uncompressed `.npz` archive with

    values   float64 array, the field values on the whole grid
    nodes    float64 array, radial node radii (radial grids only)
    meta     0-d unicode array holding a JSON record:
               format       CHECKPOINT_FORMAT
               params       ProblemParams of the completed stage
               grid         {"mode": "radial"} or {"mode": "cartesian", "h", "outer_radius"}
               domain       the inner domain Ω
               glue         GlueParams or null
               kind         "exterior" or "ring"
               ring_eps     ring right-hand side or null
               config       sha256 digest of the SolveConfig JSON
               stage        index of the last completed stage
               stages       StageRecord dumps of all completed stages

Files are written to a temporary sibling and renamed into place.
"""
import hashlib
import json
import logging
import os
from typing import Any, Dict, List, Tuple

import numpy as np

from exterior_hessian.errors import CheckpointError
from exterior_hessian.components.closedforms import ProblemParams
from exterior_hessian.components.subsolution import GlueParams, parse_domain
from ..types import CartesianGrid, RadialGrid, SolutionField, SolveConfig, StageRecord

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1


def config_digest(config: SolveConfig) -> str:
    return hashlib.sha256(config.model_dump_json().encode("utf-8")).hexdigest()


def save_checkpoint(path: str, field: SolutionField, stage: int, config: SolveConfig,
                    stages: List[StageRecord]) -> str:
    grid = field.grid
    if isinstance(grid, RadialGrid):
        grid_spec: Dict[str, Any] = {"mode": "radial"}
        arrays = {"nodes": np.asarray(grid.nodes)}
    else:
        grid_spec = {"mode": "cartesian", "h": grid.h, "outer_radius": grid.outer_radius}
        arrays = {}
    meta = {
        "format": CHECKPOINT_FORMAT,
        "params": field.params.model_dump(mode="json"),
        "grid": grid_spec,
        "domain": field.domain.model_dump(mode="json"),
        "glue": field.glue.model_dump(mode="json") if field.glue is not None else None,
        "kind": field.kind,
        "ring_eps": field.ring_eps,
        "config": config_digest(config),
        "stage": stage,
        "stages": [record.model_dump(mode="json") for record in stages],
    }
    directory = os.path.dirname(os.path.abspath(path))
    tmp_path = f"{path}.tmp"
    try:
        os.makedirs(directory, exist_ok=True)
        with open(tmp_path, "wb") as handle:
            np.savez(handle, values=np.asarray(field.values, dtype=np.float64),
                     meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)
        os.replace(tmp_path, path)
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {str(e)}") from e
    logger.info(f"[+] Checkpoint written: {path} (stage {stage})")
    return path


def load_checkpoint(path: str) -> Tuple[SolutionField, Dict[str, Any]]:
    """
    Returns:
        (field, meta) where meta["stages"] holds StageRecord instances
    """
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            meta = json.loads(str(archive["meta"]))
            values = np.array(archive["values"])
            nodes = np.array(archive["nodes"]) if "nodes" in archive.files else None
    except (OSError, KeyError, ValueError) as e:
        raise CheckpointError(f"unreadable checkpoint {path}: {str(e)}") from e

    if meta.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {meta.get('format')} in {path}")
    try:
        params = ProblemParams(**meta["params"])
        domain = parse_domain(meta["domain"])
        if meta["grid"]["mode"] == "radial":
            grid = RadialGrid(n=params.n, nodes=nodes)
        else:
            grid = CartesianGrid(n=params.n, h=meta["grid"]["h"], outer_radius=meta["grid"]["outer_radius"],
                                 domain=domain)
        field = SolutionField(values=values, grid=grid, params=params, domain=domain,
                              glue=GlueParams(**meta["glue"]) if meta["glue"] else None,
                              kind=meta["kind"], ring_eps=meta["ring_eps"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"inconsistent checkpoint {path}: {str(e)}") from e
    meta["stages"] = [StageRecord(**record) for record in meta.get("stages", [])]
    return field, meta
