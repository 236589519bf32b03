"""
INI run configs: one section per RunConfig block, lists written as
comma-separated values.

    [problem]
    n = 3
    k = 1
    r0 = 1.0
    R0 = 4.0

    [schedules]
    eps = 0.1, 0.05
    R = 600, 1200
"""
import configparser
import logging
from typing import Any, Dict, get_args, get_origin

from pydantic import BaseModel, ValidationError

from exterior_hessian.errors import ConfigurationError
from .types import RunConfig

logger = logging.getLogger(__name__)


def _is_list(annotation: Any) -> bool:
    if get_origin(annotation) is list:
        return True
    return any(_is_list(arg) for arg in get_args(annotation))


def _block_types() -> Dict[str, type]:
    return {name: field.annotation for name, field in RunConfig.model_fields.items()}


def _section_data(section: str, items: Dict[str, str]) -> Dict[str, Any]:
    block = _block_types().get(section)
    data: Dict[str, Any] = {}
    for key, raw in items.items():
        value = raw.strip()
        field = block.model_fields.get(key) if block is not None else None
        if field is not None and _is_list(field.annotation):
            data[key] = [part.strip() for part in value.split(",") if part.strip()]
        elif value == "":
            data[key] = None
        else:
            data[key] = value
    return data


def _field_name(error: Dict[str, Any]) -> str:
    context = error.get("ctx") or {}
    if "field" in context:
        return context["field"]
    return ".".join(str(part) for part in error["loc"] if not isinstance(part, int)) or "config"


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate an INI run config.

    Raises:
        ConfigurationError: syntax error, unknown section or key, or failed validation;
            `field` is the dotted "section.key" of the first offending entry
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigurationError(f"unreadable config: {str(e)}") from e

    known = _block_types()
    data: Dict[str, Any] = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigurationError(f"unknown section [{section}]", field=section)
        data[section] = _section_data(section, dict(parser.items(section)))

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        raise ConfigurationError(error["msg"], field=_field_name(error)) from e


def load_config(path: str) -> RunConfig:
    """Read a config file; OSError propagates"""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    config = parse_config(text)
    logger.info(f"[*] Loaded run config {path}: n={config.problem.n}, k={config.problem.k}, "
                f"mode={config.solver.mode}")
    return config


def _format(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """INI text that parses back to an equal RunConfig; unset optional entries are omitted"""
    lines = []
    for name in RunConfig.model_fields:
        block: BaseModel = getattr(config, name)
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {_format(v)}" for key, v in block.model_dump().items() if v is not None)
        lines.append("")
    return "\n".join(lines)
