"""
Run configuration for boltzlab.

Configuration files are flat key-value files with dotted sections::

    kinetic.d = 2
    kinetic.gamma = -1.5
    kinetic.s = 0.3
    quadrature.theta_min = 1e-3
    family.kind = bi_maxwellian

They are read with python-dotenv's statement parser, so comments, quoting
and ``export`` prefixes behave as in ``.env`` files. Command-line flags
override file values; ``jobs`` falls back to the BOLTZLAB_JOBS environment
variable. The excluded endpoint ``kinetic.gamma = -d`` is run at
``-d + 0.01`` with a warning, and the resolved file records the value used.
"""

import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from dotenv import load_dotenv
from dotenv.parser import parse_stream

from .distributions import (
    Density,
    bi_maxwellian_family,
    heavy_tail_family,
    make_histogram_density,
    make_maxwellian,
    maxwellian_family,
    perturbation_family,
    read_histogram_csv,
    standard_family,
)
from .errors import ConfigError, KineticParamsError
from .io import format_float
from .kernel import KineticParams, admissible_gamma
from .quadrature import QuadratureSpec

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "resolved_config.env"
JOBS_ENV = "BOLTZLAB_JOBS"
REQUIRED_KEYS = ("kinetic.d", "kinetic.gamma", "kinetic.s")
FAMILY_KINDS = ("maxwellian", "bi_maxwellian", "heavy_tail", "product_perturbation", "standard", "histogram")


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _text(text: str) -> str:
    return text.strip()


SCHEMA: Dict[str, Callable[[str], Any]] = {
    "kinetic.d": _int,
    "kinetic.gamma": float,
    "kinetic.s": float,
    "kinetic.c_phi": float,
    "kinetic.c_b": float,
    "quadrature.velocity_radius": float,
    "quadrature.grid_nodes": _int,
    "quadrature.theta_min": float,
    "quadrature.grading_ratio": float,
    "quadrature.panel_order": _int,
    "quadrature.w_min_factor": float,
    "quadrature.direction_nodes": _int,
    "quadrature.mc_samples": _int,
    "quadrature.seed": _int,
    "quadrature.tol": float,
    "quadrature.max_subdivisions": _int,
    "quadrature.tail_tol": float,
    "run.jobs": _int,
    "run.output_dir": _text,
    "run.method": _text,
    "family.kind": _text,
    "family.path": _text,
    "family.separations": _floats,
    "family.mean": _floats,
    "family.temperature": float,
    "family.mass": float,
    "family.eps": _floats,
    "family.alpha": _floats,
    "verify.check": _text,
    "verify.sweep": _bool,
    "verify.seminorm": _bool,
    "verify.holder_radius": float,
    "verify.background": _text,
    "solver.n": _int,
    "solver.T": float,
    "solver.snapshots": _int,
    "solver.theta_min": float,
    "solver.vrel_floor": float,
    "solver.dt": float,
    "solver.holder_radius": float,
    "cone.v": _floats,
    "cone.n_dirs": _int,
    "cone.radii": _floats,
}


@dataclass
class RunConfig:
    """Fully resolved configuration of one command."""

    params: KineticParams
    spec: QuadratureSpec
    family_kind: str
    output_dir: Path
    values: Dict[str, Any] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    @property
    def method(self) -> str:
        method = self.values.get("run.method", "auto")
        return "monte_carlo" if method == "mc" else method


def read_config_file(path: Path) -> Dict[str, Tuple[str, int]]:
    """Raw `key -> (value, line)` pairs of a config file.

    Raises:
        ConfigError: For unreadable files, unparsable lines, keys without a
            value and unknown keys; the message names the line.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw: Dict[str, Tuple[str, int]] = {}
    with open(path) as fh:
        for binding in parse_stream(fh):
            line = binding.original.line
            if binding.error:
                raise ConfigError(f"{path} line {line}: cannot parse {binding.original.string.strip()!r}")
            if binding.key is None:
                continue
            if binding.value is None:
                raise ConfigError(f"{path} line {line}: {binding.key} has no value")
            if binding.key not in SCHEMA:
                raise ConfigError(f"{path} line {line}: unknown field {binding.key}")
            raw[binding.key] = (binding.value, line)
    return raw


def _jobs_fallback() -> Optional[str]:
    load_dotenv()
    return os.getenv(JOBS_ENV)


def _convert(key: str, text: str, where: str) -> Any:
    try:
        return SCHEMA[key](text)
    except ValueError as e:
        raise ConfigError(f"{where}: invalid value {text!r} for {key} ({str(e)})")


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    defaults: Optional[Mapping[str, Any]] = None,
    require_kinetic: bool = True,
) -> RunConfig:
    """Resolve defaults, then the config file, then command-line overrides.

    Args:
        path: Optional config file.
        overrides: Dotted keys set from flags; None values are ignored.
        defaults: Command-specific defaults below the file values.
        require_kinetic: Whether kinetic.d, kinetic.gamma and kinetic.s must be set.

    Raises:
        ConfigError: For malformed input, naming the field (and line).
    """
    values: Dict[str, Any] = dict(defaults or {})
    if path is not None:
        for key, (text, line) in read_config_file(path).items():
            values[key] = _convert(key, text, f"{path} line {line}")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in SCHEMA:
            raise ConfigError(f"unknown field {key}")
        values[key] = _convert(key, value, "command line") if isinstance(value, str) else value
    if "run.jobs" not in values:
        env_jobs = _jobs_fallback()
        values["run.jobs"] = _convert("run.jobs", env_jobs, JOBS_ENV) if env_jobs else 1

    missing = [k for k in REQUIRED_KEYS if k not in values]
    if require_kinetic and missing:
        flag = missing[0].split(".")[1]
        raise ConfigError(f"missing required field {missing[0]} (pass --{flag} or set it in the config file)")
    params = None
    if not missing:
        kinetic = {k.split(".")[1]: v for k, v in values.items() if k.startswith("kinetic.")}
        if "d" in kinetic and "gamma" in kinetic:
            kinetic["gamma"] = admissible_gamma(kinetic["d"], kinetic["gamma"])
        try:
            params = KineticParams(**kinetic)
        except KineticParamsError as e:
            raise ConfigError(f"invalid kinetic parameters: {str(e)}")

    spec_fields = {f.name for f in fields(QuadratureSpec)}
    quadrature = {k.split(".")[1]: v for k, v in values.items() if k.startswith("quadrature.")}
    quadrature = {k: v for k, v in quadrature.items() if k in spec_fields}
    spec = QuadratureSpec(jobs=int(values["run.jobs"]), **quadrature)

    kind = values.get("family.kind", "standard")
    if kind not in FAMILY_KINDS:
        raise ConfigError(f"family.kind must be one of {FAMILY_KINDS}, got {kind!r}")
    method = values.get("run.method", "auto")
    if method not in ("auto", "deterministic", "monte_carlo", "mc"):
        raise ConfigError(f"run.method must be auto, deterministic, monte_carlo or mc, got {method!r}")
    output_dir = Path(values.get("run.output_dir", "boltzlab_out"))
    values["run.output_dir"] = str(output_dir)
    return RunConfig(params=params, spec=spec, family_kind=kind, output_dir=output_dir, values=values)


def build_family(config: RunConfig, d: Optional[int] = None) -> List[Tuple[str, Density]]:
    """Family members named by the configuration.

    Raises:
        ConfigError: If the family is empty or misconfigured.
    """
    d = d if d is not None else (config.params.d if config.params is not None else None)
    if d is None:
        raise ConfigError("missing required field kinetic.d")
    kind = config.family_kind
    mass = config.get("family.mass", 1.0)
    if kind == "maxwellian":
        if "family.mean" in config.values or "family.temperature" in config.values:
            mean = config.get("family.mean", (0.0,))
            members = [("maxwellian", make_maxwellian(d, mean, config.get("family.temperature", 1.0), mass))]
        else:
            members = maxwellian_family(d)
    elif kind == "bi_maxwellian":
        separations = config.get("family.separations", (1.0, 2.0, 4.0, 8.0))
        members = bi_maxwellian_family(d, separations, config.get("family.temperature", 1.0))
    elif kind == "heavy_tail":
        members = heavy_tail_family(d, config.get("family.eps", (1.0, 0.75, 0.5)))
    elif kind == "product_perturbation":
        members = perturbation_family(d, config.get("family.alpha", (0.3, 0.6, -0.3, -0.6)))
    elif kind == "standard":
        members = standard_family(d)
    else:
        path = config.get("family.path")
        if not path:
            raise ConfigError("family.kind = histogram needs family.path")
        centers, counts, width = read_histogram_csv(Path(path))
        members = [(Path(path).stem, make_histogram_density(centers, counts, width, mass))]
    if not members:
        raise ConfigError(f"empty {kind} family")
    if any(f.d != d for _, f in members):
        raise ConfigError(f"family dimension does not match kinetic.d = {d}")
    return members


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_render(v) for v in value)
    return str(value)


def write_resolved_config(config: RunConfig, directory: Optional[Path] = None) -> Path:
    """Write the resolved configuration beside the outputs, readable by load_config."""
    directory = Path(directory or config.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    values = dict(config.values)
    for key, value in config.spec.to_dict().items():
        if key != "jobs" and value is not None:
            values[f"quadrature.{key}"] = value
    if config.params is not None:
        for key, value in config.params.to_dict().items():
            values[f"kinetic.{key}"] = value
    path = directory / RESOLVED_CONFIG_NAME
    with open(path, "w") as fh:
        for key in sorted(values):
            fh.write(f"{key} = {_render(values[key])}\n")
    logger.info(f"Wrote {path}")
    return path
