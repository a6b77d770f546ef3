import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union, get_args, get_origin, get_type_hints

import yaml
from dotenv import load_dotenv

from erspin.constants import WORKING_FIELD, WORKING_FREQUENCY, WORKING_TEMPERATURE
from erspin.errors import ConfigError, ConfigParseError, ConfigValidationError
from erspin.powder.orientations import OrientationScheme
from erspin.powder.spectrum import SiteSpec, isotope_sites
from erspin.spin.system import SpinSystem, Tensor

load_dotenv()

logger = logging.getLogger(__name__)


class RuntimeSettings:
    """Process settings taken from the environment (.env is honoured)."""

    def __init__(self):
        self.log_level = os.getenv("ERSPIN_LOG_LEVEL", "INFO").upper()
        self.output_dir = os.getenv("ERSPIN_OUTPUT_DIR", "results")
        try:
            self.n_jobs = int(os.getenv("ERSPIN_N_JOBS", "1"))
        except ValueError:
            raise ConfigValidationError("ERSPIN_N_JOBS", "must be an integer")


# ---------------- SCHEMA ----------------

@dataclass(frozen=True)
class TensorBlock:
    """Principal values (x, y, z) and ZYZ Euler angles in degrees."""
    principal: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    euler_deg: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def to_tensor(self) -> Tensor:
        return Tensor(tuple(self.principal), tuple(math.radians(a) for a in self.euler_deg))


@dataclass(frozen=True)
class SiteBlock:
    """One crystallographic site; A and Q in Hz."""
    name: str = "C2"
    fraction: float = 0.75
    g: TensorBlock = field(default_factory=TensorBlock)
    A: TensorBlock = field(default_factory=TensorBlock)
    Q: TensorBlock = field(default_factory=TensorBlock)


# Illustrative tensors: the principal g values are the measured ones, the
# hyperfine and quadrupole values are placeholders of the right magnitude.
DEFAULT_SITES = (
    SiteBlock("C2", 0.75,
              TensorBlock((12.2, 4.78, 1.64)),
              TensorBlock((1270e6, 500e6, 170e6)),
              TensorBlock((-5e6, -5e6, 10e6))),
    SiteBlock("C3i", 0.25,
              TensorBlock((6.4, 6.4, 3.28)),
              TensorBlock((665e6, 665e6, 340e6)),
              TensorBlock((-5e6, -5e6, 10e6))),
)


@dataclass(frozen=True)
class SpinSystemBlock:
    sites: Tuple[SiteBlock, ...] = DEFAULT_SITES
    g_n: float = -0.1618
    electron_spin: float = 0.5
    nuclear_spin: float = 3.5
    isotope_abundance: float = 0.95


@dataclass(frozen=True)
class ExperimentBlock:
    f_probe: float = WORKING_FREQUENCY
    field_magnitude: float = WORKING_FIELD
    field_min: float = 0.0
    field_max: float = 0.8
    field_points: int = 801
    field_direction: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    temperature: float = WORKING_TEMPERATURE
    pulse_length: float = 1e-6
    min_separation: float = 10e-6
    bandwidth: Optional[float] = None
    b1: float = 6.3e-6

    @property
    def excitation_bandwidth(self) -> float:
        return self.bandwidth if self.bandwidth is not None else 1.0 / (math.pi * self.pulse_length)


@dataclass(frozen=True)
class SimulationBlock:
    orientations: int = 400
    orientation_scheme: str = OrientationScheme.GRID.value
    trials: int = 10_000
    bath_size: int = 10_000
    chunk_size: int = 1000
    flip_rate: float = 5.6
    gamma_sd: float = 64.5e3
    seed: Optional[int] = None


@dataclass(frozen=True)
class PathsBlock:
    out: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    spin_system: SpinSystemBlock = field(default_factory=SpinSystemBlock)
    experiment: ExperimentBlock = field(default_factory=ExperimentBlock)
    simulation: SimulationBlock = field(default_factory=SimulationBlock)
    paths: PathsBlock = field(default_factory=PathsBlock)

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(json.dumps(asdict(self)))

    def sha256(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def spin_systems(self) -> List[SpinSystem]:
        block = self.spin_system
        return [
            SpinSystem(site.g.to_tensor(), site.A.to_tensor(), site.Q.to_tensor(), block.g_n,
                       block.electron_spin, block.nuclear_spin, site.name)
            for site in block.sites
        ]

    def site_specs(self) -> List[SiteSpec]:
        """Sites weighted by their fractions and split into magnetic and I=0 isotopes."""
        specs = []
        for system, site in zip(self.spin_systems(), self.spin_system.sites):
            specs.extend(isotope_sites(SiteSpec(system, site.fraction), self.spin_system.isotope_abundance))
        return specs

    def site(self, name: Optional[str] = None) -> SpinSystem:
        systems = self.spin_systems()
        if name is None:
            return systems[0]
        for system in systems:
            if system.name == name:
                return system
        raise ConfigValidationError("spin_system.sites", f"no site named {name!r}")

    def require_seed(self, override: Optional[int] = None) -> int:
        seed = override if override is not None else self.simulation.seed
        if seed is None:
            raise ConfigValidationError("simulation.seed", "a seed is required for stochastic runs")
        return int(seed)


# ---------------- VALIDATION ----------------

POSITIVE_FIELDS = {
    "experiment.f_probe", "experiment.temperature", "experiment.pulse_length",
    "experiment.min_separation", "experiment.bandwidth", "experiment.field_points",
    "experiment.b1", "simulation.orientations", "simulation.trials", "simulation.bath_size",
    "simulation.chunk_size", "simulation.flip_rate", "simulation.gamma_sd",
}
NON_NEGATIVE_FIELDS = {"experiment.field_magnitude", "experiment.field_min", "simulation.seed"}
UNIT_INTERVAL_FIELDS = {"spin_system.isotope_abundance", "spin_system.sites.fraction"}


def _generic_path(path: str) -> str:
    return ".".join(part for part in path.split(".") if not part.isdigit())


def _check_range(path: str, value: Any) -> None:
    generic = _generic_path(path)
    if value is None or not isinstance(value, (int, float)):
        return
    if generic in POSITIVE_FIELDS and not value > 0:
        raise ConfigValidationError(path, f"must be positive, got {value}")
    if generic in NON_NEGATIVE_FIELDS and value < 0:
        raise ConfigValidationError(path, f"must be non-negative, got {value}")
    if generic in UNIT_INTERVAL_FIELDS and not 0.0 <= value <= 1.0:
        raise ConfigValidationError(path, f"must lie in [0, 1], got {value}")


def _coerce(path: str, hint: Any, value: Any) -> Any:
    origin = get_origin(hint)
    if origin is Union:
        options = [a for a in get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _coerce(path, options[0], value)
    if is_dataclass(hint):
        return _build(hint, value, path)
    if origin is tuple:
        args = get_args(hint)
        if not isinstance(value, (list, tuple)):
            raise ConfigValidationError(path, "must be a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(f"{path}.{k}", args[0], v) for k, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigValidationError(path, f"must hold {len(args)} values, got {len(value)}")
        return tuple(_coerce(f"{path}.{k}", a, v) for k, (a, v) in enumerate(zip(args, value)))
    if hint is bool or isinstance(value, bool):
        raise ConfigValidationError(path, f"expected a number or text, got {value!r}")
    try:
        if hint is int:
            number = float(value)
            if number != int(number):
                raise ValueError
            return int(number)
        if hint is float:
            return float(value)
        if hint is str:
            return str(value)
    except (TypeError, ValueError):
        raise ConfigValidationError(path, f"expected {hint.__name__}, got {value!r}")
    return value


def _build(cls, data: Any, prefix: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigValidationError(prefix or "<root>", "must be a mapping")
    hints = get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        name = f"{prefix}.{unknown[0]}" if prefix else str(unknown[0])
        raise ConfigValidationError(name, "unknown key")
    values = {}
    for name, raw in data.items():
        path = f"{prefix}.{name}" if prefix else name
        values[name] = _coerce(path, hints[name], raw)
        _check_range(path, values[name])
    return cls(**values)


def _validate(config: RunConfig) -> None:
    experiment = config.experiment
    if experiment.field_max <= experiment.field_min:
        raise ConfigValidationError("experiment.field_max", "must exceed experiment.field_min")
    if not any(experiment.field_direction):
        raise ConfigValidationError("experiment.field_direction", "must be a non-zero vector")
    if not config.spin_system.sites:
        raise ConfigValidationError("spin_system.sites", "at least one site is required")
    try:
        OrientationScheme(config.simulation.orientation_scheme)
    except ValueError:
        raise ConfigValidationError("simulation.orientation_scheme",
                                    f"must be one of {[s.value for s in OrientationScheme]}")
    fractions = sum(site.fraction for site in config.spin_system.sites)
    if abs(fractions - 1.0) > 1e-6:
        logger.warning(f"Site fractions do not sum to 1 | total={fractions:.6g}")


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """
    Raises:
        ConfigParseError: If the text is not valid YAML (with the 1-based line).
        ConfigValidationError: If a key is unknown or a value out of range (naming the field).
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigParseError(f"{source}: {getattr(e, 'problem', None) or e}", line) from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigParseError(f"{source}: top level must be a mapping", 1)
    config = _build(RunConfig, data, "")
    _validate(config)
    return config


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Loads and validates a run config; without a path the defaults are used."""
    if path is None:
        config = RunConfig()
        source = "<defaults>"
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        source = str(path)
        config = parse_config(path.read_text(), source)

    logger.info(
        f"Config loaded | source={source} | sha256={config.sha256()[:12]}\n"
        + yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=None)
    )
    return config
