"""Scenario files: strict TOML parsing, bundled lookup and CLI overrides."""

import dataclasses
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from safe_admittance.dynamics import SingleLinkModel, TwoLinkModel
from safe_admittance.errors import ConfigRejected

CONTROLLERS = ("proposed", "invariance_baseline")
MODEL_KINDS = {"two_link": TwoLinkModel, "single_link": SingleLinkModel}
SCENARIO_SUFFIX = ".cfg"


@dataclass(frozen=True)
class SimulationSettings:
    dt: float
    duration: float


@dataclass(frozen=True)
class TaskSettings:
    desired_pose: tuple[float, ...]


@dataclass(frozen=True)
class AdmittanceSettings:
    mass: tuple[float, ...]
    damping: tuple[float, ...]
    stiffness: tuple[float, ...]


@dataclass(frozen=True)
class ReferenceSettings:
    compliant_stiffness: tuple[float, ...]
    compliant_damping: tuple[float, ...]
    safety_stiffness: tuple[float, ...]
    safety_damping: tuple[float, ...]
    use_admittance: bool = False


@dataclass(frozen=True)
class ConstraintSettings:
    offset: tuple[float, ...]
    amplitude: tuple[float, ...] | None = None
    frequency: tuple[float, ...] | None = None
    hysteresis_fraction: float = 0.02
    dwell: float = 0.05
    velocity_bound: float = 0.0


@dataclass(frozen=True)
class EnvelopeSettings:
    D: float
    dbar: float | None = None


@dataclass(frozen=True)
class AdaptationSettings:
    rates: tuple[float, ...]
    offset: float = 0.0
    recorded_P: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class ForceSettings:
    amplitude: tuple[float, ...]
    bound: float | tuple[float, ...]
    breakpoints: tuple[float, ...] = (10.0, 11.0, 20.0, 21.0)
    smooth: bool = False


@dataclass(frozen=True)
class DisturbanceSettings:
    enabled: bool = False
    amplitude: float = 0.1
    frequency: float = 50.0
    noise: float = 0.05
    start: float = 15.0
    stop: float = 25.0


@dataclass(frozen=True)
class ObserverSettings:
    enabled: bool = False
    gain: float = 50.0
    velocity_noise: float = 0.0


@dataclass(frozen=True)
class BaselineSettings:
    gamma: float = -5.0
    horizon: float = 0.005


@dataclass(frozen=True)
class MetricsSettings:
    channel: str = "1"


REQUIRED_SECTIONS: dict[str, type] = {
    "simulation": SimulationSettings,
    "task": TaskSettings,
    "admittance": AdmittanceSettings,
    "reference": ReferenceSettings,
    "constraints": ConstraintSettings,
    "envelope": EnvelopeSettings,
    "adaptation": AdaptationSettings,
    "force": ForceSettings,
}
OPTIONAL_SECTIONS: dict[str, type] = {
    "disturbance": DisturbanceSettings,
    "observer": ObserverSettings,
    "baseline": BaselineSettings,
    "metrics": MetricsSettings,
}
TOP_LEVEL_KEYS = {"name", "controller", "seed", "model"}


@dataclass(frozen=True)
class Scenario:
    """A fully validated scenario description."""

    name: str
    controller: str
    seed: int | None
    model: TwoLinkModel | SingleLinkModel
    simulation: SimulationSettings
    task: TaskSettings
    admittance: AdmittanceSettings
    reference: ReferenceSettings
    constraints: ConstraintSettings
    envelope: EnvelopeSettings
    adaptation: AdaptationSettings
    force: ForceSettings
    disturbance: DisturbanceSettings = field(default_factory=DisturbanceSettings)
    observer: ObserverSettings = field(default_factory=ObserverSettings)
    baseline: BaselineSettings = field(default_factory=BaselineSettings)
    metrics: MetricsSettings = field(default_factory=MetricsSettings)
    source: Path | None = None

    @property
    def dim(self) -> int:
        return len(self.task.desired_pose)

    @property
    def is_single_link(self) -> bool:
        return isinstance(self.model, SingleLinkModel)

    @property
    def steps(self) -> int:
        return int(round(self.simulation.duration / self.simulation.dt))

    def with_overrides(
        self,
        seed: int | None = None,
        dt: float | None = None,
        duration: float | None = None,
        controller: str | None = None,
    ) -> "Scenario":
        """Copy with command-line overrides applied and re-validated."""
        sim = self.simulation
        if dt is not None or duration is not None:
            sim = dataclasses.replace(
                sim,
                dt=sim.dt if dt is None else dt,
                duration=sim.duration if duration is None else duration,
            )
        updated = dataclasses.replace(
            self,
            simulation=sim,
            seed=self.seed if seed is None else seed,
            controller=self.controller if controller is None else controller,
        )
        validate_scenario(updated)
        return updated


def _coerce(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_coerce(v) for v in value)
    if isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _build(cls: type, section: str, table: Any) -> Any:
    """Instantiate a settings dataclass, rejecting unknown or missing keys."""
    if not isinstance(table, dict):
        raise ConfigRejected(f"'{section}' must be a table")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigRejected(f"unknown key '{section}.{unknown[0]}'")
    required = [
        f.name
        for f in dataclasses.fields(cls)
        if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
    ]
    missing = [name for name in required if name not in table]
    if missing:
        raise ConfigRejected(f"missing key '{section}.{missing[0]}'")
    try:
        return cls(**{key: _coerce(value) for key, value in table.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigRejected(f"invalid '{section}' section: {exc}") from exc


def _check_length(section: str, key: str, values: tuple | None, m: int) -> None:
    if values is None:
        return
    if not isinstance(values, tuple):
        raise ConfigRejected(f"'{section}.{key}' must be a list with {m} entries")
    if len(values) != m:
        raise ConfigRejected(f"'{section}.{key}' needs {m} entries, got {len(values)}")


def validate_scenario(scenario: Scenario) -> None:
    """Cross-section checks that a single section cannot express."""
    m = scenario.dim
    expected = 1 if scenario.is_single_link else 2
    if m != expected:
        raise ConfigRejected(f"'task.desired_pose' needs {expected} entries for this model")
    for section, keys in (
        ("admittance", ("mass", "damping", "stiffness")),
        (
            "reference",
            ("compliant_stiffness", "compliant_damping", "safety_stiffness", "safety_damping"),
        ),
        ("constraints", ("offset", "amplitude", "frequency")),
        ("adaptation", ("rates",)),
        ("force", ("amplitude",)),
    ):
        settings = getattr(scenario, section)
        for key in keys:
            _check_length(section, key, getattr(settings, key), m)
    if isinstance(scenario.force.bound, tuple):
        _check_length("force", "bound", scenario.force.bound, m)

    sim = scenario.simulation
    if not sim.dt > 0 or not sim.duration > sim.dt:
        raise ConfigRejected("simulation needs dt > 0 and duration > dt")
    if scenario.controller not in CONTROLLERS:
        raise ConfigRejected(
            f"controller must be one of {', '.join(CONTROLLERS)}, got '{scenario.controller}'"
        )
    if len(scenario.force.breakpoints) != 4:
        raise ConfigRejected("'force.breakpoints' needs exactly 4 entries")
    if min(np.atleast_1d(scenario.force.bound)) < 0 or scenario.envelope.D < 0:
        raise ConfigRejected("force bound and envelope D must be nonnegative")
    if scenario.observer.enabled and not scenario.is_single_link:
        raise ConfigRejected("the residual observer is only available for the single-link model")
    if scenario.baseline.gamma >= 0 or scenario.baseline.horizon <= 0:
        raise ConfigRejected("baseline needs gamma < 0 and horizon > 0")
    valid_channels = {str(i + 1) for i in range(m)} | {"sum", "norm"}
    if scenario.metrics.channel not in valid_channels:
        raise ConfigRejected(f"'metrics.channel' must be one of {sorted(valid_channels)}")
    needs_seed = scenario.disturbance.enabled or (
        scenario.observer.enabled and scenario.observer.velocity_noise > 0
    )
    if needs_seed and scenario.seed is None:
        raise ConfigRejected("'seed' is required when the scenario draws random numbers")


def parse_scenario(text: str, source: Path | None = None) -> Scenario:
    """Parse scenario TOML text.

    Raises:
        ConfigRejected: on syntax errors, unknown or missing keys and failed checks.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigRejected(f"cannot parse scenario: {exc}") from exc

    unknown = sorted(set(raw) - TOP_LEVEL_KEYS - set(REQUIRED_SECTIONS) - set(OPTIONAL_SECTIONS))
    if unknown:
        raise ConfigRejected(f"unknown key '{unknown[0]}'")
    for key in ("name", "model", *REQUIRED_SECTIONS):
        if key not in raw:
            raise ConfigRejected(f"missing section or key '{key}'")

    model_table = dict(raw["model"])
    kind = model_table.pop("kind", None)
    if kind not in MODEL_KINDS:
        raise ConfigRejected(f"'model.kind' must be one of {', '.join(MODEL_KINDS)}")

    seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigRejected("'seed' must be an integer")

    sections = {name: _build(cls, name, raw[name]) for name, cls in REQUIRED_SECTIONS.items()}
    sections |= {
        name: _build(cls, name, raw[name])
        for name, cls in OPTIONAL_SECTIONS.items()
        if name in raw
    }
    scenario = Scenario(
        name=str(raw["name"]),
        controller=str(raw.get("controller", "proposed")),
        seed=seed,
        model=_build(MODEL_KINDS[kind], "model", model_table),
        source=source,
        **sections,
    )
    validate_scenario(scenario)
    return scenario


def bundled_names() -> list[str]:
    root = resources.files("safe_admittance") / "scenarios"
    return sorted(
        entry.name.removesuffix(SCENARIO_SUFFIX)
        for entry in root.iterdir()
        if entry.name.endswith(SCENARIO_SUFFIX)
    )


def bundled_text(name: str) -> str:
    entry = resources.files("safe_admittance") / "scenarios" / f"{name}{SCENARIO_SUFFIX}"
    if not entry.is_file():
        raise ConfigRejected(
            f"no scenario file or bundled scenario named '{name}' "
            f"(bundled: {', '.join(bundled_names())})"
        )
    return entry.read_text()


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Load a scenario from a file path or a bundled scenario name."""
    path = Path(path_or_name)
    if path.is_file():
        return parse_scenario(path.read_text(), source=path)
    return parse_scenario(bundled_text(path.name.removesuffix(SCENARIO_SUFFIX)))


def render_template(name: str, new_name: str, seed: int) -> str:
    """Bundled scenario text with its name and seed replaced."""
    text = bundled_text(name)
    text = re.sub(r'^name = ".*"$', f'name = "{new_name}"', text, count=1, flags=re.M)
    if re.search(r"^seed = ", text, flags=re.M):
        return re.sub(r"^seed = .*$", f"seed = {seed}", text, count=1, flags=re.M)
    return text.replace("\n", f"\nseed = {seed}\n", 1)
