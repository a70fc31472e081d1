"""Run configuration parser - converts a YAML run config to validated models.

Every physical quantity is written ``"<value> <unit>"``. The ``model`` block
is in natural units (tag ``natural``), the ``experiment`` block in SI tags.
"""
from __future__ import annotations

from typing import Any, ClassVar, Literal
import math

import numpy as np
import yaml
from numpy.typing import NDArray
from pydantic import (
    BaseModel,
    ConfigDict,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_serializer,
    model_validator,
)

from t3k.core import units
from t3k.core.errors import ConfigError
from t3k.physics.feasibility import (
    FEASIBILITY_MARGIN,
    RB87_MASS_KG,
    ExperimentParams,
    ScanParameter,
)
from t3k.physics.hamiltonian import Truncation
from t3k.physics.kernel import KERNEL_J_MAX, POINTS_PER_WELL
from t3k.physics.modes import CavityProfile, ConstantProfile, Geometry, ModelParams
from t3k.physics.selfenergy import POLE_PROXIMITY, POLE_TOL, SERIES_TOL

SweepAxis = Literal["d", "ell", "Delta", "g0"]
ScanField = Literal["atom_mass", "rabi_coupling", "transition", "cavity_decay", "ell", "d"]

# heat-map export grid; kernel.csv holds export_points^2 rows
EXPORT_POINTS = 101
TO_HZ = 1.0 / (2.0 * math.pi)


class Quantity(BaseModel):
    """A tagged number; reads and writes as ``"<value> <unit>"``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dimension: ClassVar[str | None] = None

    value: float
    unit: str

    @model_validator(mode="before")
    @classmethod
    def parse_text(cls, data: Any) -> Any:
        if isinstance(data, str):
            value, unit = units.split_quantity(data)
            return {"value": value, "unit": unit}
        if isinstance(data, (int, float)):
            raise ValueError(f"missing unit tag: write '{data} <unit>'")
        return data

    @model_validator(mode="after")
    def check_unit(self) -> Quantity:
        if not math.isfinite(self.value):
            raise ValueError(f"value must be finite, got {self.value}")
        allowed = self.allowed_units()
        if self.unit not in allowed:
            raise ValueError(
                f"unit '{self.unit}' not allowed here. Valid units: {', '.join(allowed)}"
            )
        return self

    @classmethod
    def allowed_units(cls) -> list[str]:
        if cls.dimension is None:
            return [tag for table in units.UNITS.values() for tag in table]
        return units.valid_units(cls.dimension)

    @model_serializer
    def to_text(self) -> str:
        return f"{self.value!r} {self.unit}"

    @property
    def si_dimension(self) -> str:
        if self.dimension is not None and self.dimension != units.NATURAL:
            return self.dimension
        for dimension, table in units.UNITS.items():
            if self.unit in table:
                return dimension
        raise ValueError(f"'{self.unit}' is not an SI unit")

    @property
    def si(self) -> float:
        return units.to_si(self.value, self.unit, self.si_dimension)


class NaturalQuantity(Quantity):
    dimension: ClassVar[str | None] = units.NATURAL


class LengthQuantity(Quantity):
    dimension: ClassVar[str | None] = units.LENGTH


class MassQuantity(Quantity):
    dimension: ClassVar[str | None] = units.MASS


class FrequencyQuantity(Quantity):
    dimension: ClassVar[str | None] = units.FREQUENCY


def natural(value: float) -> NaturalQuantity:
    return NaturalQuantity(value=value, unit=units.NATURAL)


class Block(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ModelBlock(Block):
    """Model parameters in natural units; Delta is the closed-form detuning."""

    ell: NaturalQuantity
    d: NaturalQuantity
    m: NaturalQuantity
    Delta: NaturalQuantity
    g0: NaturalQuantity
    omega_c: NaturalQuantity = natural(10.0)
    Omega_a: NaturalQuantity = natural(0.0)
    hbar: NaturalQuantity = natural(1.0)
    cavity_profile: CavityProfile = ConstantProfile()

    @field_validator("ell", "d", "m", "hbar")
    @classmethod
    def check_positive(cls, v: NaturalQuantity) -> NaturalQuantity:
        if v.value <= 0:
            raise ValueError(f"must be positive, got {v.value!r}")
        return v

    @field_validator("g0", "omega_c")
    @classmethod
    def check_non_negative(cls, v: NaturalQuantity) -> NaturalQuantity:
        if v.value < 0:
            raise ValueError(f"must be non-negative, got {v.value!r}")
        return v

    def to_params(self) -> ModelParams:
        return ModelParams.from_detuning(
            Geometry(ell=self.ell.value, d=self.d.value),
            self.m.value,
            self.Delta.value,
            self.g0.value,
            omega_c=self.omega_c.value,
            Omega_a=self.Omega_a.value,
            hbar=self.hbar.value,
            cavity_profile=self.cavity_profile,
        )

    def with_value(self, axis: SweepAxis, value: float) -> ModelBlock:
        """Copy with one sweep axis set (re-validated)."""
        data = self.model_dump()
        data[axis] = f"{float(value)!r} {units.NATURAL}"
        return ModelBlock.model_validate(data)


class ConvergenceBlock(Block):
    """Truncation doubling for the spectrum splitting; off by default."""

    enabled: bool = False
    tol: PositiveFloat = 1e-8
    max_doublings: PositiveInt = 3


class TolerancesBlock(Block):
    series: PositiveFloat = SERIES_TOL
    pole: PositiveFloat = POLE_TOL
    proximity: PositiveFloat = POLE_PROXIMITY
    projection: PositiveFloat = 1e-8
    classification: PositiveFloat = 0.9


class TimeBlock(Block):
    start: NaturalQuantity = natural(0.0)
    stop: NaturalQuantity = natural(100.0)
    samples: PositiveInt = 1001

    def grid(self) -> NDArray[np.float64]:
        return np.linspace(self.start.value, self.stop.value, self.samples)


class SweepBlock(Block):
    axis: SweepAxis
    start: NaturalQuantity
    stop: NaturalQuantity
    points: PositiveInt = 11
    observable: str = "delta_e"

    def values(self) -> NDArray[np.float64]:
        return np.linspace(self.start.value, self.stop.value, self.points)


class KernelBlock(Block):
    points_per_well: PositiveInt = POINTS_PER_WELL
    j_max: PositiveInt = KERNEL_J_MAX
    export_points: PositiveInt = EXPORT_POINTS


class ScanBlock(Block):
    parameter: ScanField
    start: Quantity
    stop: Quantity
    points: PositiveInt = 11


class ExperimentBlock(Block):
    """SI experiment parameters; frequencies are ordinary (Hz) or angular (rad/s)."""

    atom_mass: MassQuantity = MassQuantity(value=RB87_MASS_KG, unit="kg")
    rabi_coupling: FrequencyQuantity
    transition: FrequencyQuantity
    cavity_decay: FrequencyQuantity
    ell: LengthQuantity
    d: LengthQuantity
    delta_sign: Literal["positive", "negative"]
    margin: PositiveFloat = FEASIBILITY_MARGIN
    scan: ScanBlock | None = None

    @field_validator("atom_mass", "rabi_coupling", "transition", "ell", "d")
    @classmethod
    def check_positive(cls, v: Quantity) -> Quantity:
        if v.value <= 0:
            raise ValueError(f"must be positive, got {v.value!r}")
        return v

    @field_validator("cavity_decay")
    @classmethod
    def check_non_negative(cls, v: Quantity) -> Quantity:
        if v.value < 0:
            raise ValueError(f"must be non-negative, got {v.value!r}")
        return v

    def to_params(self) -> ExperimentParams:
        """ExperimentParams in SI, frequencies back to ordinary Hz."""
        return ExperimentParams(
            atom_mass=self.atom_mass.si,
            rabi_coupling_hz=self.rabi_coupling.si * TO_HZ,
            transition_hz=self.transition.si * TO_HZ,
            cavity_decay_hz=self.cavity_decay.si * TO_HZ,
            ell=self.ell.si,
            d=self.d.si,
            delta_sign=self.delta_sign,
            margin=self.margin,
        )

    def scan_values(self) -> tuple[ScanParameter, list[float]]:
        """ExperimentParams field and its values for the scan block."""
        if self.scan is None:
            raise ValueError("experiment has no scan block")
        scan = self.scan
        axis = np.linspace(scan.start.si, scan.stop.si, scan.points)
        if scan.parameter in ("rabi_coupling", "transition", "cavity_decay"):
            field: ScanParameter = f"{scan.parameter}_hz"  # type: ignore[assignment]
            return field, [float(v) * TO_HZ for v in axis]
        return scan.parameter, [float(v) for v in axis]


class OutputBlock(Block):
    directory: str = "out"


class RunConfig(Block):
    """A complete run: the model plus task-specific blocks, defaults materialised."""

    model: ModelBlock | None = None
    truncation: Truncation = Truncation()
    convergence: ConvergenceBlock = ConvergenceBlock()
    rwa: bool = False
    tolerances: TolerancesBlock = TolerancesBlock()
    time: TimeBlock = TimeBlock()
    sweep: SweepBlock | None = None
    kernel: KernelBlock = KernelBlock()
    experiment: ExperimentBlock | None = None
    output: OutputBlock = OutputBlock()

    def require_model(self, subcommand: str) -> ModelBlock:
        """The model block, which every subcommand except feasibility needs.

        Raises:
            ConfigError: If the config has no model block
        """
        if self.model is None:
            raise ConfigError("model", f"required for the {subcommand} subcommand")
        return self.model


def load_document(text: str) -> dict[str, Any]:
    """yaml.safe_load, insisting on a mapping at the top level."""
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise TypeError(f"run config must be a mapping, got {type(data).__name__}")
    return data


def dump_config(config: RunConfig) -> str:
    """Render a RunConfig as YAML that reparses to an equal RunConfig."""
    return yaml.safe_dump(
        config.model_dump(mode="json"), sort_keys=False, default_flow_style=False
    )
