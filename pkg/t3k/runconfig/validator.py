"""Run configuration validator - cross-field checks and error paths."""
from __future__ import annotations

import pydantic

from t3k.core import units
from t3k.core.errors import ConfigError
from t3k.core.hooks import ObservableRegistry
from t3k.runconfig.parser import RunConfig

SCAN_DIMENSIONS = {
    "atom_mass": units.MASS,
    "rabi_coupling": units.FREQUENCY,
    "transition": units.FREQUENCY,
    "cavity_decay": units.FREQUENCY,
    "ell": units.LENGTH,
    "d": units.LENGTH,
}


def config_error_from(exc: pydantic.ValidationError) -> ConfigError:
    """First pydantic error as a ConfigError carrying the dotted key path."""
    error = exc.errors()[0]
    path = ".".join(str(part) for part in error["loc"])
    message = error["msg"]
    if error["type"] == "extra_forbidden":
        message = "unknown key"
    elif error["type"] == "missing":
        message = "required key is missing"
    return ConfigError(path, message)


class ConfigValidator:
    """Checks that need more than one field at a time."""

    def __init__(self, registry: ObservableRegistry):
        self.registry = registry

    def validate_time(self, config: RunConfig) -> None:
        time = config.time
        if time.start.value < 0:
            raise ConfigError("time.start", f"must be >= 0, got {time.start.value!r}")
        if time.stop.value < time.start.value:
            raise ConfigError(
                "time.stop",
                f"must not precede time.start ({time.stop.value!r} < {time.start.value!r})",
            )

    def validate_sweep(self, config: RunConfig) -> None:
        sweep = config.sweep
        if sweep is None:
            return
        if sweep.observable not in self.registry.names():
            raise ConfigError(
                "sweep.observable",
                f"unknown observable '{sweep.observable}'. "
                f"Registered: {', '.join(self.registry.names())}",
            )
        lowest = min(sweep.start.value, sweep.stop.value)
        if sweep.axis in ("d", "ell") and lowest <= 0:
            raise ConfigError("sweep.start", f"{sweep.axis} must stay positive, got {lowest!r}")
        if sweep.axis == "g0" and lowest < 0:
            raise ConfigError("sweep.start", f"g0 must stay non-negative, got {lowest!r}")

    def validate_kernel(self, config: RunConfig) -> None:
        kernel = config.kernel
        if kernel.points_per_well < 5 or (kernel.points_per_well - 1) % 4:
            raise ConfigError(
                "kernel.points_per_well",
                "points_per_well - 1 must be a positive multiple of 4, "
                f"got {kernel.points_per_well}",
            )
        if kernel.export_points < 3 or kernel.export_points % 2 == 0:
            raise ConfigError(
                "kernel.export_points", f"must be odd and >= 3, got {kernel.export_points}"
            )

    def validate_scan(self, config: RunConfig) -> None:
        if config.experiment is None or config.experiment.scan is None:
            return
        scan = config.experiment.scan
        expected = SCAN_DIMENSIONS[scan.parameter]
        for key, quantity in (("start", scan.start), ("stop", scan.stop)):
            path = f"experiment.scan.{key}"
            if quantity.unit not in units.valid_units(expected):
                raise ConfigError(
                    path,
                    f"unit '{quantity.unit}' is not a {expected} unit. "
                    f"Valid units: {', '.join(units.valid_units(expected))}",
                )
            if quantity.value < 0 or (quantity.value == 0 and scan.parameter != "cavity_decay"):
                raise ConfigError(
                    path, f"{scan.parameter} must be positive, got {quantity.value!r}"
                )

    def validate(self, config: RunConfig) -> None:
        """Run every cross-field check; the first failure raises ConfigError."""
        self.validate_time(config)
        self.validate_sweep(config)
        self.validate_kernel(config)
        self.validate_scan(config)
