"""Parameter sweeps over one model axis.

Points are independent, so they are farmed out with joblib and reassembled
in axis order. A point that fails becomes a flagged row (status
``error:<ExceptionName>``, values nan); the sweep itself never aborts on
physics errors.
"""
from __future__ import annotations

from dataclasses import dataclass
import logging
import math

from joblib import Parallel, delayed

from t3k.core.errors import ConfigError, T3KError
from t3k.core.hooks import observable_registry
from t3k.runconfig import RunConfig

logger = logging.getLogger(__name__)

STATUS_OK = "ok"


@dataclass(frozen=True)
class SweepPoint:
    value: float
    record: dict[str, float | int]
    status: str

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


@dataclass(frozen=True)
class SweepResult:
    """One row per axis value, in axis order."""

    axis: str
    observable: str
    columns: tuple[str, ...]
    points: tuple[SweepPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> list[float]:
        return [p.value for p in self.points]

    @property
    def converged(self) -> list[bool]:
        return [p.ok for p in self.points]

    def column(self, name: str) -> list[float | int]:
        return [p.record[name] for p in self.points]

    def csv_columns(self) -> tuple[str, ...]:
        return (self.axis, *self.columns, "status")

    def rows(self) -> list[tuple[float | int | str, ...]]:
        return [(p.value, *(p.record[c] for c in self.columns), p.status) for p in self.points]


def evaluate_point(config: RunConfig, value: float) -> SweepPoint:
    """Evaluate the configured observable at one axis value."""
    assert config.sweep is not None and config.model is not None
    obs = observable_registry.get(config.sweep.observable)
    failed = {c: math.nan for c in obs.columns}
    try:
        params = config.model.with_value(config.sweep.axis, value).to_params()
        record = obs(params, config)
    except (T3KError, ValueError, ArithmeticError) as e:
        logger.info(f"Sweep point {config.sweep.axis}={value!r} failed: {type(e).__name__}: {e}")
        return SweepPoint(value, failed, f"error:{type(e).__name__}")
    if not all(math.isfinite(float(v)) for v in record.values()):
        return SweepPoint(value, failed, "error:NonFinite")
    return SweepPoint(value, record, STATUS_OK)


def sweep(config: RunConfig, n_jobs: int = 1) -> SweepResult:
    """Evaluate ``config.sweep.observable`` over the sweep axis.

    Raises:
        ConfigError: If the config has no sweep or no model block
    """
    if config.sweep is None:
        raise ConfigError("sweep", "required for the sweep subcommand")
    config.require_model("sweep")
    block = config.sweep
    obs = observable_registry.get(block.observable)
    values = [float(v) for v in block.values()]
    logger.info(
        f"Sweeping {block.observable} over {block.axis}: {len(values)} points, n_jobs={n_jobs}"
    )

    if n_jobs == 1:
        points = [evaluate_point(config, v) for v in values]
    else:
        with Parallel(n_jobs=n_jobs) as parallel:
            points = parallel(delayed(evaluate_point)(config, v) for v in values)

    failed = sum(1 for p in points if not p.ok)
    if failed:
        logger.warning(f"{failed} of {len(points)} sweep points were flagged")
    return SweepResult(
        axis=block.axis, observable=block.observable, columns=obs.columns, points=tuple(points)
    )
