"""SI-units experiment-design calculator.

Frequencies named ``*_hz`` are ordinary frequencies (cycles per second); the
physics runs on the angular values 2 pi f. Every report field states which of
the two it carries.
"""
from __future__ import annotations

from collections.abc import Iterable
from typing import Literal
import logging
import math

from pydantic import BaseModel, ConfigDict, NonNegativeFloat, PositiveFloat
from scipy import constants

from t3k.core.errors import PoleError
from t3k.physics.selfenergy import closed_form_splitting, epsilon_scale, xi_length

logger = logging.getLogger(__name__)

RB87_MASS_KG = 86.909180527 * constants.atomic_mass
FEASIBILITY_MARGIN = 10.0
TWO_PI = 2.0 * math.pi

ScanParameter = Literal[
    "atom_mass", "rabi_coupling_hz", "transition_hz", "cavity_decay_hz", "ell", "d"
]


class ExperimentParams(BaseModel):
    """Experimental parameters in SI units.

    ``rabi_coupling_hz`` is Omega/2pi (g~0 = 2 pi value), ``transition_hz`` is
    |Delta|/2pi and ``cavity_decay_hz`` is kappa/2pi.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    atom_mass: PositiveFloat = RB87_MASS_KG
    rabi_coupling_hz: PositiveFloat
    transition_hz: PositiveFloat
    cavity_decay_hz: NonNegativeFloat
    ell: PositiveFloat
    d: PositiveFloat
    delta_sign: Literal["positive", "negative"]
    hbar: PositiveFloat = constants.hbar
    margin: PositiveFloat = FEASIBILITY_MARGIN

    @property
    def g_tilde0(self) -> float:
        return TWO_PI * self.rabi_coupling_hz

    @property
    def Delta(self) -> float:
        """Signed angular detuning."""
        magnitude = TWO_PI * self.transition_hz
        return magnitude if self.delta_sign == "positive" else -magnitude

    @property
    def kappa(self) -> float:
        return TWO_PI * self.cavity_decay_hz


class FeasibilityReport(BaseModel):
    """Verdict plus every intermediate value, rad/s and Hz side by side."""

    model_config = ConfigDict(frozen=True)

    xi_m: float
    epsilon_over_hbar: float
    epsilon_over_hbar_hz: float
    delta_e_over_hbar: float | None
    delta_e_over_hbar_hz: float | None
    kappa: float
    rate_ratio: float | None
    margin: float
    d_max_m: float | None
    feasible: bool
    branch: Literal["positive", "negative"]
    notes: list[str]


def characteristic_scales(p: ExperimentParams) -> tuple[float, float]:
    """(xi in m, epsilon/hbar in rad/s); epsilon always uses |Delta|."""
    xi = xi_length(p.atom_mass, p.Delta, p.hbar)
    epsilon = epsilon_scale(p.g_tilde0, abs(p.Delta), xi, p.ell, hbar=1.0)
    return xi, epsilon


def max_wall_thickness(xi_m: float, epsilon_over_hbar: float, kappa: float) -> float:
    """xi ln(epsilon / hbar kappa), signed; +inf when kappa = 0.

    Zero or negative means no barrier is thin enough.
    """
    if xi_m <= 0:
        raise ValueError(f"xi must be positive, got {xi_m}")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if kappa == 0:
        return math.inf
    if epsilon_over_hbar <= 0:
        return -math.inf
    return xi_m * math.log(epsilon_over_hbar / kappa)


def feasibility_report(p: ExperimentParams) -> FeasibilityReport:
    """Scales, the wall bound and the closed-form splitting for the chosen branch.

    A negative-detuning configuration sitting on a csc pole is reported with a
    "resonance proximity" note and no splitting, never raised.
    """
    xi, epsilon = characteristic_scales(p)
    d_max = max_wall_thickness(xi, epsilon, p.kappa)
    notes: list[str] = []

    delta_e: float | None
    try:
        result = closed_form_splitting(p.g_tilde0, p.atom_mass, p.ell, p.d, p.Delta, p.hbar)
    except PoleError as e:
        logger.warning(f"Feasibility at a pole: {e}")
        delta_e = None
        notes.append(f"resonance proximity: {e}")
    else:
        delta_e = result.delta_e / p.hbar
        notes.extend(result.warnings)

    rate = None if delta_e is None else abs(delta_e)
    rate_ratio = None if rate is None or p.kappa == 0 else rate / p.kappa
    feasible = (
        rate is not None
        and rate > p.kappa
        and rate >= p.margin * p.kappa
        and 0.0 < p.d < d_max
    )

    if p.kappa == 0:
        notes.append("kappa = 0: the wall-thickness bound is unbounded")
    elif d_max <= 0:
        notes.append(
            f"epsilon/hbar = {epsilon:.3g} rad/s does not exceed kappa = {p.kappa:.3g} rad/s: "
            "no wall is thin enough on the exponential branch"
        )
    elif p.d >= d_max:
        notes.append(f"d = {p.d:.3g} m exceeds d_max = {d_max:.3g} m")
    if rate_ratio is not None:
        verdict = "above" if rate_ratio >= p.margin else "below"
        notes.append(
            f"splitting rate is {rate_ratio:.3g} x the cavity decay rate, "
            f"{verdict} the margin {p.margin:g}"
        )
    if p.delta_sign == "negative":
        notes.append("negative detuning: the splitting is not exponentially suppressed in d")

    to_hz = 1.0 / TWO_PI
    return FeasibilityReport(
        xi_m=xi,
        epsilon_over_hbar=epsilon,
        epsilon_over_hbar_hz=epsilon * to_hz,
        delta_e_over_hbar=delta_e,
        delta_e_over_hbar_hz=None if delta_e is None else delta_e * to_hz,
        kappa=p.kappa,
        rate_ratio=rate_ratio,
        margin=p.margin,
        d_max_m=None if math.isinf(d_max) and d_max > 0 else d_max,
        feasible=bool(feasible),
        branch=p.delta_sign,
        notes=notes,
    )


def feasibility_scan(
    base: ExperimentParams, parameter: ScanParameter, values: Iterable[float]
) -> list[tuple[float, FeasibilityReport]]:
    """Reports for ``base`` with one field replaced by each value, in order."""
    rows = []
    for value in values:
        data = base.model_dump()
        data[parameter] = value
        rows.append((float(value), feasibility_report(ExperimentParams.model_validate(data))))
    return rows
