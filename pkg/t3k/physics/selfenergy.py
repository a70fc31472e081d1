"""Second-order self-energies Pi_SS, Pi_AA and the level splitting delta E.

The series route sums the virtual |b, j, 1> contributions with exact
denominators delta_j = Delta + hbar pi^2 j^2 / (2 m (2l + d)^2). Odd j couple
only to the symmetric a-combination and even j only to the antisymmetric
one. Summing that alternating series in closed form gives the sinh^2 csch
expression for Delta > 0 and, with xi -> i xi, the sin^2 csc expression
for Delta < 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal
import logging
import math

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict

from t3k.core.errors import ConvergenceError, PoleError, ProfileError, ResonanceError
from t3k.physics.modes import ModelParams, coupling_table

logger = logging.getLogger(__name__)

SERIES_TOL = 1e-12
MAX_TERMS = 2_000_000
# |delta_j| below this fraction of |Delta| counts as a denominator crossing
RESONANCE_FRACTION = 1e-6
POLE_TOL = 1e-6
POLE_PROXIMITY = 1e-3
# l/xi above which sinh^2(l/xi) csch((2l+d)/xi) is evaluated in log space
LOG_SPACE_ABOVE = 30.0
REMOVABLE_TOL = 1e-9


@dataclass(frozen=True)
class SelfEnergyResult:
    """Pi_SS, Pi_AA and delta E = Pi_AA - Pi_SS with series metadata."""

    pi_ss: float
    pi_aa: float
    j_used: int
    tail_estimate: float
    converged: bool
    delta_e: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta_e", self.pi_aa - self.pi_ss)


class ScaleParams(BaseModel):
    """Characteristic scales xi, Delta (signed) and epsilon."""

    model_config = ConfigDict(frozen=True)

    xi: float
    Delta: float
    epsilon: float


@dataclass(frozen=True)
class ClosedFormResult:
    """Closed-form delta E with diagnostics.

    ``pole_distance`` is |(2l+d)/xi - k pi| for the nearest k >= 1 on the
    negative-detuning branch and None on the positive one.
    """

    delta_e: float
    branch: Literal["positive", "negative"]
    pole_distance: float | None = None
    pole_order: int | None = None
    warnings: tuple[str, ...] = ()


def xi_length(m: float, Delta: float, hbar: float = 1.0) -> float:
    """sqrt(hbar / (2 m |Delta|)); identical for Delta and -Delta."""
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    if Delta == 0:
        raise ResonanceError("Delta = 0: xi diverges on resonance")
    return math.sqrt(hbar / (2.0 * m * abs(Delta)))


def _require_constant(params: ModelParams) -> None:
    if not params.is_constant_profile:
        raise ProfileError("self-energy series and closed forms need a constant cavity profile")


def _check_denominators(params: ModelParams, delta: NDArray[np.float64]) -> None:
    Delta = params.Delta
    if Delta == 0:
        raise ResonanceError("Delta = 0: the virtual states are resonant")
    close = np.flatnonzero(np.abs(delta) < RESONANCE_FRACTION * abs(Delta))
    if close.size:
        j = int(close[0]) + 1
        raise ResonanceError(
            f"near-resonance: delta_{j} = {delta[j - 1]:.3e} is below "
            f"{RESONANCE_FRACTION:g} |Delta|"
        )


def series_terms(params: ModelParams, j_max: int) -> NDArray[np.float64]:
    """Signed per-mode contributions 2 hbar g_{Lj}^2 / delta_j, j = 1..j_max."""
    _require_constant(params)
    g_left, _ = coupling_table(params, j_max)
    delta = params.detuning(np.arange(1, j_max + 1))
    _check_denominators(params, delta)
    return 2.0 * params.hbar * g_left**2 / delta


def _tail_constant(params: ModelParams) -> tuple[float, int]:
    """C with term_j <= C / j^6 for j > J_valid, and J_valid.

    Uses |sin| <= 1, k_j^2 - k_1^2 >= k_j^2 / 2 and |delta_j| >= hbar k_j^2 / (4 m),
    both true once k_j^2 >= 2 max(k_1^2, 2 m |Delta| / hbar).
    """
    geometry = params.geometry
    ell, lb = geometry.ell, geometry.box_width
    k1_sq = (math.pi / ell) ** 2
    kappa_sq = 2.0 * params.m * abs(params.Delta) / params.hbar
    j_valid = math.ceil(lb / math.pi * math.sqrt(2.0 * max(k1_sq, kappa_sq)))
    g_sq = params.g_tilde0**2
    constant = 128.0 * params.m * g_sq * k1_sq * lb**5 / (ell * math.pi**6)
    return constant, max(j_valid, 1)


def _tail_bound(constant: float, j: int) -> float:
    """sum_{i > j} C / i^6 <= C / (5 j^5)."""
    return constant / (5.0 * j**5)


def pt2_series(
    params: ModelParams, tol: float = SERIES_TOL, j_max: int | None = None
) -> SelfEnergyResult:
    """Pi_SS = -sum_{j odd} 2 hbar g_{Lj}^2 / delta_j, Pi_AA = -sum_{j even} (same).

    Without ``j_max`` the number of terms is chosen so the analytic tail bound
    drops below ``tol``; with ``j_max`` the sum stops there and the tail bound
    is only reported.

    Raises:
        ResonanceError: If some |delta_j| < 1e-6 |Delta|
        ConvergenceError: If more than MAX_TERMS terms would be needed
    """
    _require_constant(params)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    constant, j_valid = _tail_constant(params)
    if j_max is None:
        needed = math.ceil((constant / (5.0 * tol)) ** 0.2) if constant > 0 else 1
        j_used = max(j_valid, needed, 1)
        if j_used > MAX_TERMS:
            raise ConvergenceError(
                f"pt2 series would need {j_used} terms to reach tol={tol:g} (limit {MAX_TERMS})"
            )
    else:
        j_used = j_max

    terms = series_terms(params, j_used)
    pi_ss = -float(np.sum(terms[0::2]))
    pi_aa = -float(np.sum(terms[1::2]))
    tail = _tail_bound(constant, j_used) if j_used >= j_valid else math.inf
    converged = tail < tol
    logger.debug(f"pt2 series: j_used={j_used} tail={tail:.3e} converged={converged}")
    return SelfEnergyResult(
        pi_ss=pi_ss, pi_aa=pi_aa, j_used=j_used, tail_estimate=tail, converged=converged
    )


def self_energy_matrix(
    params: ModelParams, j_max: int, basis: Literal["SA", "LR"] = "SA"
) -> NDArray[np.float64]:
    """2x2 Pi_{n n'} = -sum_j hbar g_{nj} g_{n'j} / delta_j in the S/A or L/R basis."""
    _require_constant(params)
    g_left, g_right = coupling_table(params, j_max)
    delta = params.detuning(np.arange(1, j_max + 1))
    _check_denominators(params, delta)
    if basis == "SA":
        root = math.sqrt(2.0)
        g = np.vstack([(g_left + g_right) / root, (g_left - g_right) / root])
    elif basis == "LR":
        g = np.vstack([g_left, g_right])
    else:
        raise ValueError(f"basis must be 'SA' or 'LR', got {basis!r}")
    return -params.hbar * (g / delta) @ g.T


def _log_sinh(x: float) -> float:
    return x - math.log(2.0) + math.log1p(-math.exp(-2.0 * x))


def closed_form_splitting(
    g_tilde0: float,
    m: float,
    ell: float,
    d: float,
    Delta: float,
    hbar: float = 1.0,
    *,
    pole_tol: float = POLE_TOL,
    proximity: float = POLE_PROXIMITY,
) -> ClosedFormResult:
    """Closed-form delta E for either detuning sign, in any consistent units.

    Delta > 0: 8 g^2 m xi l sinh^2(l/xi) csch((2l+d)/xi) / (pi^2 (1 + l^2/(xi^2 pi^2))^2).
    Delta < 0: 8 g^2 m xi l sin^2(l/xi) csc((2l+d)/xi) / (pi^2 (1 - l^2/(xi^2 pi^2))^2).

    Raises:
        ResonanceError: If Delta == 0
        PoleError: If Delta < 0 and (2l+d)/xi is within ``pole_tol`` of k pi
    """
    xi = xi_length(m, Delta, hbar)
    a = ell / xi
    b = (2.0 * ell + d) / xi
    prefactor = 8.0 * g_tilde0**2 * m * xi * ell
    if prefactor == 0.0:
        branch: Literal["positive", "negative"] = "positive" if Delta > 0 else "negative"
        return ClosedFormResult(delta_e=0.0, branch=branch)

    if Delta > 0:
        if a > LOG_SPACE_ABOVE or b > 700.0:
            ratio = math.exp(2.0 * _log_sinh(a) - _log_sinh(b))
        else:
            ratio = math.sinh(a) ** 2 / math.sinh(b)
        value = prefactor * ratio / (math.pi**2 * (1.0 + (a / math.pi) ** 2) ** 2)
        return ClosedFormResult(delta_e=value, branch="positive")

    order = max(1, round(b / math.pi))
    distance = abs(b - order * math.pi)
    if distance < pole_tol:
        raise PoleError(
            f"resonance: (2l+d)/xi = {b:.9g} is {distance:.2e} from {order} pi "
            f"(b-mode {order} is degenerate with the initial state)",
            distance=distance,
            order=order,
        )
    warnings: tuple[str, ...] = ()
    if distance < proximity:
        message = f"resonance proximity: (2l+d)/xi is {distance:.3e} from {order} pi"
        logger.warning(message)
        warnings = (message,)

    gap = 1.0 - (a / math.pi) ** 2
    if abs(gap) < REMOVABLE_TOL:
        # sin^2(a) / (pi^2 gap^2) -> 1/4 as a -> pi
        value = prefactor / 4.0 / math.sin(b)
    else:
        value = prefactor * math.sin(a) ** 2 / math.sin(b) / (math.pi**2 * gap**2)
    return ClosedFormResult(
        delta_e=value,
        branch="negative",
        pole_distance=distance,
        pole_order=order,
        warnings=warnings,
    )


def delta_e_closed(
    params: ModelParams, pole_tol: float = POLE_TOL, proximity: float = POLE_PROXIMITY
) -> ClosedFormResult:
    """Closed-form splitting for the model parameters (constant profile only)."""
    _require_constant(params)
    geometry = params.geometry
    return closed_form_splitting(
        params.g_tilde0,
        params.m,
        geometry.ell,
        geometry.d,
        params.Delta,
        params.hbar,
        pole_tol=pole_tol,
        proximity=proximity,
    )


def epsilon_scale(g_tilde0: float, Delta: float, xi: float, ell: float, hbar: float = 1.0) -> float:
    """epsilon = 2 pi^2 hbar g^2 / Delta (xi / l)^3."""
    return 2.0 * math.pi**2 * hbar * g_tilde0**2 / Delta * (xi / ell) ** 3


def delta_e_asymptotic(params: ModelParams) -> tuple[float, float]:
    """(epsilon, epsilon exp(-d/xi)), the l >> xi limit of the Delta > 0 closed form.

    epsilon bounds delta E from above; the leading relative correction is
    2 pi^2 (xi/l)^2.
    """
    _require_constant(params)
    Delta = params.Delta
    if Delta <= 0:
        raise ValueError(f"the asymptotic law needs Delta > 0, got {Delta}")
    xi = params.xi
    epsilon = epsilon_scale(params.g_tilde0, Delta, xi, params.geometry.ell, params.hbar)
    return epsilon, epsilon * math.exp(-params.geometry.d / xi)


def scale_params(params: ModelParams) -> ScaleParams:
    """xi, signed Delta and epsilon (computed with |Delta|)."""
    _require_constant(params)
    Delta = params.Delta
    xi = xi_length(params.m, Delta, params.hbar)
    epsilon = epsilon_scale(params.g_tilde0, abs(Delta), xi, params.geometry.ell, params.hbar)
    return ScaleParams(xi=xi, Delta=Delta, epsilon=epsilon)
