"""Built-in sweep observables.

Each observable is called as ``func(params, config)`` with the model
parameters of one sweep point and the full run config.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

from t3k.core.errors import ConvergenceError
from t3k.core.hooks import observable
from t3k.physics.dynamics import splitting_from_spectrum
from t3k.physics.hamiltonian import build_hamiltonian, converge_truncation
from t3k.physics.modes import ModelParams
from t3k.physics.selfenergy import delta_e_asymptotic, delta_e_closed, pt2_series

if TYPE_CHECKING:
    from t3k.runconfig.parser import RunConfig


def relative_difference(a: float, b: float) -> float:
    """|a - b| / |b|, or |a - b| when b = 0."""
    scale = abs(b)
    return abs(a - b) / scale if scale > 0 else abs(a - b)


@observable("delta_e", columns=("delta_e_series", "delta_e_closed", "rel_diff", "j_used"))
def delta_e_both(params: ModelParams, config: RunConfig) -> dict[str, float | int]:
    tol = config.tolerances
    series = pt2_series(params, tol.series)
    closed = delta_e_closed(params, tol.pole, tol.proximity)
    return {
        "delta_e_series": series.delta_e,
        "delta_e_closed": closed.delta_e,
        "rel_diff": relative_difference(series.delta_e, closed.delta_e),
        "j_used": series.j_used,
    }


@observable("delta_e_series", columns=("delta_e_series", "j_used", "tail_estimate"))
def delta_e_series(params: ModelParams, config: RunConfig) -> dict[str, float | int]:
    series = pt2_series(params, config.tolerances.series)
    return {
        "delta_e_series": series.delta_e,
        "j_used": series.j_used,
        "tail_estimate": series.tail_estimate,
    }


@observable("delta_e_closed", columns=("delta_e_closed",))
def delta_e_closed_form(params: ModelParams, config: RunConfig) -> dict[str, float | int]:
    tol = config.tolerances
    return {"delta_e_closed": delta_e_closed(params, tol.pole, tol.proximity).delta_e}


@observable("delta_e_spectrum", columns=("delta_e_spectrum",))
def delta_e_spectrum(params: ModelParams, config: RunConfig) -> dict[str, float | int]:
    classification = config.tolerances.classification
    block = config.convergence
    if not block.enabled:
        H = build_hamiltonian(params, config.truncation, rwa=config.rwa)
        return {"delta_e_spectrum": splitting_from_spectrum(H, classification)}
    result = converge_truncation(
        params,
        lambda matrix: splitting_from_spectrum(matrix, classification),
        start=config.truncation,
        tol=block.tol,
        max_doublings=block.max_doublings,
        rwa=config.rwa,
    )
    if not result.converged:
        raise ConvergenceError(
            f"splitting still moved by {result.change:.2e} after {block.max_doublings} doublings"
        )
    return {"delta_e_spectrum": result.value}


@observable("delta_e_asymptotic", columns=("epsilon", "delta_e_asymptotic"))
def delta_e_asymptotic_law(params: ModelParams, config: RunConfig) -> dict[str, float | int]:
    epsilon, value = delta_e_asymptotic(params)
    return {"epsilon": epsilon, "delta_e_asymptotic": value}
