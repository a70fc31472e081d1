"""Command line: ``t3k <subcommand> <config.yaml>``.

Exit status 0 on success, 1 on physics-domain errors (resonance, pole,
convergence), 2 on configuration errors. Artifacts go to
``output.directory`` unless ``T3K_OUTPUT_DIR`` overrides it; stdout gets one
summary line.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from pathlib import Path
import argparse
import logging
import math
import sys

import numpy as np

from t3k import TOOL_NAME, __version__
from t3k.core.config import get_settings
from t3k.core.errors import EXIT_OK, ConfigError, T3KError, exit_status_for
from t3k.physics.dynamics import evolve, splitting_from_spectrum
from t3k.physics.feasibility import feasibility_report, feasibility_scan
from t3k.physics.hamiltonian import BasisState, Parity, build_hamiltonian, converge_truncation
from t3k.physics.kernel import (
    build_kernel,
    grid_evolve,
    project_kernel,
    two_mode_evolve,
    uniform_grid,
    well_aligned_grid,
)
from t3k.physics.modes import ModeId, Side, Species, coupling_table, mode_frequency
from t3k.physics.selfenergy import delta_e_closed, pt2_series
from t3k.runconfig import RunConfig, load_config
from t3k.services.observables import relative_difference
from t3k.services.sweep import sweep
from t3k.services.writers import write_csv, write_json

logger = logging.getLogger(__name__)

# kernel_grid.csv: Cayley sub-steps between consecutive samples
CAYLEY_STEPS = 64
# warn when the kernel tail bound exceeds this fraction of max |Pi|
TAIL_WARNING = 0.1

Task = Callable[[RunConfig, Path, int], tuple[list[Path], str]]


def run_modes(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    params = config.require_model("modes").to_params()
    rows = []
    for species in Species:
        for j in range(1, config.truncation.j_max + 1):
            mode = ModeId(species=species, j=j)
            rows.append((species.value, j, mode_frequency(params, mode)))
    path = write_csv(out / "modes.csv", "modes", config, ("species", "j", "frequency"), rows)
    return [path], f"{len(rows)} modes, omega_1^(a) = {params.omega_a:.6g}"


def run_couplings(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    params = config.require_model("couplings").to_params()
    j_max = config.truncation.j_max
    g_left, g_right = coupling_table(params, j_max)
    delta = params.detuning(np.arange(1, j_max + 1))
    rows = [
        (j, float(g_left[j - 1]), float(g_right[j - 1]), float(delta[j - 1]))
        for j in range(1, j_max + 1)
    ]
    columns = ("j", "g_L", "g_R", "delta_j")
    path = write_csv(out / "couplings.csv", "couplings", config, columns, rows)
    return [path], f"{j_max} couplings, g_L1 = {g_left[0]:.6g}"


def run_spectrum(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    params = config.require_model("spectrum").to_params()
    H = build_hamiltonian(params, config.truncation, rwa=config.rwa)
    entries = write_csv(
        out / "hamiltonian.csv", "spectrum", config, ("row", "col", "value"), H.entries()
    )
    doublet = [H.index(BasisState.a(Side.L)), H.index(BasisState.a(Side.R))]
    rows = []
    for parity in Parity:
        sector = H.sector(parity)
        if sector.size == 0:
            continue
        values, vectors = H.eigh(sector)
        local = [int(np.flatnonzero(sector == i)[0]) for i in doublet if i in sector]
        weights = (np.abs(vectors[local]) ** 2).sum(axis=0) if local else np.zeros(len(values))
        rows += [(parity.value, k, float(values[k]), float(weights[k])) for k in range(len(values))]
    spectrum = write_csv(
        out / "spectrum.csv", "spectrum", config, ("parity", "k", "energy", "doublet_weight"), rows
    )
    classification = config.tolerances.classification
    try:
        splitting = f"delta E = {splitting_from_spectrum(H, classification):.6g}"
    except T3KError as e:
        logger.warning(f"Splitting not available: {e}")
        splitting = "delta E unavailable"
    paths = [entries, spectrum]
    if config.convergence.enabled:
        block = config.convergence
        result = converge_truncation(
            params,
            lambda matrix: splitting_from_spectrum(matrix, classification),
            start=config.truncation,
            tol=block.tol,
            max_doublings=block.max_doublings,
            rwa=config.rwa,
        )
        history = [(t.j_max, t.n_max, value) for t, value in result.history]
        columns = ("j_max", "n_max", "delta_e")
        paths.append(write_csv(out / "convergence.csv", "spectrum", config, columns, history))
        status = "converged" if result.converged else "not converged"
        splitting += (
            f", {status} delta E = {result.value:.6g} at j_max={result.truncation.j_max} "
            f"n_max={result.truncation.n_max} (change {result.change:.2g})"
        )
    return paths, f"dim {H.dimension}, {splitting}"


def run_evolve(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    params = config.require_model("evolve").to_params()
    H = build_hamiltonian(params, config.truncation, rwa=config.rwa)
    series = evolve(H, BasisState.a(Side.L), config.time.grid(), params.hbar)
    path = write_csv(
        out / "evolve.csv",
        "evolve",
        config,
        ("t", "p_t3k", "p_left", "p_excited", "norm"),
        [tuple(float(v) for v in row) for row in series.rows()],
    )
    return [path], f"{len(series)} samples, max P_T3K = {float(np.max(series.p_t3k)):.6g}"


def run_delta_e(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    params = config.require_model("delta-e").to_params()
    tol = config.tolerances
    series = pt2_series(params, tol.series)
    closed = delta_e_closed(params, tol.pole, tol.proximity)
    rel = relative_difference(series.delta_e, closed.delta_e)
    path = write_csv(
        out / "delta_e.csv",
        "delta-e",
        config,
        ("d", "delta_e_series", "delta_e_closed", "rel_diff", "j_used"),
        [(params.geometry.d, series.delta_e, closed.delta_e, rel, series.j_used)],
    )
    return [path], (
        f"delta E = {series.delta_e:.6g} (series), "
        f"{closed.delta_e:.6g} ({closed.branch} closed form)"
    )


def run_kernel(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    params = config.require_model("kernel").to_params()
    block = config.kernel
    grid = well_aligned_grid(params.geometry, block.points_per_well)
    kernel = build_kernel(params, grid, block.j_max)
    rtol = config.tolerances.projection
    pi_ss = project_kernel(kernel, "S", "S", rtol)
    pi_aa = project_kernel(kernel, "A", "A", rtol)
    peak = float(np.max(np.abs(kernel.values)))
    if kernel.tail_estimate is not None and kernel.tail_estimate > TAIL_WARNING * peak:
        logger.warning(
            f"Kernel tail bound {kernel.tail_estimate:.3e} exceeds {TAIL_WARNING:g} of "
            f"max |Pi| = {peak:.3e}; raise kernel.j_max"
        )

    export = build_kernel(params, uniform_grid(params.geometry, block.export_points), block.j_max)
    x = export.x
    heat = [
        (float(x[i]), float(x[k]), float(export.values[i, k]))
        for i in range(len(x))
        for k in range(len(x))
    ]
    kernel_csv = write_csv(out / "kernel.csv", "kernel", config, ("x", "x_prime", "pi_value"), heat)

    t = config.time.grid()
    two_mode = two_mode_evolve(params.hbar * params.omega_a, pi_ss, pi_aa, t, params.hbar)
    rows = [
        (
            float(t[k]),
            float(two_mode.p[k]),
            float(two_mode.c_left[k].real),
            float(two_mode.c_left[k].imag),
            float(two_mode.c_right[k].real),
            float(two_mode.c_right[k].imag),
        )
        for k in range(len(t))
    ]
    columns = ("t", "p", "c_l_re", "c_l_im", "c_r_re", "c_r_im")
    two_mode_csv = write_csv(out / "two_mode.csv", "kernel", config, columns, rows)

    on_grid = grid_evolve(kernel, t, CAYLEY_STEPS)
    rows = [
        (float(t[k]), float(two_mode.p[k]), float(on_grid.p_right[k]), float(on_grid.norm[k]))
        for k in range(len(t))
    ]
    grid_csv = write_csv(
        out / "kernel_grid.csv", "kernel", config, ("t", "p_two_mode", "p_grid", "norm_grid"), rows
    )
    deviation = float(np.max(np.abs(on_grid.p_right - two_mode.p)))
    tail = "n/a" if kernel.tail_estimate is None else f"{kernel.tail_estimate:.3g}"
    return [kernel_csv, two_mode_csv, grid_csv], (
        f"Pi_SS = {pi_ss:.6g}, Pi_AA = {pi_aa:.6g}, delta E = {pi_aa - pi_ss:.6g}, "
        f"grid vs two-mode {deviation:.3g}, tail bound {tail}"
    )


def run_sweep(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    result = sweep(config, n_jobs)
    path = write_csv(out / "sweep.csv", "sweep", config, result.csv_columns(), result.rows())
    flagged = len(result) - sum(result.converged)
    return [path], f"{len(result)} points over {result.axis}, {flagged} flagged"


def run_feasibility(config: RunConfig, out: Path, n_jobs: int) -> tuple[list[Path], str]:
    if config.experiment is None:
        raise ConfigError("experiment", "required for the feasibility subcommand")
    block = config.experiment
    params = block.to_params()
    report = feasibility_report(params)
    payload = {
        "tool": TOOL_NAME,
        "version": __version__,
        "config": config.model_dump(mode="json"),
        "params": params.model_dump(),
        "report": report.model_dump(),
    }
    paths = [write_json(out / "feasibility.json", payload)]

    if block.scan is not None:
        # scanned frequencies are reported in Hz, like the ExperimentParams fields
        field, values = block.scan_values()
        rows = [
            (
                value,
                r.xi_m,
                r.epsilon_over_hbar,
                math.nan if r.delta_e_over_hbar is None else r.delta_e_over_hbar,
                math.inf if r.d_max_m is None else r.d_max_m,
                r.feasible,
                "ok" if r.delta_e_over_hbar is not None else "pole",
            )
            for value, r in feasibility_scan(params, field, values)
        ]
        columns = (
            field, "xi_m", "eps_over_hbar", "delta_e_over_hbar", "d_max_m", "feasible", "status"
        )
        paths.append(write_csv(out / "feasibility_scan.csv", "feasibility", config, columns, rows))

    verdict = "feasible" if report.feasible else "infeasible"
    return paths, (
        f"{verdict}: xi = {report.xi_m:.4g} m, epsilon/hbar = {report.epsilon_over_hbar:.4g} rad/s"
    )


SUBCOMMANDS: dict[str, Task] = {
    "modes": run_modes,
    "couplings": run_couplings,
    "spectrum": run_spectrum,
    "evolve": run_evolve,
    "delta-e": run_delta_e,
    "kernel": run_kernel,
    "sweep": run_sweep,
    "feasibility": run_feasibility,
}


def output_directory(config: RunConfig) -> Path:
    """``T3K_OUTPUT_DIR`` if set, else ``output.directory``."""
    settings = get_settings()
    return settings.OUTPUT_DIR or Path(config.output.directory)


def dispatch(subcommand: str, config: RunConfig) -> int:
    """Run one subcommand, write its artifacts and print a summary line.

    Returns:
        The exit status
    """
    if subcommand not in SUBCOMMANDS:
        print(f"❌ unknown subcommand '{subcommand}'. Choose from: {', '.join(SUBCOMMANDS)}")
        return ConfigError.exit_status
    settings = get_settings()
    try:
        paths, summary = SUBCOMMANDS[subcommand](config, output_directory(config), settings.N_JOBS)
    except (T3KError, ValueError, ArithmeticError) as e:
        status = exit_status_for(e)
        print(f"❌ {subcommand}: {type(e).__name__}: {e}")
        logger.debug(f"{subcommand} failed", exc_info=True)
        return status
    written = ", ".join(str(p) for p in paths)
    print(f"✅ {subcommand}: {summary} -> {written}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t3k", description="Tunnelling of the third kind: numerical laboratory"
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    parser.add_argument("subcommand", choices=list(SUBCOMMANDS), help="task to run")
    parser.add_argument("config", type=Path, help="YAML run configuration")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_config(args.config)
    except ConfigError as e:
        print(f"❌ invalid config {args.config}: {e}")
        return e.exit_status
    return dispatch(args.subcommand, config)


if __name__ == "__main__":
    sys.exit(main())
