"""Exact time evolution on the truncated basis and level-splitting extraction."""
from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from t3k.core.errors import ClassificationError, ResonanceError
from t3k.physics.hamiltonian import (
    BasisState,
    HermitianMatrix,
    Internal,
    photon_parity,
    swap_operator,
)
from t3k.physics.modes import Side

logger = logging.getLogger(__name__)

PROBABILITY_SLACK = 1e-12
CLASSIFICATION_THRESHOLD = 0.9


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Populations sampled on a time grid.

    ``p_t3k`` is |<a,R,0|psi(t)>|^2, ``p_left`` is |<a,L,0|psi(t)>|^2,
    ``p_excited`` the total population of internal-b states.
    """

    t: NDArray[np.float64]
    p_t3k: NDArray[np.float64]
    p_left: NDArray[np.float64]
    p_excited: NDArray[np.float64]
    norm: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.t)

    def rows(self) -> list[tuple[float, float, float, float, float]]:
        return list(zip(self.t, self.p_t3k, self.p_left, self.p_excited, self.norm))


def _check_grid(t_grid: ArrayLike) -> NDArray[np.float64]:
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("time grid is empty")
    if np.any(np.diff(t) < 0):
        raise ValueError("time grid must be sorted")
    if t[0] < 0:
        raise ValueError(f"time grid must start at t >= 0, got {t[0]}")
    return t


def _amplitudes(
    values: NDArray[np.float64],
    vectors: NDArray[np.float64],
    psi0: NDArray[np.complex128],
    t: NDArray[np.float64],
    hbar: float,
) -> NDArray[np.complex128]:
    """U exp(-i Lambda t / hbar) U^dagger psi0 for every t; shape (len(t), dim)."""
    coefficients = vectors.conj().T @ psi0
    phases = np.exp(-1j * np.outer(t, values) / hbar)
    return (phases * coefficients) @ vectors.T


def propagate(
    H: HermitianMatrix, psi: ArrayLike, t: float, hbar: float = 1.0
) -> NDArray[np.complex128]:
    """exp(-i H t / hbar) psi for a signed time t."""
    state = np.asarray(psi, dtype=complex)
    values, vectors = H.eigh()
    return _amplitudes(values, vectors, state, np.array([float(t)]), hbar)[0]


def evolve(
    H: HermitianMatrix, initial: BasisState, t_grid: ArrayLike, hbar: float = 1.0
) -> TimeSeries:
    """Evolve a basis state exactly and record the T3K populations.

    Only the photon-parity sector of ``initial`` is diagonalised; the other
    sector is never populated.
    """
    t = _check_grid(t_grid)
    start = H.index(initial)
    target = BasisState.a(Side.R, 0)
    left = BasisState.a(Side.L, 0)

    sector = H.sector(photon_parity(initial))
    values, vectors = H.eigh(sector)
    psi0 = np.zeros(len(sector), dtype=complex)
    local = {int(g): k for k, g in enumerate(sector)}
    psi0[local[start]] = 1.0
    amps = _amplitudes(values, vectors, psi0, t, hbar)
    populations = np.abs(amps) ** 2

    def population(state: BasisState) -> NDArray[np.float64]:
        if state not in H or H.index(state) not in local:
            return np.zeros_like(t)
        return populations[:, local[H.index(state)]]

    excited_cols = [
        k for k, g in enumerate(sector) if H.basis[int(g)].internal is Internal.B
    ]
    series = TimeSeries(
        t=t,
        p_t3k=population(target),
        p_left=population(left),
        p_excited=populations[:, excited_cols].sum(axis=1),
        norm=populations.sum(axis=1),
    )
    logger.debug(f"Evolved {initial} over {len(t)} samples in a sector of dim {len(sector)}")
    return series


def p_t3k_three_level(g_tilde: float, delta: float, t: ArrayLike) -> NDArray[np.float64]:
    """Lowest-order T3K probability of the three-level model.

    |sin(g^2 t / delta) - 2 (g/delta)^2 exp(-i delta t / 2) sin(delta t / 2)|^2,
    valid for |g| << |delta|: a slow oscillation at 2 g^2/delta with a fast ripple
    at delta suppressed by (g/delta)^2. The minus sign makes the probability
    start as t^4, as a second-order transition must.

    Raises:
        ResonanceError: If delta == 0
    """
    if delta == 0:
        raise ResonanceError("delta = 0: the three-level estimate needs a detuned virtual state")
    tt = np.asarray(t, dtype=float)
    ratio = g_tilde / delta
    slow = np.sin(g_tilde * ratio * tt)
    fast = 2.0 * ratio**2 * np.exp(-0.5j * delta * tt) * np.sin(0.5 * delta * tt)
    return np.abs(slow - fast) ** 2


def _swap_blocks(
    H: HermitianMatrix, sector: NDArray[np.int_]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Orthonormal bases (columns, sector coordinates) of the swap-even and swap-odd subspaces."""
    basis = [H.basis[int(g)] for g in sector]
    local = {s: k for k, s in enumerate(basis)}
    even: list[NDArray[np.float64]] = []
    odd: list[NDArray[np.float64]] = []
    root = 1.0 / np.sqrt(2.0)
    for k, state in enumerate(basis):
        if state.internal is Internal.A:
            if state.spatial is not Side.L:
                continue
            mirror = local[BasisState.a(Side.R, state.photons)]
            plus = np.zeros(len(basis))
            plus[[k, mirror]] = root
            minus = np.zeros(len(basis))
            minus[k], minus[mirror] = root, -root
            even.append(plus)
            odd.append(minus)
        else:
            unit = np.zeros(len(basis))
            unit[k] = 1.0
            (even if int(state.spatial) % 2 == 1 else odd).append(unit)
    return np.array(even).T, np.array(odd).T


def _pick(
    block: NDArray[np.float64],
    q: NDArray[np.float64],
    reference: NDArray[np.float64],
    threshold: float,
    name: str,
) -> float:
    values, vectors = np.linalg.eigh(q.T @ block @ q)
    overlaps = np.abs(vectors.T @ (q.T @ reference)) ** 2
    best = int(np.argmax(overlaps))
    if overlaps[best] < threshold:
        raise ClassificationError(
            f"no {name} eigenstate with overlap >= {threshold} on the a-doublet "
            f"(best {overlaps[best]:.3f}); near-resonant mixing?"
        )
    return float(values[best])


def splitting_from_spectrum(
    H: HermitianMatrix, threshold: float = CLASSIFICATION_THRESHOLD
) -> float:
    """E_antisymmetric - E_symmetric of the a-dominated doublet.

    Positive when the antisymmetric state lies higher. Symmetry is read off the
    L<->R swap: when the swap commutes with H the two swap sectors are
    diagonalised separately, otherwise eigenvectors are classified by the sign
    of their swap expectation value.
    """
    left, right = BasisState.a(Side.L, 0), BasisState.a(Side.R, 0)
    if left not in H or right not in H:
        raise ClassificationError("H must contain both |a,L,0> and |a,R,0>")
    sector = H.sector(photon_parity(left))
    block = H.matrix[np.ix_(sector, sector)]
    local = {int(g): k for k, g in enumerate(sector)}
    i_left, i_right = local[H.index(left)], local[H.index(right)]

    basis = [H.basis[int(g)] for g in sector]
    p = swap_operator(basis)
    scale = max(float(np.max(np.abs(block))), 1.0)
    if np.max(np.abs(p @ block - block @ p)) <= 1e-12 * scale:
        q_even, q_odd = _swap_blocks(H, sector)
        symmetric = np.zeros(len(sector))
        symmetric[[i_left, i_right]] = 1.0 / np.sqrt(2.0)
        antisymmetric = np.zeros(len(sector))
        antisymmetric[i_left], antisymmetric[i_right] = 1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)
        e_sym = _pick(block, q_even, symmetric, threshold, "symmetric")
        e_anti = _pick(block, q_odd, antisymmetric, threshold, "antisymmetric")
        return e_anti - e_sym

    logger.debug("swap does not commute with H; classifying by swap expectation")
    values, vectors = np.linalg.eigh(block)
    weights = np.abs(vectors[i_left]) ** 2 + np.abs(vectors[i_right]) ** 2
    candidates = [k for k in np.argsort(-weights)[:2] if weights[k] >= threshold]
    if len(candidates) != 2:
        raise ClassificationError(
            f"expected two eigenstates with a-doublet weight >= {threshold}, "
            f"found {len(candidates)}"
        )
    signs = {k: float(vectors[:, k] @ p @ vectors[:, k]) for k in candidates}
    sym = [k for k in candidates if signs[k] > 0]
    anti = [k for k in candidates if signs[k] < 0]
    if len(sym) != 1 or len(anti) != 1:
        raise ClassificationError(f"swap parities of the doublet are ambiguous: {signs}")
    return float(values[anti[0]] - values[sym[0]])


def envelope_maxima(
    t: ArrayLike, p: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Local maxima of a sampled signal, refined by three-point parabolas.

    The grid should carry at least 40 samples per fast period.
    """
    tt = np.asarray(t, dtype=float)
    pp = np.asarray(p, dtype=float)
    if len(tt) != len(pp) or len(tt) < 3:
        raise ValueError("need matching t and p arrays with at least 3 samples")
    mid = np.flatnonzero((pp[1:-1] > pp[:-2]) & (pp[1:-1] >= pp[2:])) + 1
    t0, t1, t2 = tt[mid - 1], tt[mid], tt[mid + 1]
    p0, p1, p2 = pp[mid - 1], pp[mid], pp[mid + 1]
    # vertex of the parabola through the three samples
    d01, d12 = (p1 - p0) / (t1 - t0), (p2 - p1) / (t2 - t1)
    curvature = (d12 - d01) / (t2 - t0)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(curvature < 0, -d01 / (2.0 * curvature) - (t1 - t0) / 2.0, 0.0)
    shift = np.clip(shift, -(t1 - t0), t2 - t1)
    t_peak = t1 + shift
    p_peak = p1 + d01 * (t_peak - t1) + curvature * (t_peak - t0) * (t_peak - t1)
    return t_peak, np.maximum(p_peak, p1)
