"""Truncated single-atom basis and the atom-cavity model Hamiltonian.

Basis ordering (stable, relied on by the CSV export):
a-states first, ordered by (sigma, n) with L before R; then b-states ordered
by (j, n).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable
from enum import Enum
import logging
import math

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, NonNegativeInt, PositiveInt
from scipy import linalg

from t3k.core.errors import NonHermitianError
from t3k.physics.modes import ModeId, ModelParams, Side, Species, coupling_table, mode_frequency

logger = logging.getLogger(__name__)


class Internal(str, Enum):
    A = "a"
    B = "b"


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"


class Truncation(BaseModel):
    """Highest b spatial mode, highest photon number, optional parity reduction."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    j_max: PositiveInt = 64
    n_max: NonNegativeInt = 3
    parity_reduced: bool = False


@dataclass(frozen=True)
class BasisState:
    """|a, sigma, n> or |b, j, n>."""

    internal: Internal
    spatial: Side | int
    photons: int

    def __post_init__(self) -> None:
        if self.photons < 0:
            raise ValueError(f"photon number must be >= 0, got {self.photons}")
        if self.internal is Internal.A and not isinstance(self.spatial, Side):
            raise ValueError(f"a-states need a side L/R, got {self.spatial!r}")
        if self.internal is Internal.B and (
            isinstance(self.spatial, Side) or not isinstance(self.spatial, int) or self.spatial < 1
        ):
            raise ValueError(f"b-states need a mode index j >= 1, got {self.spatial!r}")

    @classmethod
    def a(cls, side: Side | str, n: int = 0) -> BasisState:
        return cls(Internal.A, Side(side), n)

    @classmethod
    def b(cls, j: int, n: int = 0) -> BasisState:
        return cls(Internal.B, j, n)

    @property
    def label(self) -> str:
        spatial = self.spatial.value if isinstance(self.spatial, Side) else self.spatial
        return f"|{self.internal.value},{spatial},{self.photons}>"

    def __str__(self) -> str:
        return self.label


def excitation_number(state: BasisState) -> int:
    """n + [internal = b]; conserved by the co-rotating terms only."""
    return state.photons + (1 if state.internal is Internal.B else 0)


def photon_parity(state: BasisState) -> Parity:
    """(n + [internal = b]) mod 2, conserved by the full Hamiltonian."""
    return Parity.EVEN if excitation_number(state) % 2 == 0 else Parity.ODD


def enumerate_basis(truncation: Truncation) -> list[BasisState]:
    """Ordered basis for a truncation.

    With ``parity_reduced`` only the even sector (the one holding |a,L,0>) is kept.
    """
    states = [BasisState.a(side, n) for side in Side for n in range(truncation.n_max + 1)]
    states += [
        BasisState.b(j, n)
        for j in range(1, truncation.j_max + 1)
        for n in range(truncation.n_max + 1)
    ]
    if truncation.parity_reduced:
        states = [s for s in states if photon_parity(s) is Parity.EVEN]
    return states


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Dense Hermitian operator on a labelled truncated basis."""

    matrix: NDArray[np.float64]
    basis: tuple[BasisState, ...]
    _index: dict[BasisState, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.basis):
            raise ValueError(f"matrix shape {m.shape} does not match basis size {len(self.basis)}")
        if not np.array_equal(m, m.conj().T):
            raise NonHermitianError(
                f"matrix is not Hermitian (max |H - H^dagger| = {np.max(np.abs(m - m.conj().T))})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.basis)})

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def index(self, state: BasisState) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise ValueError(f"{state} is not in the basis") from None

    def __contains__(self, state: object) -> bool:
        return state in self._index

    def eigh(
        self, indices: NDArray[np.int_] | None = None
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Eigen-decomposition of the whole matrix or of a principal block."""
        block = self.matrix if indices is None else self.matrix[np.ix_(indices, indices)]
        try:
            return linalg.eigh(block)
        except linalg.LinAlgError as e:
            raise NonHermitianError(f"eigendecomposition failed: {e}") from e

    def sector(self, parity: Parity) -> NDArray[np.int_]:
        """Indices of the basis states with the given photon parity."""
        return np.array(
            [i for i, s in enumerate(self.basis) if photon_parity(s) is parity], dtype=int
        )

    def entries(self) -> list[tuple[int, int, float]]:
        """Nonzero (row, col, value) triples, row-major."""
        rows, cols = np.nonzero(self.matrix)
        return [(int(r), int(c), float(self.matrix[r, c])) for r, c in zip(rows, cols)]


def build_hamiltonian(
    params: ModelParams, truncation: Truncation, rwa: bool = False
) -> HermitianMatrix:
    """Assemble H on the truncated basis.

    Diagonal: hbar (omega + n omega_c). Off-diagonal: hbar g_{sigma j} sqrt(n) between
    |a,sigma,n> and |b,j,n-1> (co-rotating) and hbar g_{sigma j} sqrt(n+1) between
    |a,sigma,n> and |b,j,n+1> (counter-rotating, dropped when ``rwa``).
    """
    basis = enumerate_basis(truncation)
    index = {s: i for i, s in enumerate(basis)}
    hbar = params.hbar
    g_left, g_right = coupling_table(params, truncation.j_max)
    couplings = {Side.L: g_left, Side.R: g_right}

    h = np.zeros((len(basis), len(basis)))
    for i, state in enumerate(basis):
        if state.internal is Internal.A:
            omega = params.omega_a
        else:
            omega = mode_frequency(params, ModeId(species=Species.B, j=int(state.spatial)))
        h[i, i] = hbar * (omega + state.photons * params.omega_c)

    for i, state in enumerate(basis):
        if state.internal is not Internal.A:
            continue
        side = state.spatial
        assert isinstance(side, Side)
        n = state.photons
        targets = [(n - 1, math.sqrt(n))]
        if not rwa:
            targets.append((n + 1, math.sqrt(n + 1)))
        for n_target, ladder in targets:
            if n_target < 0:
                continue
            for j in range(1, truncation.j_max + 1):
                target = BasisState.b(j, n_target)
                k = index.get(target)
                if k is None:
                    continue
                if photon_parity(target) is not photon_parity(state):
                    raise AssertionError(f"{state} -> {target} leaves the parity sector")
                value = hbar * couplings[side][j - 1] * ladder
                h[i, k] = value
                h[k, i] = value

    logger.debug(
        f"Built H: dim={len(basis)} j_max={truncation.j_max} n_max={truncation.n_max} "
        f"parity_reduced={truncation.parity_reduced} rwa={rwa}"
    )
    return HermitianMatrix(h, tuple(basis))


def three_level_preset(params: ModelParams, rwa: bool = False) -> HermitianMatrix:
    """{|a,L,0>, |a,R,0>, |b,1,1>}: the smallest basis showing T3K."""
    return build_hamiltonian(params, Truncation(j_max=1, n_max=1, parity_reduced=True), rwa=rwa)


def swap_operator(basis: tuple[BasisState, ...] | list[BasisState]) -> NDArray[np.float64]:
    """Signed permutation for the reflection x -> -x.

    |a,L,n> <-> |a,R,n>, |b,j,n> -> (-1)^(j+1) |b,j,n>.
    """
    index = {s: i for i, s in enumerate(basis)}
    p = np.zeros((len(basis), len(basis)))
    for i, state in enumerate(basis):
        if state.internal is Internal.A:
            mirrored = BasisState.a(Side.R if state.spatial is Side.L else Side.L, state.photons)
            k = index.get(mirrored)
            if k is None:
                raise ValueError(f"{mirrored} missing from basis; swap is undefined")
            p[k, i] = 1.0
        else:
            j = int(state.spatial)
            p[i, i] = 1.0 if j % 2 == 1 else -1.0
    return p


@dataclass(frozen=True)
class TruncationConvergence:
    """Outcome of the doubling protocol; ``history`` holds (truncation, value) per step."""

    truncation: Truncation
    value: float
    change: float
    converged: bool
    history: tuple[tuple[Truncation, float], ...]


def converge_truncation(
    params: ModelParams,
    observable: Callable[[HermitianMatrix], float],
    start: Truncation | None = None,
    tol: float = 1e-8,
    max_doublings: int = 3,
    rwa: bool = False,
) -> TruncationConvergence:
    """Double j_max and n_max until ``observable`` moves by less than ``tol``.

    The change is measured between consecutive truncations, relative to the
    larger magnitude (absolute below 1). Gives up after ``max_doublings`` and
    reports ``converged=False`` with the last change.
    """
    if max_doublings < 1:
        raise ValueError(f"max_doublings must be >= 1, got {max_doublings}")
    truncation = start or Truncation()
    value = observable(build_hamiltonian(params, truncation, rwa=rwa))
    history = [(truncation, value)]
    change = math.inf
    for _ in range(max_doublings):
        truncation = truncation.model_copy(
            update={"j_max": 2 * truncation.j_max, "n_max": max(1, 2 * truncation.n_max)}
        )
        previous, value = value, observable(build_hamiltonian(params, truncation, rwa=rwa))
        history.append((truncation, value))
        change = abs(value - previous) / max(1.0, abs(value), abs(previous))
        logger.debug(f"Truncation j_max={truncation.j_max} n_max={truncation.n_max}: {value!r}")
        if change < tol:
            return TruncationConvergence(truncation, value, change, True, tuple(history))
    logger.warning(f"Truncation did not converge after {max_doublings} doublings: change {change}")
    return TruncationConvergence(truncation, value, change, False, tuple(history))
