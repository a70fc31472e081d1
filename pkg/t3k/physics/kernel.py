"""Time-local non-local kernel Pi(x, x') and its two-mode reduction.

In the time-local approximation the b-atom/photon fluctuations act on the
a-atom through

    Pi(x, x') = -hbar g~0^2 sum_j phi_j^(b)(x) phi_j^(b)(x') / delta_j,

which is nonzero for x and x' on opposite sides of the barrier. Projecting
it on the two lowest a-modes gives the 2x2 self-energy; its S/A eigenvalues
set the Rabi-like oscillation P(t) = sin^2((Pi_AA - Pi_SS) t / 2 hbar).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal
import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, linalg

from t3k.core.errors import ConvergenceError, ProfileError, ResonanceError
from t3k.physics.modes import Geometry, ModeId, ModelParams, Species, mode_function

logger = logging.getLogger(__name__)

POINTS_PER_WELL = 257
UNIFORM_POINTS = 801
KERNEL_J_MAX = 64
PROJECTION_RTOL = 1e-8

AMode = Literal["S", "A", "L", "R"]


@dataclass(frozen=True, eq=False)
class XGrid:
    """Quadrature grid over the box: nodes, weights, and coarse weights.

    The coarse weights use every other node; comparing both quadratures gives
    the doubling error estimate.
    """

    x: NDArray[np.float64]
    weights: NDArray[np.float64]
    coarse_weights: NDArray[np.float64]
    order: int

    def __len__(self) -> int:
        return len(self.x)


def _simpson_weights(n: int, h: float) -> NDArray[np.float64]:
    """Composite Simpson weights for n (odd) equally spaced nodes."""
    panel, _ = integrate.newton_cotes(2, 1)
    w = np.zeros(n)
    w[0 : n - 2 : 2] += panel[0]
    w[1 : n - 1 : 2] += panel[1]
    w[2::2] += panel[2]
    return w * h


def _segment(
    lo: float, hi: float, intervals: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    x = np.linspace(lo, hi, intervals + 1)
    h = (hi - lo) / intervals
    fine = _simpson_weights(intervals + 1, h)
    coarse = np.zeros(intervals + 1)
    coarse[0::2] = _simpson_weights(intervals // 2 + 1, 2.0 * h)
    return x, fine, coarse


def well_aligned_grid(geometry: Geometry, points_per_well: int = POINTS_PER_WELL) -> XGrid:
    """Piecewise-uniform grid with nodes at both well edges.

    Each segment (left well, barrier, right well) carries composite Simpson
    weights, so integrands that are smooth per segment converge as h^4 even
    though the a-modes have kinks at the barrier.
    """
    intervals = points_per_well - 1
    if intervals < 4 or intervals % 4:
        raise ValueError(
            f"points_per_well - 1 must be a positive multiple of 4, got {points_per_well}"
        )
    h = geometry.ell / intervals
    barrier = max(4, 4 * math.ceil(geometry.d / (4.0 * h)))
    edge, half = geometry.outer_edge, geometry.d / 2.0
    pieces = [
        _segment(-edge, -half, intervals),
        _segment(-half, half, barrier),
        _segment(half, edge, intervals),
    ]
    xs, ws, cs = [pieces[0][0]], [pieces[0][1]], [pieces[0][2]]
    for x, w, c in pieces[1:]:
        # merge the shared edge node
        ws[-1] = ws[-1].copy()
        cs[-1] = cs[-1].copy()
        ws[-1][-1] += w[0]
        cs[-1][-1] += c[0]
        xs.append(x[1:])
        ws.append(w[1:])
        cs.append(c[1:])
    return XGrid(np.concatenate(xs), np.concatenate(ws), np.concatenate(cs), order=4)


def uniform_grid(geometry: Geometry, n: int = UNIFORM_POINTS) -> XGrid:
    """Uniform grid with trapezoid weights (heat-map export)."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"uniform grid needs an odd number of points >= 3, got {n}")
    edge = geometry.outer_edge
    x = np.linspace(-edge, edge, n)
    h = x[1] - x[0]
    weights = np.full(n, h)
    weights[[0, -1]] = h / 2.0
    coarse = np.zeros(n)
    coarse[0::2] = 2.0 * h
    coarse[[0, -1]] = h
    return XGrid(x, weights, coarse, order=2)


@dataclass(frozen=True, eq=False)
class KernelGrid:
    """Pi(x_i, x_j) on a grid (energy per length^2), symmetric by construction."""

    params: ModelParams
    grid: XGrid
    values: NDArray[np.float64]
    j_max: int
    # pointwise bound on the dropped modes; None when Delta < 0
    tail_estimate: float | None

    @property
    def x(self) -> NDArray[np.float64]:
        return self.grid.x


def _tail_bound(params: ModelParams, j_max: int) -> float | None:
    """Bound on |Pi(x, x')| from the modes above ``j_max``, for Delta > 0 only.

    |phi_j| <= sqrt(2/Lb) and delta_i >= hbar pi^2 i^2 / (2 m Lb^2), so the
    dropped sum is at most hbar g~0^2 (2/Lb) (2 m Lb^2 / hbar pi^2) / J.
    """
    if params.Delta <= 0:
        return None
    lb = params.geometry.box_width
    return params.g_tilde0**2 * 4.0 * params.m * lb / (math.pi**2 * j_max)


def build_kernel(
    params: ModelParams, grid: XGrid | None = None, j_max: int = KERNEL_J_MAX
) -> KernelGrid:
    """Spectral time-local kernel truncated at ``j_max`` b-modes.

    Raises:
        ProfileError: For non-constant cavity profiles
        ResonanceError: If some delta_j is (nearly) zero
    """
    if not params.is_constant_profile:
        raise ProfileError("the spectral kernel needs a constant cavity profile")
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")
    grid = grid or well_aligned_grid(params.geometry)
    j = np.arange(1, j_max + 1)
    delta = params.detuning(j)
    if params.Delta == 0 or np.any(np.abs(delta) < 1e-6 * abs(params.Delta)):
        raise ResonanceError("kernel denominators delta_j vanish: resonant configuration")

    phi = np.vstack([mode_function(params, ModeId(species=Species.B, j=int(k)), grid.x) for k in j])
    weight = -params.hbar * params.g_tilde0**2 / delta
    values = phi.T @ (weight[:, None] * phi)
    values = 0.5 * (values + values.T)

    tail = _tail_bound(params, j_max)
    logger.debug(f"Built kernel on {len(grid)} points with j_max={j_max}, tail bound {tail}")
    return KernelGrid(params=params, grid=grid, values=values, j_max=j_max, tail_estimate=tail)


def a_mode_on_grid(params: ModelParams, x: ArrayLike, mode: AMode) -> NDArray[np.float64]:
    """phi_L, phi_R or S/A = (L +- R)/sqrt(2) sampled on x."""
    left = mode_function(params, ModeId(species=Species.A_LEFT), x)
    right = mode_function(params, ModeId(species=Species.A_RIGHT), x)
    if mode == "L":
        return left
    if mode == "R":
        return right
    if mode == "S":
        return (left + right) / math.sqrt(2.0)
    if mode == "A":
        return (left - right) / math.sqrt(2.0)
    raise ValueError(f"a-mode must be one of S, A, L, R; got {mode!r}")


def _bilinear(
    kernel: KernelGrid, f: NDArray[np.float64], g: NDArray[np.float64], w: NDArray[np.float64]
) -> float:
    return float((f * w) @ kernel.values @ (g * w))


def project_kernel(
    kernel: KernelGrid, n: AMode, n_prime: AMode, rtol: float = PROJECTION_RTOL
) -> float:
    """Pi_{n n'} = double integral of phi_n(x) Pi(x, x') phi_n'(x').

    Raises:
        ConvergenceError: If the doubling estimate of the quadrature error
            exceeds ``rtol`` relative to |Pi_LL|
    """
    x = kernel.grid.x
    f = a_mode_on_grid(kernel.params, x, n)
    g = a_mode_on_grid(kernel.params, x, n_prime)
    fine = _bilinear(kernel, f, g, kernel.grid.weights)
    coarse = _bilinear(kernel, f, g, kernel.grid.coarse_weights)
    error = abs(fine - coarse) / (2**kernel.grid.order - 1)
    left = a_mode_on_grid(kernel.params, x, "L")
    scale = abs(_bilinear(kernel, left, left, kernel.grid.weights))
    if error > rtol * scale:
        raise ConvergenceError(
            f"grid too coarse for Pi_{n}{n_prime}: "
            f"error estimate {error:.3e} > {rtol:g} * {scale:.3e}"
        )
    return fine


def kernel_eigenmodes(
    kernel: KernelGrid, k: int = 4
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """The ``k`` eigenpairs of the kernel operator largest in magnitude.

    Eigenvectors of W^1/2 Pi W^1/2 are mapped back to functions on the grid,
    normalised under the quadrature weights; column ``i`` belongs to value ``i``.
    """
    root = np.sqrt(kernel.grid.weights)
    values, vectors = linalg.eigh(root[:, None] * kernel.values * root[None, :])
    order = np.argsort(-np.abs(values))[:k]
    return values[order], vectors[:, order] / root[:, None]


def kernel_spectrum(kernel: KernelGrid, k: int = 4) -> NDArray[np.float64]:
    """The ``k`` eigenvalues of W^1/2 Pi W^1/2 largest in magnitude."""
    return kernel_eigenmodes(kernel, k)[0]


@dataclass(frozen=True)
class TwoModeState:
    """Amplitudes on the S/A doublet with its energies.

    c_L = (c_S + c_A)/sqrt(2), c_R = (c_S - c_A)/sqrt(2).
    """

    c_s: complex
    c_a: complex
    E: float
    pi_ss: float
    pi_aa: float

    @classmethod
    def localized_left(cls, E: float, pi_ss: float, pi_aa: float) -> TwoModeState:
        root = 1.0 / math.sqrt(2.0)
        return cls(c_s=root, c_a=root, E=E, pi_ss=pi_ss, pi_aa=pi_aa)

    @property
    def c_left(self) -> complex:
        return (self.c_s + self.c_a) / math.sqrt(2.0)

    @property
    def c_right(self) -> complex:
        return (self.c_s - self.c_a) / math.sqrt(2.0)

    def at(self, t: float, hbar: float = 1.0) -> TwoModeState:
        phase_s = np.exp(-1j * (self.E + self.pi_ss) * t / hbar)
        phase_a = np.exp(-1j * (self.E + self.pi_aa) * t / hbar)
        return TwoModeState(
            c_s=complex(self.c_s * phase_s),
            c_a=complex(self.c_a * phase_a),
            E=self.E,
            pi_ss=self.pi_ss,
            pi_aa=self.pi_aa,
        )


@dataclass(frozen=True, eq=False)
class TwoModeSeries:
    t: NDArray[np.float64]
    p: NDArray[np.float64]
    c_left: NDArray[np.complex128]
    c_right: NDArray[np.complex128]


def two_mode_evolve(
    E: float, pi_ss: float, pi_aa: float, t_grid: ArrayLike, hbar: float = 1.0
) -> TwoModeSeries:
    """Two-mode evolution from c_L = 1, c_R = 0.

    P(t) = sin^2((Pi_AA - Pi_SS) t / 2 hbar) depends on the splitting only.
    """
    t = np.asarray(t_grid, dtype=float)
    splitting = pi_aa - pi_ss
    phase_s = np.exp(-1j * (E + pi_ss) * t / hbar)
    phase_a = np.exp(-1j * (E + pi_aa) * t / hbar)
    return TwoModeSeries(
        t=t,
        p=np.sin(splitting * t / (2.0 * hbar)) ** 2,
        c_left=(phase_s + phase_a) / 2.0,
        c_right=(phase_s - phase_a) / 2.0,
    )


def projected_hamiltonian(kernel: KernelGrid, E: float) -> NDArray[np.float64]:
    """E * 1 + Pi on the L/R doublet."""
    pi_ll = project_kernel(kernel, "L", "L")
    pi_lr = project_kernel(kernel, "L", "R")
    pi_rr = project_kernel(kernel, "R", "R")
    return np.array([[E + pi_ll, pi_lr], [pi_lr, E + pi_rr]])


def cayley_evolve(
    h: NDArray[np.float64], psi0: ArrayLike, t_grid: ArrayLike, steps: int = 64, hbar: float = 1.0
) -> NDArray[np.complex128]:
    """Crank-Nicolson propagation of i hbar dpsi/dt = h psi, sampled on t_grid.

    Each interval between grid times is split into ``steps`` Cayley steps,
    which are exactly unitary for Hermitian h. Uniform grids reuse one
    interval propagator.
    """
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) < 0):
        raise ValueError("time grid must be sorted")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    psi = np.asarray(psi0, dtype=complex).copy()
    identity = np.eye(len(psi))
    out = np.empty((len(t), len(psi)), dtype=complex)
    now = 0.0 if len(t) == 0 else min(0.0, t[0])
    cache: dict[float, NDArray[np.complex128]] = {}
    for k, target in enumerate(t):
        span = target - now
        if span > 0:
            key = float(f"{span:.12g}")
            propagator = cache.get(key)
            if propagator is None:
                half = 0.5j * (span / steps) / hbar * h
                step = linalg.solve(identity + half, identity - half)
                propagator = np.linalg.matrix_power(step, steps)
                cache[key] = propagator
            psi = propagator @ psi
            now = target
        out[k] = psi
    return out


@dataclass(frozen=True, eq=False)
class GridSeries:
    """Populations of the sampled well ground states under grid propagation."""

    t: NDArray[np.float64]
    p_left: NDArray[np.float64]
    p_right: NDArray[np.float64]
    norm: NDArray[np.float64]


def _well_nodes(kernel: KernelGrid) -> tuple[NDArray[np.intp], NDArray[np.intp], float]:
    geometry = kernel.params.geometry
    x = kernel.grid.x
    edge, half = geometry.outer_edge, geometry.d / 2.0
    tol = 1e-9 * geometry.ell
    left = np.flatnonzero((x > -edge + tol) & (x < -half - tol))
    right = np.flatnonzero((x > half + tol) & (x < edge - tol))
    if len(left) < 2 or len(left) != len(right):
        raise ValueError("grid propagation needs the same number of interior nodes in each well")
    h = float(x[left[1]] - x[left[0]])
    for nodes, lo, hi in ((left, -edge, -half), (right, half, edge)):
        inner = np.concatenate(([lo], x[nodes], [hi]))
        if not np.allclose(np.diff(inner), h, rtol=1e-9, atol=0.0):
            raise ValueError("grid propagation needs uniform well nodes that include both edges")
    return left, right, h


def well_grid_hamiltonian(kernel: KernelGrid) -> tuple[NDArray[np.float64], NDArray[np.intp]]:
    """Finite-difference a-atom Hamiltonian on the interior well nodes, plus Pi.

    Each well carries the Dirichlet kinetic term hbar^2 / (2 m h^2) tridiag(-1, 2, -1);
    the kernel enters as h Pi(x_i, x_j) and couples the wells across the barrier.
    Returns the matrix and the kernel-grid indices of its rows (left well first).

    Raises:
        ValueError: Unless both wells carry the same uniform node set with their edges
    """
    params = kernel.params
    left, right, h = _well_nodes(kernel)
    n = len(left)
    stencil = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    kinetic = params.hbar**2 / (2.0 * params.m * h**2) * stencil
    nodes = np.concatenate((left, right))
    hamiltonian = linalg.block_diag(kinetic, kinetic) + h * kernel.values[np.ix_(nodes, nodes)]
    return 0.5 * (hamiltonian + hamiltonian.T), nodes


def grid_evolve(kernel: KernelGrid, t_grid: ArrayLike, steps: int = 64) -> GridSeries:
    """Propagate phi_L on the well grid under kinetic energy plus Pi.

    The Hamiltonian is shifted by <L|H|L> so the doublet phases stay slow;
    Cayley steps keep the norm to rounding.
    """
    hamiltonian, nodes = well_grid_hamiltonian(kernel)
    x = kernel.grid.x[nodes]
    left = a_mode_on_grid(kernel.params, x, "L")
    right = a_mode_on_grid(kernel.params, x, "R")
    left /= np.linalg.norm(left)
    right /= np.linalg.norm(right)
    centre = float(left @ hamiltonian @ left)
    shifted = hamiltonian - centre * np.eye(len(nodes))
    psi = cayley_evolve(shifted, left, t_grid, steps=steps, hbar=kernel.params.hbar)
    logger.debug(f"Grid propagation on {len(nodes)} well nodes, centre energy {centre:.6e}")
    return GridSeries(
        t=np.asarray(t_grid, dtype=float),
        p_left=np.abs(psi @ left) ** 2,
        p_right=np.abs(psi @ right) ** 2,
        norm=np.sum(np.abs(psi) ** 2, axis=1),
    )
