"""Geometry, bare box eigenmodes and atom-cavity mode overlaps.

Coordinates: the outer walls sit at x = -(l + d/2) and x = l + d/2, the
central barrier (seen by internal state ``a`` only) covers (-d/2, d/2).
All mode functions are real infinite-well eigenfunctions, positive just
inside the left edge of their support, so every coupling g_{sigma j} is real.
"""
from __future__ import annotations

from enum import Enum
from typing import Annotated, Literal
import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    model_validator,
)
from scipy import integrate

from t3k.core.errors import ConvergenceError, ProfileError

logger = logging.getLogger(__name__)

# |1 - j^2 l^2 / Lb^2| below this selects the sin^2 branch of the overlap
DEGENERATE_TOL = 1e-9
QUAD_ATOL = 1e-12
QUAD_RTOL = 1e-13


class Species(str, Enum):
    """Spatial mode families."""

    A_LEFT = "a_left"
    A_RIGHT = "a_right"
    B = "b"


class Side(str, Enum):
    """The two wells seen by internal state a."""

    L = "L"
    R = "R"

    @property
    def species(self) -> Species:
        return Species.A_LEFT if self is Side.L else Species.A_RIGHT


class Geometry(BaseModel):
    """Well width ``ell`` and central barrier thickness ``d``."""

    model_config = ConfigDict(frozen=True)

    ell: PositiveFloat
    d: PositiveFloat

    @property
    def box_width(self) -> float:
        """Width 2l + d of the b-atom box."""
        return 2.0 * self.ell + self.d

    @property
    def outer_edge(self) -> float:
        return self.ell + self.d / 2.0

    def support(self, species: Species) -> tuple[float, float]:
        """Interval on which modes of ``species`` are nonzero."""
        if species is Species.A_LEFT:
            return -self.outer_edge, -self.d / 2.0
        if species is Species.A_RIGHT:
            return self.d / 2.0, self.outer_edge
        return -self.outer_edge, self.outer_edge


class ConstantProfile(BaseModel):
    """Cavity mode function C(x) = value over the whole box."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["constant"] = "constant"
    value: float = 1.0

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        return np.full_like(np.asarray(x, dtype=float), self.value)


class SampledProfile(BaseModel):
    """Cavity mode function given on a grid, linearly interpolated."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["sampled"] = "sampled"
    x: tuple[float, ...]
    values: tuple[float, ...]

    @model_validator(mode="after")
    def check_grid(self) -> SampledProfile:
        if len(self.x) < 2:
            raise ValueError("a sampled profile needs at least two points")
        if len(self.x) != len(self.values):
            raise ValueError(
                f"x has {len(self.x)} points but values has {len(self.values)}"
            )
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("profile x grid must be strictly increasing")
        return self

    def covers(self, lo: float, hi: float) -> bool:
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        return self.x[0] <= lo + slack and self.x[-1] >= hi - slack

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        return np.interp(np.asarray(x, dtype=float), self.x, self.values)


CavityProfile = Annotated[ConstantProfile | SampledProfile, Field(discriminator="kind")]


class ModelParams(BaseModel):
    """Parameters of the atom-cavity model in natural units (hbar = 1 by default).

    ``Omega_a``/``Omega_b`` are the internal energies divided by hbar, ``omega_c``
    the cavity frequency and ``g0`` the coupling parameter g of the mode overlaps.
    """

    model_config = ConfigDict(frozen=True)

    geometry: Geometry
    m: PositiveFloat
    Omega_a: float = 0.0
    Omega_b: float
    omega_c: NonNegativeFloat = 10.0
    g0: NonNegativeFloat
    cavity_profile: CavityProfile = ConstantProfile()
    hbar: PositiveFloat = 1.0

    @classmethod
    def from_detuning(
        cls,
        geometry: Geometry,
        m: float,
        Delta: float,
        g0: float,
        *,
        omega_c: float = 10.0,
        Omega_a: float = 0.0,
        hbar: float = 1.0,
        cavity_profile: ConstantProfile | SampledProfile | None = None,
    ) -> ModelParams:
        """Build parameters from the detuning Delta = Omega_b + omega_c - omega_1^(a)."""
        omega_a = Omega_a + kinetic_frequency(hbar, m, geometry.ell, 1)
        return cls(
            geometry=geometry,
            m=m,
            Omega_a=Omega_a,
            Omega_b=Delta - omega_c + omega_a,
            omega_c=omega_c,
            g0=g0,
            cavity_profile=cavity_profile or ConstantProfile(),
            hbar=hbar,
        )

    @property
    def omega_a(self) -> float:
        """omega_1^(a): frequency of the two degenerate lowest a-modes."""
        return self.Omega_a + kinetic_frequency(self.hbar, self.m, self.geometry.ell, 1)

    @property
    def Delta(self) -> float:
        return self.Omega_b + self.omega_c - self.omega_a

    @property
    def xi(self) -> float:
        """Non-locality length sqrt(hbar / 2 m |Delta|)."""
        return math.sqrt(self.hbar / (2.0 * self.m * abs(self.Delta)))

    @property
    def is_constant_profile(self) -> bool:
        return isinstance(self.cavity_profile, ConstantProfile)

    @property
    def g_tilde0(self) -> float:
        """g * C for a constant cavity profile."""
        if not isinstance(self.cavity_profile, ConstantProfile):
            raise ProfileError("g_tilde0 is only defined for a constant cavity profile")
        return self.g0 * self.cavity_profile.value

    def detuning(self, j: ArrayLike) -> NDArray[np.float64]:
        """delta_j = omega_j^(b) + omega_c - omega_1^(a) (kinetic offsets kept exactly)."""
        jj = np.asarray(j, dtype=float)
        kinetic = kinetic_frequency(self.hbar, self.m, self.geometry.box_width, jj)
        return self.Delta + kinetic

    def replace(self, **changes: object) -> ModelParams:
        """Copy with changes, re-running validation."""
        data = self.model_dump()
        data.update(changes)
        return ModelParams.model_validate(data)


class ModeId(BaseModel):
    """A spatial mode: species plus quantum number j >= 1."""

    model_config = ConfigDict(frozen=True)

    species: Species
    j: PositiveInt = 1


def kinetic_frequency(hbar: float, m: float, width: float, j: ArrayLike) -> NDArray[np.float64]:
    """hbar pi^2 j^2 / (2 m width^2), the infinite-well kinetic term over hbar."""
    jj = np.asarray(j, dtype=float)
    return hbar * math.pi**2 * jj**2 / (2.0 * m * width**2)


def mode_frequency(params: ModelParams, mode: ModeId) -> float:
    """Bare eigenfrequency of a spatial mode (internal energy included)."""
    if mode.species is Species.B:
        kinetic = kinetic_frequency(params.hbar, params.m, params.geometry.box_width, mode.j)
        return float(params.Omega_b + kinetic)
    kinetic = kinetic_frequency(params.hbar, params.m, params.geometry.ell, mode.j)
    return float(params.Omega_a + kinetic)


def mode_function(params: ModelParams, mode: ModeId, x: ArrayLike) -> NDArray[np.float64]:
    """Normalised infinite-well eigenfunction, zero outside its support.

    Raises:
        ValueError: If any x lies outside the outer walls
    """
    geometry = params.geometry
    xs = np.asarray(x, dtype=float)
    edge = geometry.outer_edge
    if np.any(np.abs(xs) > edge * (1.0 + 1e-12)):
        raise ValueError(f"x outside the outer walls [-{edge}, {edge}]")
    lo, hi = geometry.support(mode.species)
    width = hi - lo
    inside = (xs >= lo) & (xs <= hi)
    u = np.clip(xs - lo, 0.0, width)
    phi = math.sqrt(2.0 / width) * np.sin(mode.j * math.pi * u / width)
    return np.where(inside, phi, 0.0)


def _closed_overlap(geometry: Geometry, j: NDArray[np.float64]) -> NDArray[np.float64]:
    """Integral of phi_L^(a) phi_j^(b) over the left well, closed form."""
    ell, lb = geometry.ell, geometry.box_width
    ratio = 1.0 - (j * ell / lb) ** 2
    degenerate = np.abs(ratio) < DEGENERATE_TOL
    k1 = math.pi / ell
    safe = np.where(degenerate, 1.0, ratio)
    # int_0^l sin(k1 u) sin(kj u) du = sin(kj l) / (k1 (1 - kj^2/k1^2))
    generic = np.sin(j * math.pi * ell / lb) / (k1 * safe)
    integral = np.where(degenerate, ell / 2.0, generic)
    return 2.0 / math.sqrt(ell * lb) * integral


def _quad(  # type: ignore[no-untyped-def]
    func, lo: float, hi: float, atol: float, points=None
) -> float:
    """scipy quad wrapper that signals non-convergence."""
    limit = 200 if points is None else max(200, 4 * len(points))
    result = integrate.quad(
        func, lo, hi, epsabs=atol, epsrel=QUAD_RTOL, limit=limit, points=points, full_output=1
    )
    value, abserr = result[0], result[1]
    warned = len(result) > 3
    if warned:
        logger.debug(f"quad on [{lo}, {hi}]: {result[3]}")
    if not np.isfinite(value) or (warned and abserr > 10.0 * max(atol, QUAD_RTOL * abs(value))):
        raise ConvergenceError(
            f"quadrature on [{lo}, {hi}] did not converge (estimate {value}, error {abserr})"
        )
    return float(value)


def _quadrature_overlap(params: ModelParams, side: Side, j: int, atol: float) -> float:
    geometry = params.geometry
    lo, hi = geometry.support(side.species)
    profile = params.cavity_profile
    points = None
    if isinstance(profile, SampledProfile):
        if not profile.covers(lo, hi):
            raise ProfileError(
                f"sampled cavity profile [{profile.x[0]}, {profile.x[-1]}] does not cover "
                f"the {side.value} well [{lo}, {hi}]"
            )
        inner = [p for p in profile.x if lo < p < hi]
        points = inner or None
    a_mode = ModeId(species=side.species, j=1)
    b_mode = ModeId(species=Species.B, j=j)

    def integrand(x: float) -> float:
        return float(
            mode_function(params, a_mode, x) * mode_function(params, b_mode, x) * profile(x)
        )

    return params.g0 * _quad(integrand, lo, hi, atol, points)


def coupling_overlap(
    params: ModelParams,
    sigma: Side | str,
    j: int,
    *,
    method: Literal["auto", "closed", "quadrature"] = "auto",
    atol: float = QUAD_ATOL,
) -> float:
    """Mode coupling g_{sigma j} = g * int phi_sigma^(a) phi_j^(b) C dx.

    ``auto`` uses the closed form for constant profiles and adaptive
    quadrature otherwise.
    """
    side = Side(sigma)
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    closed = params.is_constant_profile
    if method == "closed" and not closed:
        raise ProfileError("closed-form overlaps need a constant cavity profile")
    if method == "quadrature" or (method == "auto" and not closed):
        return _quadrature_overlap(params, side, j, atol)

    g_left = params.g_tilde0 * float(_closed_overlap(params.geometry, np.array([float(j)]))[0])
    if side is Side.R and j % 2 == 0:
        return -g_left
    return g_left


def coupling_table(
    params: ModelParams, j_max: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Couplings (g_L, g_R) for j = 1..j_max."""
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")
    if not params.is_constant_profile:
        g_left = np.array([coupling_overlap(params, Side.L, j) for j in range(1, j_max + 1)])
        g_right = np.array([coupling_overlap(params, Side.R, j) for j in range(1, j_max + 1)])
        return g_left, g_right
    j = np.arange(1, j_max + 1, dtype=float)
    g_left = params.g_tilde0 * _closed_overlap(params.geometry, j)
    sign = np.where(np.arange(1, j_max + 1) % 2 == 1, 1.0, -1.0)
    return g_left, sign * g_left
