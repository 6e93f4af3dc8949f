"""Uniform collocated grid, field containers, and the discrete operators on them.

Cell-centered layout: ``values[i, j]`` lives at ``(origin_x + (i+1/2)dx,
origin_y + (j+1/2)dy)``, axis 0 along x.  Boundary treatment is encoded per
field as a ghost rule (mirror ghosts for zero normal derivative, negated
ghosts for a zero wall value) and applied by the operators on the fly; ghost
cells are never stored.

All implicit solves share one mechanism: with mirror ghosts on a rectangle
the 5-point Laplacian, its square, and the wide Laplacian obtained by
composing the central-difference divergence and gradient are simultaneously
diagonal in the DCT-II basis.  Each solve is therefore one forward transform,
a pointwise division, and one inverse transform, exact to round-off.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dctn, idctn

log = logging.getLogger(__name__)

NEUMANN = "neumann_zero"
DIRICHLET = "dirichlet_zero"

# scipy.fft worker count used by every transform in this module.  Kept at 1 by
# default so runs are bitwise deterministic; see set_fft_workers.
_fft_workers = 1


def set_fft_workers(n: int) -> None:
    """Set the worker count for the cosine transforms (1 = deterministic default,
    0 = one worker per CPU)."""
    global _fft_workers
    if n < 0:
        raise ValueError("worker count must be >= 0")
    import os

    _fft_workers = n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid of cell-centered samples.

    Parameters
    ----------
    nx, ny : int
        Cell counts along x and y, at least 8 each.
    Lx, Ly : float
        Domain edge lengths.
    origin : (float, float)
        Coordinates of the lower-left corner.
    """

    nx: int
    ny: int
    Lx: float
    Ly: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8 cells in each direction")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("domain edge lengths must be positive")

    @classmethod
    def channel(cls, nx: int, ny: int, Lx: float = 2.0, Ly: float = 1.0) -> "Grid":
        """Channel domain [0, Lx] x [-Ly/2, Ly/2], the default for all cases."""
        return cls(nx, ny, Lx, Ly, origin=(0.0, -0.5 * Ly))

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.dy

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        """Full coordinate arrays of shape (nx, ny)."""
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass
class ScalarField:
    """Grid-sampled scalar with a boundary rule (NEUMANN or DIRICHLET)."""

    grid: Grid
    values: np.ndarray
    bc: str = NEUMANN

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )
        if self.bc not in (NEUMANN, DIRICHLET):
            raise ValueError(f"unknown boundary rule {self.bc!r}")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.bc)


@dataclass
class VectorField2:
    """Two scalar components sharing one grid."""

    x: ScalarField
    y: ScalarField

    def __post_init__(self):
        if self.x.grid != self.y.grid:
            raise ValueError("vector components must share one grid")

    @property
    def grid(self) -> Grid:
        return self.x.grid

    def copy(self) -> "VectorField2":
        return VectorField2(self.x.copy(), self.y.copy())


@dataclass
class TensorField2:
    """2x2 tensor of scalar components sharing one grid."""

    xx: ScalarField
    xy: ScalarField
    yx: ScalarField
    yy: ScalarField

    def __post_init__(self):
        g = self.xx.grid
        if any(c.grid != g for c in (self.xy, self.yx, self.yy)):
            raise ValueError("tensor components must share one grid")

    @property
    def grid(self) -> Grid:
        return self.xx.grid

    def components(self) -> tuple[ScalarField, ScalarField, ScalarField, ScalarField]:
        return (self.xx, self.xy, self.yx, self.yy)

    def copy(self) -> "TensorField2":
        return TensorField2(*(c.copy() for c in self.components()))


def full_field(grid: Grid, fill: float, bc: str = NEUMANN) -> ScalarField:
    return ScalarField(grid, np.full((grid.nx, grid.ny), float(fill)), bc)


def zero_field(grid: Grid, bc: str = NEUMANN) -> ScalarField:
    return full_field(grid, 0.0, bc)


def field_from_function(grid: Grid, fn, bc: str = NEUMANN) -> ScalarField:
    """Sample fn(X, Y) at the cell centers."""
    X, Y = grid.meshes()
    return ScalarField(grid, np.asarray(fn(X, Y), dtype=np.float64), bc)


def zero_vector(grid: Grid, bc: str = DIRICHLET) -> VectorField2:
    return VectorField2(zero_field(grid, bc), zero_field(grid, bc))


def identity_tensor(grid: Grid) -> TensorField2:
    return TensorField2(
        full_field(grid, 1.0),
        zero_field(grid),
        zero_field(grid),
        full_field(grid, 1.0),
    )


# ---------------------------------------------------------------------------
# stencil operators


def _extend(vals: np.ndarray, axis: int, bc: str) -> np.ndarray:
    """Add one ghost layer on each side along axis per the boundary rule."""
    first = vals.take([0], axis=axis)
    last = vals.take([-1], axis=axis)
    if bc == DIRICHLET:
        first, last = -first, -last
    return np.concatenate([first, vals, last], axis=axis)


def _diff_center(vals: np.ndarray, axis: int, bc: str, d: float) -> np.ndarray:
    ex = _extend(vals, axis, bc)
    if axis == 0:
        return (ex[2:, :] - ex[:-2, :]) / (2.0 * d)
    return (ex[:, 2:] - ex[:, :-2]) / (2.0 * d)


def _second_diff(vals: np.ndarray, axis: int, bc: str, d: float) -> np.ndarray:
    ex = _extend(vals, axis, bc)
    if axis == 0:
        return (ex[2:, :] - 2.0 * vals + ex[:-2, :]) / (d * d)
    return (ex[:, 2:] - 2.0 * vals + ex[:, :-2]) / (d * d)


def _flip(bc: str) -> str:
    # One derivative swaps the wall symmetry: even profiles (mirror ghosts)
    # become odd and vice versa.
    return DIRICHLET if bc == NEUMANN else NEUMANN


def ddx(f: ScalarField) -> ScalarField:
    """Central x-derivative.  The result carries the flipped boundary rule."""
    g = f.grid
    return ScalarField(g, _diff_center(f.values, 0, f.bc, g.dx), _flip(f.bc))


def ddy(f: ScalarField) -> ScalarField:
    """Central y-derivative.  The result carries the flipped boundary rule."""
    g = f.grid
    return ScalarField(g, _diff_center(f.values, 1, f.bc, g.dy), _flip(f.bc))


def gradient(f: ScalarField) -> VectorField2:
    """Central-difference gradient with ghost cells from f's boundary rule."""
    return VectorField2(ddx(f), ddy(f))


def divergence(v: VectorField2) -> ScalarField:
    """Central-difference divergence; each component supplies its own ghosts."""
    g = v.grid
    d = _diff_center(v.x.values, 0, v.x.bc, g.dx) + _diff_center(
        v.y.values, 1, v.y.bc, g.dy
    )
    return ScalarField(g, d, NEUMANN)


def laplacian(f: ScalarField) -> ScalarField:
    """5-point Laplacian with mirror (NEUMANN) or negated (DIRICHLET) ghosts."""
    g = f.grid
    lap = _second_diff(f.values, 0, f.bc, g.dx) + _second_diff(f.values, 1, f.bc, g.dy)
    return ScalarField(g, lap, f.bc)


# ---------------------------------------------------------------------------
# quadrature and inner products


def integrate(f: ScalarField) -> float:
    """Midpoint quadrature, sum(values) * dx * dy."""
    g = f.grid
    return float(f.values.sum() * g.dx * g.dy)


def mean(f: ScalarField) -> float:
    return integrate(f) / f.grid.area


def inner(f: ScalarField, g: ScalarField) -> float:
    gr = f.grid
    return float(np.sum(f.values * g.values) * gr.dx * gr.dy)


def norm_l2(f: ScalarField) -> float:
    return float(np.sqrt(max(inner(f, f), 0.0)))


def norm_linf(f: ScalarField) -> float:
    return float(np.max(np.abs(f.values)))


def grad_sq_integral(f: ScalarField, weight: np.ndarray | None = None) -> float:
    """Integral of |grad f|^2 by face differences.

    This is the quadratic form of the 5-point Laplacian: for unit weight,
    grad_sq_integral(f) == -inner(laplacian(f), f) to round-off, which is what
    makes the energy consistent with the chemical potential.  A cell-sampled
    weight is averaged onto interior faces.  Dirichlet fields pick up wall
    terms (the ghost value is the negated cell value); mirror walls contribute
    nothing.
    """
    g = f.grid
    v = f.values
    if weight is None:
        wx = wy = None
    else:
        weight = np.asarray(weight, dtype=np.float64)
        wx = 0.5 * (weight[1:, :] + weight[:-1, :])
        wy = 0.5 * (weight[:, 1:] + weight[:, :-1])

    fx = (v[1:, :] - v[:-1, :]) / g.dx
    fy = (v[:, 1:] - v[:, :-1]) / g.dy
    total = np.sum(fx * fx if wx is None else wx * fx * fx)
    total += np.sum(fy * fy if wy is None else wy * fy * fy)
    if f.bc == DIRICHLET:
        # ghost = -value, so the wall face contributes (2 v / d)^2 * d/4 * ...
        # folded into the same quadratic form: 2 v^2 / d^2 per wall cell.
        ww = np.ones_like(v) if weight is None else weight
        total += 2.0 * np.sum(ww[0, :] * v[0, :] ** 2) / g.dx**2
        total += 2.0 * np.sum(ww[-1, :] * v[-1, :] ** 2) / g.dx**2
        total += 2.0 * np.sum(ww[:, 0] * v[:, 0] ** 2) / g.dy**2
        total += 2.0 * np.sum(ww[:, -1] * v[:, -1] ** 2) / g.dy**2
    return float(total * g.dx * g.dy)


def bilinear_sample(f: ScalarField, x, y):
    """Bilinear interpolation between cell centers, clamped at the domain edge.

    Accepts scalars or arrays; returns a float for scalar input.
    """
    g = f.grid
    fx = np.clip((np.asarray(x, dtype=np.float64) - g.origin[0]) / g.dx - 0.5, 0.0, g.nx - 1.0)
    fy = np.clip((np.asarray(y, dtype=np.float64) - g.origin[1]) / g.dy - 0.5, 0.0, g.ny - 1.0)
    i0 = np.minimum(fx.astype(np.int64), g.nx - 2) if g.nx > 1 else fx.astype(np.int64)
    j0 = np.minimum(fy.astype(np.int64), g.ny - 2) if g.ny > 1 else fy.astype(np.int64)
    wx = fx - i0
    wy = fy - j0
    v = f.values
    out = (
        (1 - wx) * (1 - wy) * v[i0, j0]
        + wx * (1 - wy) * v[i0 + 1, j0]
        + (1 - wx) * wy * v[i0, j0 + 1]
        + wx * wy * v[i0 + 1, j0 + 1]
    )
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# cosine-basis direct solvers


def _require_finite(vals: np.ndarray, what: str) -> None:
    if not np.isfinite(vals).all():
        raise ValueError(f"{what} contains non-finite values")


@lru_cache(maxsize=64)
def _lap_eigs(grid: Grid) -> np.ndarray:
    """Eigenvalues of the mirror-ghost 5-point Laplacian in the DCT-II basis."""
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    lx = (2.0 * np.cos(np.pi * kx / grid.nx) - 2.0) / grid.dx**2
    ly = (2.0 * np.cos(np.pi * ky / grid.ny) - 2.0) / grid.dy**2
    return lx[:, None] + ly[None, :]


@lru_cache(maxsize=64)
def _wide_lap_eigs(grid: Grid) -> np.ndarray:
    """Eigenvalues of divergence(gradient(.)), the wide central-difference
    Laplacian, in the same DCT-II basis.

    The central gradient of a cosine mode is its sine image; the negated-ghost
    central divergence maps it back, so the composition is diagonal with
    symbol -sin^2(pi k / n) / d^2 per direction.
    """
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    lx = -(np.sin(np.pi * kx / grid.nx) ** 2) / grid.dx**2
    ly = -(np.sin(np.pi * ky / grid.ny) ** 2) / grid.dy**2
    return lx[:, None] + ly[None, :]


def _dct(vals: np.ndarray) -> np.ndarray:
    return dctn(vals, type=2, norm="ortho", workers=_fft_workers)


def _idct(vals: np.ndarray) -> np.ndarray:
    return idctn(vals, type=2, norm="ortho", workers=_fft_workers)


def _poisson_solve(rhs: ScalarField, eigs: np.ndarray, what: str) -> ScalarField:
    _require_finite(rhs.values, what)
    g = rhs.grid
    raw_mean = float(rhs.values.mean())
    if raw_mean != 0.0:
        scale = float(np.max(np.abs(rhs.values)))
        if scale > 0 and abs(raw_mean) > 1e-10 * scale:
            log.debug("%s: right-hand side mean %.3e (subtracted)", what, raw_mean)
    hat = _dct(rhs.values)
    hat[0, 0] = 0.0  # compatibility: solve against the zero-mean part
    denom = eigs.copy()
    denom[0, 0] = 1.0
    return ScalarField(g, _idct(hat / denom), NEUMANN)


def solve_poisson_neumann(rhs: ScalarField) -> ScalarField:
    """Solve laplacian(q) = rhs - mean(rhs) with zero-flux walls; q has zero mean."""
    return _poisson_solve(rhs, _lap_eigs(rhs.grid), "poisson")


def solve_poisson_neumann_wide(rhs: ScalarField) -> ScalarField:
    """Solve divergence(gradient(q)) = rhs - mean(rhs); q has zero mean.

    This is the operator the velocity projection must invert so that the
    corrected field has zero central-difference divergence in every mode.
    """
    return _poisson_solve(rhs, _wide_lap_eigs(rhs.grid), "poisson-wide")


def solve_helmholtz_neumann(f: ScalarField, a: float) -> ScalarField:
    """Solve (I - a * laplacian) w = f with zero-flux walls, a >= 0."""
    if a < 0:
        raise ValueError("helmholtz coefficient must be nonnegative")
    _require_finite(f.values, "helmholtz")
    hat = _dct(f.values)
    w = _idct(hat / (1.0 - a * _lap_eigs(f.grid)))
    return ScalarField(f.grid, w, NEUMANN)


def solve_ch_implicit(f: ScalarField, b: float, s: float) -> ScalarField:
    """Solve (I + b * laplacian^2 - s * laplacian) w = f with zero-flux walls.

    The discrete biharmonic here is exactly laplacian(laplacian(.)) with
    mirror ghosts, so the DCT-II diagonalization is exact.
    """
    if b < 0 or s < 0:
        raise ValueError("biharmonic solve coefficients must be nonnegative")
    _require_finite(f.values, "biharmonic")
    lam = _lap_eigs(f.grid)
    hat = _dct(f.values)
    w = _idct(hat / (1.0 + b * lam * lam - s * lam))
    return ScalarField(f.grid, w, NEUMANN)
