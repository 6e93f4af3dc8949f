"""One IMEX time step of the coupled system.

Sub-step order:

(a) Cahn-Hilliard: the biharmonic part and a constant-coefficient
    stabilization are implicit, everything else (advection, double-well and
    elastic contributions to the potential) explicit at the old phi.
(b) Deformation field: explicit Euler; the diffusion coefficient k is small
    enough that this imposes no practical step restriction, with the elastic
    modulus evaluated at the new phi for consistency with (a).
(c) Momentum: constant-coefficient implicit viscosity at the splitting value
    etabar = max(eta endpoints), the variable-coefficient remainder explicit,
    capillary and elastic forces explicit, then the Darcy drag applied
    pointwise implicitly (it is diagonal, so this is exact and unconditionally
    stable; drag coefficients reach 1e4 and would otherwise dictate dt).
    Wall values are re-imposed after the solve: the implicit solve runs in the
    mirror-ghost transform basis, so the no-slip condition is enforced by
    zeroing the boundary cells, an O(dx) penalty at the walls.
(d) Projection: the corrected velocity is made divergence-free by inverting
    the composition divergence(gradient(.)), which removes the central-
    difference divergence in every mode at once, and the removed potential is
    stored as the pressure.

Mass of phi is conserved to round-off: the advection term is applied in
conservative form div(u phi), whose negated-ghost column sums telescope to
zero, and the implicit solve leaves the mean mode untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fields import (
    DIRICHLET,
    NEUMANN,
    ScalarField,
    TensorField2,
    VectorField2,
    _diff_center,
    ddx,
    ddy,
    divergence,
    gradient,
    laplacian,
    norm_linf,
    solve_ch_implicit,
    solve_helmholtz_neumann,
    solve_poisson_neumann_wide,
)
from .model import (
    Params,
    State,
    capillary_force,
    convect,
    double_well,
    elastic_force,
    f_rhs,
    friction_coefficient,
    material,
    tr_FFt_minus_I,
    visco,
)

DT_MAX = 1e-3


@dataclass(frozen=True)
class StepConfig:
    """Time-step configuration.

    stab_s defaults to 2 * lam * gamma / h^2 (resolved against the active
    parameters), visc_split to max(eta_b, eta_t).
    """

    dt: float = DT_MAX
    stab_s: float | None = None
    visc_split: float | None = None
    cfl_safety: float = 0.5
    dt_max: float = DT_MAX

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.stab_s is not None and self.stab_s < 0:
            raise ValueError("stab_s must be nonnegative")
        if self.visc_split is not None and not self.visc_split > 0:
            raise ValueError("visc_split must be positive")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")


class StepError(RuntimeError):
    """Raised when a sub-step produces non-finite values."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def default_stab(params: Params) -> float:
    return 2.0 * params.lam * params.gamma / params.h**2


def _check(stage: str, *arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.isfinite(a).all():
            raise StepError(stage, "non-finite field values")


def _div_u_phi(u: VectorField2, phi: ScalarField) -> np.ndarray:
    """Conservative advection div(u phi) with negated flux ghosts.

    The flux u phi vanishes at the walls (no slip), so the odd extension is
    the consistent one; its column sums telescope to zero exactly, which is
    what keeps mean(phi) constant in time.
    """
    g = phi.grid
    fx = u.x.values * phi.values
    fy = u.y.values * phi.values
    return _diff_center(fx, 0, DIRICHLET, g.dx) + _diff_center(fy, 1, DIRICHLET, g.dy)


def _visc_remainder(comp: ScalarField, delta_eta: np.ndarray) -> np.ndarray:
    """div((eta - etabar) grad u_c); fluxes carry mirror ghosts."""
    g = comp.grid
    gc = gradient(comp)
    fx = ScalarField(g, delta_eta * gc.x.values, NEUMANN)
    fy = ScalarField(g, delta_eta * gc.y.values, NEUMANN)
    return ddx(fx).values + ddy(fy).values


def project(v: VectorField2) -> tuple[VectorField2, ScalarField]:
    """Helmholtz-Leray projection onto the discretely divergence-free space.

    Solves div(grad q) = div(v) with the wide-stencil cosine-basis solve and
    subtracts grad q, so the returned velocity has zero central-difference
    divergence up to round-off (the operators are exact adjoints, making this
    an orthogonal projection).  Returns (projected velocity, zero-mean q).
    """
    g = v.grid
    d = divergence(v)
    q = solve_poisson_neumann_wide(d)
    gq = gradient(q)
    vx = ScalarField(g, v.x.values - gq.x.values, v.x.bc)
    vy = ScalarField(g, v.y.values - gq.y.values, v.y.bc)
    return VectorField2(vx, vy), q


def step(state: State, params: Params, cfg: StepConfig) -> State:
    """Advance the state by cfg.dt with the IMEX splitting described above."""
    g = state.grid
    dt = cfg.dt
    stab = cfg.stab_s if cfg.stab_s is not None else default_stab(params)
    etabar = cfg.visc_split if cfg.visc_split is not None else max(params.eta_b, params.eta_t)
    rho = params.rho

    phi = state.phi
    u = state.u
    F = state.F

    # (a) Cahn-Hilliard update
    _, fp, _ = double_well(phi.values, params.h)
    _, nup = visco(phi.values, params.nu_t, params.nu_b)
    g_explicit = ScalarField(
        g, params.lam * params.gamma * fp + 0.5 * nup * tr_FFt_minus_I(F), NEUMANN
    )
    rhs_phi = (
        phi.values
        - dt * _div_u_phi(u, phi)
        + dt * params.tau * laplacian(g_explicit).values
        - dt * stab * laplacian(phi).values
    )
    phi1 = solve_ch_implicit(
        ScalarField(g, rhs_phi, NEUMANN), dt * params.tau * params.lam, dt * stab
    )
    _check("cahn-hilliard", phi1.values)

    # (b) deformation update, elastic modulus at the new phi
    dF = f_rhs(replace(state, phi=phi1), params)
    F1 = TensorField2(
        *(
            ScalarField(g, c.values + dt * r.values, NEUMANN)
            for c, r in zip(F.components(), dF.components())
        )
    )
    _check("deformation", *(c.values for c in F1.components()))

    # (c) momentum predictor
    eta1 = material(phi1.values, params.eta_t, params.eta_b)
    delta_eta = eta1 - etabar
    cap = capillary_force(phi1, params.lam)
    ela = elastic_force(phi1, F1, params)
    a = dt * etabar / rho

    ustar = []
    for comp, force in ((u.x, (cap.x, ela.x)), (u.y, (cap.y, ela.y))):
        rhs = (
            comp.values
            - dt * convect(u, comp).values
            + (dt / rho)
            * (_visc_remainder(comp, delta_eta) + force[0].values + force[1].values)
        )
        w = solve_helmholtz_neumann(ScalarField(g, rhs, NEUMANN), a)
        ustar.append(w.values)

    drag = friction_coefficient(phi1, params).values
    damp = 1.0 + dt * drag / rho
    for vals in ustar:
        vals /= damp
        # no-slip re-imposition on the boundary cells
        vals[0, :] = 0.0
        vals[-1, :] = 0.0
        vals[:, 0] = 0.0
        vals[:, -1] = 0.0
    _check("momentum", *ustar)

    # (d) projection and pressure update
    v = VectorField2(
        ScalarField(g, ustar[0], DIRICHLET), ScalarField(g, ustar[1], DIRICHLET)
    )
    u1, q = project(v)
    p1 = ScalarField(g, rho * q.values / dt, NEUMANN)
    _check("projection", u1.x.values, u1.y.values, p1.values)

    return State(state.t + dt, u1, p1, phi1, F1)


def cfl_dt(state: State, params: Params, cfg: StepConfig) -> float:
    """Largest admissible step from the explicit terms, times cfg.cfl_safety,
    never above cfg.dt_max.

    Bounds: advection of velocity and phi (dx / max|u|) and the explicit
    diffusion of the deformation field (dx^2 / (4 k nu_max)).  The implicit
    terms impose none.
    """
    if not (0.0 < cfg.cfl_safety <= 1.0):
        raise ValueError("cfl_safety must lie in (0, 1]")
    g = state.grid
    eps = 1e-30
    umax = max(norm_linf(state.u.x), norm_linf(state.u.y))
    nu_max = max(params.nu_b, params.nu_t)
    bound = min(
        g.dx / (umax + eps),
        g.dy / (umax + eps),
        g.dx * g.dx / (4.0 * params.k * nu_max),
    )
    return min(cfg.cfl_safety * bound, cfg.dt_max)
