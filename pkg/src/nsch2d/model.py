"""Constitutive laws, chemical potential, force terms, and pointwise residuals.

The phase variable phi is 0 in the thrombus and 1 in the blood.  Material
coefficients interpolate between their phi=0 value (suffix _t) and phi=1
value (suffix _b) with a clamped cubic Hermite, which keeps every coefficient
inside its endpoint interval for any real phi.  The transported phi itself is
never clamped; only constitutive evaluations are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    DIRICHLET,
    NEUMANN,
    Grid,
    ScalarField,
    TensorField2,
    VectorField2,
    ddx,
    ddy,
    divergence,
    gradient,
    laplacian,
    norm_l2,
)


@dataclass(frozen=True)
class Params:
    """Physical parameter record for one case.

    eta_*, kappa_*, nu_* are the viscosity, permeability, and elastic modulus
    endpoints; the _b value applies at phi=1 (blood) and the _t value at phi=0
    (thrombus).  lam is the mixing energy density, gamma the interfacial
    mobility, tau the relaxation coefficient, h the interfacial thickness, and
    k the diffusion coefficient of the deformation field.
    """

    eta_b: float
    eta_t: float
    kappa_b: float
    kappa_t: float
    nu_b: float
    nu_t: float
    lam: float
    gamma: float
    tau: float
    h: float
    k: float = 1e-5
    rho: float = 1.0

    def __post_init__(self):
        for name in ("eta_b", "eta_t", "kappa_b", "kappa_t", "nu_b", "nu_t",
                     "lam", "gamma", "tau", "h", "k", "rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"parameter {name} must be positive")


@dataclass
class State:
    """Time-stamped unknown bundle (u, p, phi, F) on one grid."""

    t: float
    u: VectorField2
    p: ScalarField
    phi: ScalarField
    F: TensorField2

    def __post_init__(self):
        g = self.phi.grid
        if self.u.grid != g or self.p.grid != g or self.F.grid != g:
            raise ValueError("state fields must share one grid")

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def copy(self) -> "State":
        return State(self.t, self.u.copy(), self.p.copy(), self.phi.copy(), self.F.copy())


# ---------------------------------------------------------------------------
# pointwise constitutive laws


def double_well(phi_val, h: float):
    """Double-well density f = phi^2 (phi-1)^2 / (4 h^2) and its derivatives.

    Returns (f, f', f''); accepts scalars or arrays.
    """
    if not h > 0:
        raise ValueError("interfacial thickness h must be positive")
    p = np.asarray(phi_val, dtype=np.float64)
    h2 = h * h
    f = p * p * (p - 1.0) ** 2 / (4.0 * h2)
    fp = p * (p - 1.0) * (2.0 * p - 1.0) / (2.0 * h2)
    fpp = (6.0 * p * p - 6.0 * p + 1.0) / (2.0 * h2)
    if np.isscalar(phi_val):
        return float(f), float(fp), float(fpp)
    return f, fp, fpp


def _hermite01(c):
    # c is already clamped to [0, 1]; smoothstep blend with flat endpoints
    return c * c * (3.0 - 2.0 * c)


def visco(phi_val, nu_t: float, nu_b: float):
    """Elastic modulus nu(phi) = nu_t + (nu_b - nu_t) * phi^2 (3 - 2 phi) and
    its derivative, with phi clamped to [0, 1] before evaluation.

    Returns (nu, nu'); nu' vanishes outside [0, 1] and at both endpoints.
    """
    p = np.asarray(phi_val, dtype=np.float64)
    c = np.clip(p, 0.0, 1.0)
    nu = nu_t + (nu_b - nu_t) * _hermite01(c)
    nup = 6.0 * (nu_b - nu_t) * c * (1.0 - c)
    if np.isscalar(phi_val):
        return float(nu), float(nup)
    return nu, nup


def material(phi_val, v_t: float, v_b: float):
    """Shared clamped cubic interpolant used for eta(phi) and kappa(phi)."""
    p = np.asarray(phi_val, dtype=np.float64)
    out = v_t + (v_b - v_t) * _hermite01(np.clip(p, 0.0, 1.0))
    return float(out) if np.isscalar(phi_val) else out


def tr_FFt_minus_I(F: TensorField2) -> np.ndarray:
    """tr(F F^T - I) as a sum of component squares minus 2 (exact in 2D)."""
    return (
        F.xx.values**2 + F.xy.values**2 + F.yx.values**2 + F.yy.values**2 - 2.0
    )


def det_F(F: TensorField2) -> np.ndarray:
    return F.xx.values * F.yy.values - F.xy.values * F.yx.values


# ---------------------------------------------------------------------------
# fields derived from the state


def chemical_potential(state: State, params: Params) -> ScalarField:
    """mu = -lam * laplacian(phi) + lam * gamma * f'(phi) + (nu'(phi)/2) tr(FF^T - I)."""
    phi = state.phi
    _, fp, _ = double_well(phi.values, params.h)
    _, nup = visco(phi.values, params.nu_t, params.nu_b)
    vals = (
        -params.lam * laplacian(phi).values
        + params.lam * params.gamma * fp
        + 0.5 * nup * tr_FFt_minus_I(state.F)
    )
    return ScalarField(phi.grid, vals, NEUMANN)


def capillary_force(phi: ScalarField, lam: float) -> VectorField2:
    """Capillary force -lam * div(grad phi x grad phi) in the split form
    -lam * laplacian(phi) grad(phi) - lam * grad(|grad phi|^2 / 2).

    The second part is a pure gradient; it is kept so the projection step can
    absorb it into the pressure.
    """
    g = phi.grid
    lap = laplacian(phi).values
    gp = gradient(phi)
    sq = ScalarField(g, 0.5 * (gp.x.values**2 + gp.y.values**2), NEUMANN)
    gsq = gradient(sq)
    fx = -lam * (lap * gp.x.values + gsq.x.values)
    fy = -lam * (lap * gp.y.values + gsq.y.values)
    return VectorField2(ScalarField(g, fx, DIRICHLET), ScalarField(g, fy, DIRICHLET))


def elastic_force(phi: ScalarField, F: TensorField2, params: Params) -> VectorField2:
    """Row-wise divergence of the elastic stress nu(phi) (F F^T - I)."""
    g = phi.grid
    nu, _ = visco(phi.values, params.nu_t, params.nu_b)
    xx, xy, yx, yy = (c.values for c in F.components())
    s11 = nu * (xx * xx + xy * xy - 1.0)
    s12 = nu * (xx * yx + xy * yy)
    s22 = nu * (yx * yx + yy * yy - 1.0)
    # stress components inherit phi/F wall symmetry: mirror ghosts
    fx = ddx(ScalarField(g, s11, NEUMANN)).values + ddy(ScalarField(g, s12, NEUMANN)).values
    fy = ddx(ScalarField(g, s12, NEUMANN)).values + ddy(ScalarField(g, s22, NEUMANN)).values
    return VectorField2(ScalarField(g, fx, DIRICHLET), ScalarField(g, fy, DIRICHLET))


def friction_coefficient(phi: ScalarField, params: Params) -> ScalarField:
    """Darcy drag coefficient c = eta(phi) (1 - phi) / kappa(phi), clamped phi.

    Nonnegative everywhere; vanishes in pure blood (phi = 1)."""
    c = np.clip(phi.values, 0.0, 1.0)
    eta = material(c, params.eta_t, params.eta_b)
    kap = material(c, params.kappa_t, params.kappa_b)
    return ScalarField(phi.grid, eta * (1.0 - c) / kap, NEUMANN)


def convect(u: VectorField2, f: ScalarField) -> ScalarField:
    """Plain advective derivative u . grad f (central differences)."""
    gf = gradient(f)
    vals = u.x.values * gf.x.values + u.y.values * gf.y.values
    return ScalarField(f.grid, vals, NEUMANN)


def f_rhs(state: State, params: Params) -> TensorField2:
    """Right-hand side of the deformation equation:
    grad(u) F + k (nu(phi) lap F + 2 grad nu . grad F) - u . grad F,
    componentwise (grad(u) F)^{ij} = sum_k d_k u^i F^{kj}.
    """
    g = state.grid
    u = state.u
    dudx = ddx(u.x).values
    dudy = ddy(u.x).values
    dvdx = ddx(u.y).values
    dvdy = ddy(u.y).values

    nu, nup = visco(state.phi.values, params.nu_t, params.nu_b)
    gphi = gradient(state.phi)
    dnux = nup * gphi.x.values
    dnuy = nup * gphi.y.values

    Fc = {"xx": state.F.xx, "xy": state.F.xy, "yx": state.F.yx, "yy": state.F.yy}
    Fv = {k: f.values for k, f in Fc.items()}

    # grad(u) F per component: rows indexed by the velocity component,
    # columns by the second F index.
    gradu_F = {
        "xx": dudx * Fv["xx"] + dudy * Fv["yx"],
        "xy": dudx * Fv["xy"] + dudy * Fv["yy"],
        "yx": dvdx * Fv["xx"] + dvdy * Fv["yx"],
        "yy": dvdx * Fv["xy"] + dvdy * Fv["yy"],
    }

    out = {}
    for key, f in Fc.items():
        gF = gradient(f)
        diff = params.k * (
            nu * laplacian(f).values + 2.0 * (dnux * gF.x.values + dnuy * gF.y.values)
        )
        adv = u.x.values * gF.x.values + u.y.values * gF.y.values
        out[key] = ScalarField(g, gradu_F[key] + diff - adv, NEUMANN)
    return TensorField2(out["xx"], out["xy"], out["yx"], out["yy"])


# ---------------------------------------------------------------------------
# residual diagnostics


def _viscous_term(u: VectorField2, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """div(eta grad u) per component, fluxes treated with mirror ghosts."""
    g = u.grid
    out = []
    for comp in (u.x, u.y):
        gc = gradient(comp)
        fx = ScalarField(g, eta * gc.x.values, NEUMANN)
        fy = ScalarField(g, eta * gc.y.values, NEUMANN)
        out.append(ddx(fx).values + ddy(fy).values)
    return out[0], out[1]


def residuals(state: State, params: Params, state_prev: State, dt: float) -> dict:
    """Residual norms of the explicit-Euler form of the system.

    Time derivatives are backward differences between the two states; spatial
    terms are evaluated at state_prev, so a state constructed by one explicit
    Euler step of any single equation zeroes that equation's residual.
    Returns L2 norms keyed by equation plus max |det F - 1| of the new state.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    g = state.grid
    up, phip, Fp = state_prev.u, state_prev.phi, state_prev.F

    eta = material(phip.values, params.eta_t, params.eta_b)
    cap = capillary_force(phip, params.lam)
    ela = elastic_force(phip, Fp, params)
    fric = friction_coefficient(phip, params).values
    visc_x, visc_y = _viscous_term(up, eta)
    gp = gradient(state_prev.p)

    rx = (
        params.rho * ((state.u.x.values - up.x.values) / dt + convect(up, up.x).values)
        + gp.x.values
        - visc_x
        - cap.x.values
        - ela.x.values
        + fric * up.x.values
    )
    ry = (
        params.rho * ((state.u.y.values - up.y.values) / dt + convect(up, up.y).values)
        + gp.y.values
        - visc_y
        - cap.y.values
        - ela.y.values
        + fric * up.y.values
    )
    mom = float(
        np.sqrt(
            norm_l2(ScalarField(g, rx, NEUMANN)) ** 2
            + norm_l2(ScalarField(g, ry, NEUMANN)) ** 2
        )
    )

    div = norm_l2(divergence(state.u))

    mu_p = chemical_potential(state_prev, params)
    ch = (state.phi.values - phip.values) / dt + convect(up, phip).values - params.tau * laplacian(mu_p).values
    ch_norm = norm_l2(ScalarField(g, ch, NEUMANN))

    rhsF = f_rhs(state_prev, params)
    f_sq = 0.0
    for now, was, rhs in zip(state.F.components(), Fp.components(), rhsF.components()):
        r = (now.values - was.values) / dt - rhs.values
        f_sq += norm_l2(ScalarField(g, r, NEUMANN)) ** 2

    return {
        "momentum": mom,
        "divergence": div,
        "cahn_hilliard": ch_norm,
        "deformation": float(np.sqrt(f_sq)),
        "detF_max_err": float(np.max(np.abs(det_F(state.F) - 1.0))),
    }


__all__ = [
    "Params",
    "State",
    "double_well",
    "visco",
    "material",
    "tr_FFt_minus_I",
    "det_F",
    "chemical_potential",
    "capillary_force",
    "elastic_force",
    "friction_coefficient",
    "convect",
    "f_rhs",
    "residuals",
]
