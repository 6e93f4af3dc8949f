"""Total energy, its decomposition, dissipation channels, and consistency checks.

The total energy is

    E = int |u|^2 + lam |grad phi|^2 + 2 lam gamma f(phi) + nu(phi) tr(FF^T - I)

without one-half prefactors, so the semi-discrete balance carries the half on
the rate side: (1/2) dE/dt = -(sum of the dissipation channels).  The ledger
below keeps that convention.

Gradient-square integrals use the face-difference form, which is the
quadratic form of the 5-point Laplacian.  That makes the discrete first
variation of the phi-dependent energy exactly 2 mu with the same Laplacian
the chemical potential uses, so the duality check passes at finite dx and is
limited only by the O(eps^2) error of the central difference in eps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fields import (
    NEUMANN,
    ScalarField,
    grad_sq_integral,
    inner,
    integrate,
    norm_l2,
)
from .model import (
    Params,
    State,
    chemical_potential,
    double_well,
    friction_coefficient,
    tr_FFt_minus_I,
    visco,
)


@dataclass(frozen=True)
class EnergyReport:
    """Energy split and dissipation channels at one time."""

    t: float
    E_total: float
    E_kinetic: float
    E_mixed: float
    E_elastic: float
    D_visc: float = 0.0
    D_mu: float = 0.0
    D_Fdiff: float = 0.0
    D_friction: float = 0.0
    dE_dt_est: float = 0.0

    @property
    def dissipation_sum(self) -> float:
        return self.D_visc + self.D_mu + self.D_Fdiff + self.D_friction


@dataclass(frozen=True)
class LedgerRow:
    """One dissipation-balance row between two reports."""

    t: float
    dt: float
    dE_dt_est: float
    neg_sum_D: float
    gap: float


def _phi_energy(phi_vals: np.ndarray, grid_field: ScalarField, state: State,
                params: Params) -> float:
    """The phi-dependent energy parts (mixed + elastic) for given phi values."""
    phi = ScalarField(grid_field.grid, phi_vals, NEUMANN)
    f, _, _ = double_well(phi_vals, params.h)
    nu, _ = visco(phi_vals, params.nu_t, params.nu_b)
    g = grid_field.grid
    mixed = params.lam * grad_sq_integral(phi) + 2.0 * params.lam * params.gamma * float(
        f.sum() * g.dx * g.dy
    )
    elastic = float((nu * tr_FFt_minus_I(state.F)).sum() * g.dx * g.dy)
    return mixed + elastic


def total_energy(state: State, params: Params) -> EnergyReport:
    """Energy parts only; dissipation entries are left at zero."""
    g = state.grid
    dA = g.dx * g.dy
    u = state.u
    e_kin = float((u.x.values**2 + u.y.values**2).sum() * dA)

    f, _, _ = double_well(state.phi.values, params.h)
    e_mix = params.lam * grad_sq_integral(state.phi) + 2.0 * params.lam * params.gamma * float(
        f.sum() * dA
    )

    nu, _ = visco(state.phi.values, params.nu_t, params.nu_b)
    e_ela = float((nu * tr_FFt_minus_I(state.F)).sum() * dA)

    return EnergyReport(
        t=state.t,
        E_total=e_kin + e_mix + e_ela,
        E_kinetic=e_kin,
        E_mixed=e_mix,
        E_elastic=e_ela,
    )


def dissipation_channels(state: State, params: Params) -> tuple[float, float, float, float]:
    """The four dissipation-rate integrals, each reported nonnegative:

    D_visc     = int eta(phi) |grad u|^2
    D_mu       = tau int |grad mu|^2
    D_Fdiff    = k int nu(phi)^2 sum_ij |grad F^ij|^2
    D_friction = int (eta(phi)/kappa(phi)) (1 - phi) |u|^2 (clamped phi)

    mu is recomputed here with the same operator the stepper uses, so the
    ledger tracks the scheme and not a second discretization.
    """
    from .model import material  # local import keeps module top uncluttered

    g = state.grid
    dA = g.dx * g.dy
    eta = material(state.phi.values, params.eta_t, params.eta_b)

    d_visc = grad_sq_integral(state.u.x, eta) + grad_sq_integral(state.u.y, eta)

    mu = chemical_potential(state, params)
    d_mu = params.tau * grad_sq_integral(mu)

    nu, _ = visco(state.phi.values, params.nu_t, params.nu_b)
    nu_sq = nu * nu
    d_fdiff = params.k * sum(
        grad_sq_integral(c, nu_sq) for c in state.F.components()
    )

    drag = friction_coefficient(state.phi, params).values
    d_fric = float((drag * (state.u.x.values**2 + state.u.y.values**2)).sum() * dA)

    return float(d_visc), float(d_mu), float(d_fdiff), float(d_fric)


def energy_report(state: State, params: Params) -> EnergyReport:
    """Energy parts and dissipation channels in one record."""
    rep = total_energy(state, params)
    d_visc, d_mu, d_fdiff, d_fric = dissipation_channels(state, params)
    return replace(rep, D_visc=d_visc, D_mu=d_mu, D_Fdiff=d_fdiff, D_friction=d_fric)


def ledger_append(report_prev: EnergyReport, report_now: EnergyReport) -> LedgerRow:
    """Dissipation-balance row between two consecutive reports.

    dE_dt_est is the finite-difference energy rate over the interval; the
    channel sum is averaged over the two endpoints.  Since the balance reads
    (1/2) dE/dt = -(sum of channels), the gap is 0.5 * dE_dt_est + sum_D: zero
    for a scheme that dissipates exactly as the continuous identity says,
    negative when the discretization adds damping of its own.
    """
    dt = report_now.t - report_prev.t
    if not dt > 0:
        raise ValueError("reports must be in increasing time order")
    de = (report_now.E_total - report_prev.E_total) / dt
    sum_d = 0.5 * (report_prev.dissipation_sum + report_now.dissipation_sum)
    return LedgerRow(
        t=report_now.t,
        dt=dt,
        dE_dt_est=de,
        neg_sum_D=-sum_d,
        gap=0.5 * de + sum_d,
    )


def first_variation_check(state: State, params: Params, psi: ScalarField,
                          eps: float) -> float:
    """Relative mismatch between the central-difference directional derivative
    of the phi-dependent energy along psi and inner(2 mu, psi).

    psi must be compatible with the zero-flux walls (its one-sided wall slope
    must be small next to its interior gradient); eps must lie in
    [1e-6, 1e-3].
    """
    if not (1e-6 <= eps <= 1e-3):
        raise ValueError("eps must lie in [1e-6, 1e-3]")
    _check_neumann_compatible(psi)

    phi = state.phi.values
    pv = psi.values
    e_plus = _phi_energy(phi + eps * pv, state.phi, state, params)
    e_minus = _phi_energy(phi - eps * pv, state.phi, state, params)
    lhs = (e_plus - e_minus) / (2.0 * eps)

    mu = chemical_potential(state, params)
    rhs = 2.0 * inner(mu, psi)
    return abs(lhs - rhs) / max(abs(rhs), 1e-30)


_WALL_SLOPE_TOL = 0.2


def _check_neumann_compatible(psi: ScalarField) -> None:
    g = psi.grid
    v = psi.values
    wall_sq = (
        np.sum((v[1, :] - v[0, :]) ** 2) / g.dx**2
        + np.sum((v[-1, :] - v[-2, :]) ** 2) / g.dx**2
        + np.sum((v[:, 1] - v[:, 0]) ** 2) / g.dy**2
        + np.sum((v[:, -1] - v[:, -2]) ** 2) / g.dy**2
    ) * g.dx * g.dy
    interior = grad_sq_integral(ScalarField(g, v, NEUMANN))
    if np.sqrt(wall_sq) > _WALL_SLOPE_TOL * np.sqrt(interior) + 1e-30:
        raise ValueError("psi has a wall-normal slope; not compatible with zero-flux walls")
