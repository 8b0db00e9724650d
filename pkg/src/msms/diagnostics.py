"""Entropy, mass and convergence diagnostics of discrete trajectories.

Integrals use the trapezoidal rule on nodal values; field-energy terms use
per-element difference quotients, which is exact for piecewise-linear
potentials and matches the quadrature of the time stepper, so the reported
per-step entropy residual reflects the scheme itself and not a mismatch of
quadratures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fem1d import Grid1D
from .mixture import MixtureSpec, rescaled_k_many
from .msalgebra import mobility_many


@dataclass(eq=False)
class StepReport:
    """Per-step record: entropy, masses, residuals and iteration counts."""

    t: float
    H: float
    masses: np.ndarray
    entropy_residual: float
    iterations: int
    zeta_inf: float
    H_rel: Optional[float] = None
    rho_min: float = 0.0
    rho_max: float = 0.0
    rho_sum_dev: float = 0.0
    rho_step_inf: float = 0.0
    converged: bool = True


def _field_energy(grid: Grid1D, lam: float, pot: np.ndarray) -> float:
    """(lam/2) integral of |d pot/dy|^2 with element-constant gradients."""
    dq = np.diff(pot) / grid.h
    return 0.5 * lam * float(np.sum(dq ** 2) * grid.h)


def entropy(grid: Grid1D, state, lift, spec: MixtureSpec) -> float:
    """Mixing entropy plus electric field energy of one discrete state."""
    mix = state.c_tot * np.sum(state.x * np.log(state.x), axis=0)
    H_mix = float(grid.trapezoid_weights() @ mix)
    return H_mix + _field_energy(grid, spec.lam, state.phi - lift.phi_D)


def relative_entropy(grid: Grid1D, state, steady, spec: MixtureSpec) -> float:
    """Entropy of ``state`` relative to a reference steady state (>= 0)."""
    mix = state.c_tot * np.sum(state.x * np.log(state.x / steady.x), axis=0)
    H_mix = float(grid.trapezoid_weights() @ mix)
    return H_mix + _field_energy(grid, spec.lam, state.phi - steady.phi)


def masses(grid: Grid1D, state) -> np.ndarray:
    """Trapezoidal L1 norms of the species densities; they sum to one."""
    return state.rho @ grid.trapezoid_weights()


def element_mobilities(grid: Grid1D, state, spec: MixtureSpec) -> np.ndarray:
    """Per-element mobility matrices from arithmetically averaged nodal densities."""
    rho_e = 0.5 * (state.rho[:, :-1] + state.rho[:, 1:])
    c_e = (rho_e / spec.M[:, None]).sum(axis=0)
    k_e = rescaled_k_many(spec, c_e)
    return mobility_many(rho_e.T, c_e, k_e)


def entropy_step_residual(
    grid: Grid1D,
    state_k,
    state_km1,
    lift,
    params,
    spec: MixtureSpec,
) -> float:
    """Signed defect of the discrete entropy-production inequality for one step.

    residual = H(k) + tau * int grad(w - w_D) : B grad(w)
                    + eps_reg * tau * int |w - w_D|^2
                    - tau * int sum_i (z_i/M_i) r_i(x) (Phi - Phi_D)
                    - H(k-1)

    Non-positive (to solver tolerance) on every converged step without
    reactions.
    """
    h = grid.h
    tau = params.tau
    w = state_k.u + lift.w_D
    du = np.diff(state_k.u, axis=1) / h
    dw = np.diff(w, axis=1) / h
    B_e = element_mobilities(grid, state_k, spec)
    diffusion = float(np.einsum("ie,eij,je->", du, B_e, dw) * h)

    omega = grid.trapezoid_weights()
    reg = float(params.eps_reg * np.sum(omega * np.sum(state_k.u ** 2, axis=0)))

    production = 0.0
    if spec.r is not None:
        rates = spec.reactions(state_k.x)
        weight = (spec.z / spec.M) @ rates
        production = float(omega @ (weight * (state_k.phi - lift.phi_D)))

    Hk = entropy(grid, state_k, lift, spec)
    Hkm1 = entropy(grid, state_km1, lift, spec)
    return Hk - Hkm1 + tau * (diffusion + reg - production)


def convergence_rates(
    hs: Sequence[float], errs: Sequence[float]
) -> Tuple[List[float], float]:
    """Pairwise and least-squares convergence rates from (h, error) data."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if hs.size < 2:
        raise ValueError("need at least two refinement levels")
    if np.any(errs <= 0.0):
        raise ValueError("errors must be positive")
    slopes = [
        float(np.log(errs[i] / errs[i + 1]) / np.log(hs[i] / hs[i + 1]))
        for i in range(hs.size - 1)
    ]
    fit = np.polyfit(np.log(hs), np.log(errs), 1)
    return slopes, float(fit[0])


def semilog_fit(
    ts: Sequence[float], values: Sequence[float], window: Tuple[float, float]
) -> Tuple[float, float]:
    """Least-squares slope and R^2 of log(values) against t inside a window."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (ts >= window[0]) & (ts <= window[1]) & (values > 0.0)
    if mask.sum() < 3:
        raise ValueError("not enough positive samples in the fit window")
    t = ts[mask]
    logv = np.log(values[mask])
    slope, intercept = np.polyfit(t, logv, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((logv - pred) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2
