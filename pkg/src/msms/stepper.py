"""Implicit Euler time stepping in entropy variables.

Each step solves the nonlinear discrete system by a linearized semi-implicit
iteration: the density map is linearized around the current iterate, the
mobility matrix is frozen there, and the resulting block-tridiagonal system
in the increment (one block of n-1 species unknowns plus the potential per
node) is solved directly.  The iteration stops when the sup norm of the
increment drops below the tolerance.

Quadrature choices: time-derivative, regularization and charge pairings use
nodal values with trapezoidal weights, which makes per-species mass
conservation and the discrete entropy-production inequality hold at the
level of the linear-solver tolerance; mobility matrices are evaluated per
element from arithmetically averaged nodal densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import diagnostics
from .errors import InvalidScenarioError, NonConvergenceError
from .fem1d import BandedSystem, BlockTridiagonal, Grid1D, poisson_solve, solve_banded
from .mixture import MixtureSpec
from .statemap import invert_states, state_jacobians


@dataclass(frozen=True)
class SolverParams:
    """Numerical parameters of the time stepper."""

    tau: float = 1e-3
    eps_reg: float = 2.0 ** -52
    eps_tol: float = 1e-10
    m_max: int = 100
    eta: float = 1e-5
    coupled_solve: bool = True

    def __post_init__(self):
        if self.tau <= 0 or self.eps_tol <= 0 or self.eta <= 0:
            raise InvalidScenarioError("tau, eps_tol and eta must be positive")
        if self.eps_reg < 0 or self.m_max < 1:
            raise InvalidScenarioError("eps_reg must be >= 0 and m_max >= 1")


@dataclass(frozen=True, eq=False)
class Lift:
    """Boundary lift: potential Phi_D solving the background problem and w_D."""

    phi_D: np.ndarray  # (N,)
    w_D: np.ndarray  # (n-1, N)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete experiment: mixture, grid, data, horizon and solver settings."""

    spec: MixtureSpec
    grid: Grid1D
    initial_profile: Callable[[np.ndarray], np.ndarray]
    phi_bc: Tuple[float, float]
    T: float
    params: SolverParams = field(default_factory=SolverParams)
    output_every: Optional[float] = None
    hstar: str = "none"  # "none" | "stationary" | "constant"
    name: str = ""


@dataclass(frozen=True, eq=False)
class State:
    """Nodal solution at one time: shifted potentials u = w - w_D, potential,
    and the derived per-node composition fields."""

    u: np.ndarray  # (n-1, N)
    phi: np.ndarray  # (N,)
    x: np.ndarray  # (n, N)
    rho: np.ndarray  # (n, N)
    c_tot: np.ndarray  # (N,)
    t: float

    @classmethod
    def from_uphi(
        cls,
        spec: MixtureSpec,
        lift: Lift,
        u: np.ndarray,
        phi: np.ndarray,
        t: float,
    ) -> "State":
        x, rho, c_tot = invert_states(u + lift.w_D, phi, spec)
        return cls(u=u, phi=phi, x=x, rho=rho, c_tot=c_tot, t=t)


def build_lift(scenario: Scenario) -> Lift:
    """Solve -lam Phi_D'' = f with the scenario's Dirichlet data; w_D follows."""
    spec, grid = scenario.spec, scenario.grid
    f_nodes = spec.background_charge(grid.nodes)
    phi_D = poisson_solve(grid, f_nodes, spec.lam, scenario.phi_bc)
    w_D = spec.phi_coupling[:, None] * phi_D[None, :]
    return Lift(phi_D=phi_D, w_D=w_D)


def init_state(scenario: Scenario, lift: Optional[Lift] = None) -> State:
    """Floored initial densities, the induced potential and entropy variables."""
    spec, grid = scenario.spec, scenario.grid
    if lift is None:
        lift = build_lift(scenario)
    eta = scenario.params.eta
    nodes = grid.nodes
    rho0 = np.asarray(scenario.initial_profile(nodes), dtype=float)
    if rho0.shape != (spec.n, grid.n_nodes):
        raise InvalidScenarioError("initial profile must return shape (n, N)")
    rho = rho0.copy()
    rho[:-1] = np.maximum(rho[:-1], eta)
    rho[-1] = 1.0 - rho[:-1].sum(axis=0)
    if np.any(rho[-1] <= 0.0):
        raise InvalidScenarioError("last species non-positive after flooring")

    charge = (spec.z / spec.M) @ rho + spec.background_charge(nodes)
    phi0 = poisson_solve(grid, charge, spec.lam, scenario.phi_bc)

    c = (rho / spec.M[:, None]).sum(axis=0)
    x = rho / (c[None, :] * spec.M[:, None])
    logs = np.log(x) / spec.M[:, None]
    m = spec.n - 1
    u0 = logs[:m] - logs[m] + spec.phi_coupling[:, None] * (phi0 - lift.phi_D)[None, :]
    return State(u=u0, phi=phi0, x=x, rho=rho, c_tot=c, t=0.0)


def _system_pieces(scenario: Scenario, lift: Lift, prev: State, bar: State, tau: float):
    """Shared blocks of the linearized step around the iterate ``bar``."""
    spec, grid = scenario.spec, scenario.grid
    params = scenario.params
    m = spec.n - 1
    h = grid.h
    omega = grid.trapezoid_weights()
    zeta = spec.phi_coupling

    Jw, Jphi = state_jacobians(bar.x, bar.c_tot, spec)  # (N,m,m), (N,m)
    B_e = diagnostics.element_mobilities(grid, bar, spec)  # (n_e,m,m)

    wbar = bar.u + lift.w_D
    dW = np.diff(wbar, axis=1)  # (m, n_e)
    Bdw = np.einsum("eij,je->ie", B_e, dW) / h
    stiff_w = np.zeros_like(wbar)
    stiff_w[:, :-1] -= Bdw
    stiff_w[:, 1:] += Bdw

    rates = spec.reactions(bar.x) if spec.r is not None else None
    F = omega * (bar.rho[:m] - prev.rho[:m]) + tau * stiff_w
    F += params.eps_reg * tau * omega * bar.u
    if rates is not None:
        F -= tau * omega * rates[:m]

    dphi = np.diff(bar.phi) / h
    stiff_phi = np.zeros_like(bar.phi)
    stiff_phi[:-1] -= dphi
    stiff_phi[1:] += dphi
    f_nodes = spec.background_charge(grid.nodes)
    charge = (spec.z / spec.M) @ bar.rho + f_nodes
    G = -spec.lam * stiff_phi + omega * charge

    charge_w = np.einsum("i,pij->pj", zeta, Jw)  # (N, m)
    charge_phi = Jphi @ zeta  # (N,)
    return Jw, Jphi, B_e, F, G, charge_w, charge_phi, omega


def assemble_inner_system(
    scenario: Scenario,
    lift: Lift,
    state_prev: State,
    guess: State,
    tau: Optional[float] = None,
) -> BandedSystem:
    """Coupled block system for the increment (species potentials, potential).

    Row blocks pair the density Jacobian with trapezoidal node weights, add
    tau times the mobility-weighted stiffness and the regularization mass
    term, and equal minus the nonlinear residual; the potential rows carry
    the Poisson stiffness minus the charge Jacobian, with homogeneous
    Dirichlet rows at both ends.
    """
    spec, grid = scenario.spec, scenario.grid
    params = scenario.params
    if tau is None:
        tau = params.tau
    m = spec.n - 1
    mdim = m + 1
    N = grid.n_nodes
    h = grid.h

    Jw, Jphi, B_e, F, G, charge_w, charge_phi, omega = _system_pieces(
        scenario, lift, state_prev, guess, tau
    )

    diag = np.zeros((N, mdim, mdim))
    diag[:, :m, :m] = omega[:, None, None] * Jw
    diag[:, np.arange(m), np.arange(m)] += params.eps_reg * tau * omega[:, None]
    diag[:, :m, :m][1:] += (tau / h) * B_e
    diag[:, :m, :m][:-1] += (tau / h) * B_e
    diag[:, :m, mdim - 1] = omega[:, None] * Jphi
    diag[:, mdim - 1, :m] = -omega[:, None] * charge_w
    sphi_diag = np.full(N, 2.0 * spec.lam / h)
    sphi_diag[0] = sphi_diag[-1] = spec.lam / h
    diag[:, mdim - 1, mdim - 1] = sphi_diag - omega * charge_phi

    off = np.zeros((N - 1, mdim, mdim))
    off[:, :m, :m] = -(tau / h) * B_e
    off[:, mdim - 1, mdim - 1] = -spec.lam / h

    rhs = np.zeros((N, mdim))
    rhs[:, :m] = -F.T
    rhs[:, mdim - 1] = G

    sys = BandedSystem(
        matrix=BlockTridiagonal(diag=diag, lower=off.copy(), upper=off.copy()),
        rhs=rhs,
    )
    sys.apply_dirichlet(0, mdim - 1, 0.0)
    sys.apply_dirichlet(N - 1, mdim - 1, 0.0)
    return sys


def _split_increment(
    scenario: Scenario, lift: Lift, prev: State, bar: State, tau: float
) -> np.ndarray:
    """Gauss-Seidel variant: potential solve with frozen species, then species."""
    spec, grid = scenario.spec, scenario.grid
    params = scenario.params
    m = spec.n - 1
    N = grid.n_nodes
    h = grid.h
    Jw, Jphi, B_e, F, G, charge_w, charge_phi, omega = _system_pieces(
        scenario, lift, prev, bar, tau
    )

    sphi_diag = np.full(N, 2.0 * spec.lam / h)
    sphi_diag[0] = sphi_diag[-1] = spec.lam / h
    diag_p = (sphi_diag - omega * charge_phi)[:, None, None]
    off_p = np.full((N - 1, 1, 1), -spec.lam / h)
    sys_p = BandedSystem(
        matrix=BlockTridiagonal(diag=diag_p, lower=off_p.copy(), upper=off_p.copy()),
        rhs=G[:, None].copy(),
    )
    sys_p.apply_dirichlet(0, 0, 0.0)
    sys_p.apply_dirichlet(N - 1, 0, 0.0)
    zphi = solve_banded(sys_p)[:, 0]

    diag_s = omega[:, None, None] * Jw
    diag_s[:, np.arange(m), np.arange(m)] += params.eps_reg * tau * omega[:, None]
    diag_s[1:] += (tau / h) * B_e
    diag_s[:-1] += (tau / h) * B_e
    off_s = -(tau / h) * B_e
    rhs_s = -F.T - omega[:, None] * Jphi * zphi[:, None]
    sys_s = BandedSystem(
        matrix=BlockTridiagonal(diag=diag_s, lower=off_s.copy(), upper=off_s.copy()),
        rhs=rhs_s,
    )
    zw = solve_banded(sys_s)
    return np.hstack([zw, zphi[:, None]])


def advance(
    scenario: Scenario,
    lift: Lift,
    state_prev: State,
    params: Optional[SolverParams] = None,
) -> Tuple[State, diagnostics.StepReport]:
    """One implicit Euler step; returns the new state and its step report.

    On failure to converge within ``m_max`` inner iterations the report is
    flagged non-converged and the candidate state is returned untrusted.
    """
    spec, grid = scenario.spec, scenario.grid
    if params is None:
        params = scenario.params
    m = spec.n - 1
    t_new = state_prev.t + params.tau

    bar = state_prev
    iterations = 0
    zinf = np.inf
    converged = False
    while iterations < params.m_max:
        iterations += 1
        if params.coupled_solve:
            sys = assemble_inner_system(scenario, lift, state_prev, bar, params.tau)
            delta = solve_banded(sys)
        else:
            delta = _split_increment(scenario, lift, state_prev, bar, params.tau)
        u_new = bar.u + delta[:, :m].T
        phi_new = bar.phi + delta[:, m]
        bar = State.from_uphi(spec, lift, u_new, phi_new, t_new)
        zinf = float(np.abs(delta).max())
        if zinf < params.eps_tol:
            converged = True
            break

    report = diagnostics.StepReport(
        t=t_new,
        H=diagnostics.entropy(grid, bar, lift, spec),
        masses=diagnostics.masses(grid, bar),
        entropy_residual=diagnostics.entropy_step_residual(
            grid, bar, state_prev, lift, params, spec
        ),
        iterations=iterations,
        zeta_inf=zinf,
        rho_min=float(bar.rho.min()),
        rho_max=float(bar.rho.max()),
        rho_sum_dev=float(np.abs(bar.rho.sum(axis=0) - 1.0).max()),
        rho_step_inf=float(np.abs(bar.rho - state_prev.rho).max()),
        converged=converged,
    )
    return bar, report


_MAX_HALVINGS = 6


def _advance_robust(
    scenario: Scenario,
    lift: Lift,
    state: State,
    params: SolverParams,
    depth: int = 0,
) -> Tuple[State, diagnostics.StepReport]:
    """Advance by params.tau, recursively halving the step on rejection."""
    new_state, report = advance(scenario, lift, state, params)
    if report.converged:
        return new_state, report
    if depth >= _MAX_HALVINGS:
        raise NonConvergenceError(
            f"step at t={state.t:.6g} rejected after {depth} halvings "
            f"(|delta|_inf={report.zeta_inf:.3e}, tol={params.eps_tol:.1e})"
        )
    half = replace(params, tau=0.5 * params.tau)
    mid, rep1 = _advance_robust(scenario, lift, state, half, depth + 1)
    new_state, rep2 = _advance_robust(scenario, lift, mid, half, depth + 1)
    rep2.iterations += rep1.iterations
    return new_state, rep2


@dataclass(eq=False)
class Trajectory:
    """Result of a run: states at output times plus per-step reports."""

    frames: List[Tuple[float, State]]
    reports: List[diagnostics.StepReport]
    final: State
    steady: Optional[State] = None


def run(scenario: Scenario, steady: Optional[State] = None) -> Trajectory:
    """Fixed-step march to the horizon T, collecting states and diagnostics.

    When a reference steady state is supplied, each report carries the
    relative entropy against it.
    """
    spec, grid = scenario.spec, scenario.grid
    params = scenario.params
    lift = build_lift(scenario)
    state = init_state(scenario, lift)

    n_steps = int(round(scenario.T / params.tau))
    if scenario.output_every and scenario.output_every > 0:
        stride = max(1, int(round(scenario.output_every / params.tau)))
    else:
        stride = n_steps if n_steps > 0 else 1

    frames = [(0.0, state)]
    reports: List[diagnostics.StepReport] = []
    for k in range(1, n_steps + 1):
        state, report = _advance_robust(scenario, lift, state, params)
        if steady is not None:
            report.H_rel = diagnostics.relative_entropy(grid, state, steady, spec)
        reports.append(report)
        if k % stride == 0 or k == n_steps:
            frames.append((state.t, state))
    return Trajectory(frames=frames, reports=reports, final=state, steady=steady)


def run_to_stationarity(
    scenario: Scenario,
    rate_tol: float = 1e-8,
    t_max: float = 60.0,
) -> Tuple[State, bool]:
    """March until the per-step density change rate drops below ``rate_tol``.

    Returns the last state and whether stationarity was reached before t_max.
    """
    params = scenario.params
    lift = build_lift(scenario)
    state = init_state(scenario, lift)
    n_steps = int(round(t_max / params.tau))
    for _ in range(n_steps):
        state, report = _advance_robust(scenario, lift, state, params)
        if report.rho_step_inf / params.tau <= rate_tol:
            return state, True
    return state, False


def constant_state(scenario: Scenario, lift: Lift, rho_const: np.ndarray) -> State:
    """Spatially constant state with zero potential offset (no-field steady state)."""
    spec, grid = scenario.spec, scenario.grid
    N = grid.n_nodes
    rho = np.repeat(np.asarray(rho_const, dtype=float)[:, None], N, axis=1)
    c = (rho / spec.M[:, None]).sum(axis=0)
    x = rho / (c[None, :] * spec.M[:, None])
    logs = np.log(x) / spec.M[:, None]
    m = spec.n - 1
    phi = lift.phi_D.copy()
    u = logs[:m] - logs[m]
    return State(u=u, phi=phi, x=x, rho=rho, c_tot=c, t=np.inf)
