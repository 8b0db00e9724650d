"""Conversions between entropy variables (w, Phi), molar fractions and densities.

The inverse map w -> x goes through a scalar fixed point: with
``a_i = exp(M_i w_i - M_i (z_i/M_i - z_n/M_n) Phi)`` and ``p_i = M_i/M_n``,
the last fraction ``q = x_n`` is the unique root in (0, 1) of

    g(q) = sum_i a_i q^{p_i} + q - 1,

which is strictly increasing, and then ``x_i = a_i q^{p_i}``.  This keeps all
fractions strictly positive and summing to one, no matter what (w, Phi) is.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mixture import Composition, MixtureSpec

# exponent clamp: states beyond exp(+-700) are far outside the physical regime
_EXP_CLAMP = 700.0
_BISECT_ITERS = 52
_NEWTON_ITERS = 3


@dataclass(frozen=True, eq=False)
class EntropyVars:
    """Pointwise electro-chemical potentials w (n-1 values) and potential phi."""

    w: np.ndarray
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        if not np.all(np.isfinite(self.w)) or not np.isfinite(self.phi):
            raise DomainError("entropy variables must be finite")


@dataclass(frozen=True, eq=False)
class FixedPointProblem:
    """Coefficients a_i > 0 and exponents p_i > 0 of the fraction fixed point."""

    a: np.ndarray
    p: np.ndarray

    def f(self, s: float) -> float:
        """The decreasing map f(s) = sum_i a_i (1-s)^{p_i}, with f(1) = 0."""
        return float(np.sum(self.a * (1.0 - s) ** self.p))


def fixed_point_problem(ev: EntropyVars, spec: MixtureSpec) -> FixedPointProblem:
    a, p = _coefficients(ev.w[:, None], np.array([ev.phi]), spec)
    return FixedPointProblem(a=a[:, 0], p=p[:, 0])


def _coefficients(w: np.ndarray, phi: np.ndarray, spec: MixtureSpec):
    """Exponential coefficients for w of shape (n-1, P) and phi of shape (P,)."""
    m = spec.n - 1
    Mp = spec.M[:m, None]
    expo = Mp * w - Mp * spec.phi_coupling[:, None] * phi[None, :]
    if np.any(np.abs(expo) > _EXP_CLAMP):
        warnings.warn(
            "entropy-variable exponent clamped; state outside physical regime",
            RuntimeWarning,
            stacklevel=3,
        )
        expo = np.clip(expo, -_EXP_CLAMP, _EXP_CLAMP)
    a = np.exp(expo)
    p = np.broadcast_to((spec.M[:m] / spec.M[m])[:, None], a.shape)
    return a, p


def _solve_q(a: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Roots of g(q) = sum_i a_i q^{p_i} + q - 1 for columns of a, p (n-1, P)."""
    P = a.shape[1]
    lo = np.zeros(P)
    hi = np.ones(P)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        g = (a * mid ** p).sum(axis=0) + mid - 1.0
        neg = g < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    q = 0.5 * (lo + hi)
    for _ in range(_NEWTON_ITERS):
        qp = q ** p
        g = (a * qp).sum(axis=0) + q - 1.0
        gp = (a * p * q ** (p - 1.0)).sum(axis=0) + 1.0
        q = np.clip(q - g / gp, 1e-300, 1.0)
    return q


def solve_s0(fp: FixedPointProblem, tol: float = 1e-12) -> float:
    """Solve f(s0) = s0 on (0, 1) to |f(s0) - s0| <= tol by bisection plus Newton.

    A root always exists.  The final Newton polish runs on the returned double
    itself, so the residual is limited only by ``tol`` or by representability
    (about |f'| * eps); if that floor exceeds ``tol`` a warning is emitted and
    the best point returned.
    """
    if not tol > 0.0:
        raise DomainError("tolerance must be positive")
    q = _solve_q(fp.a[:, None], fp.p[:, None])[0]
    s = 1.0 - q
    best_s = s
    best_r = abs(fp.f(s) - s)
    for _ in range(60):
        if best_r <= tol:
            break
        r = fp.f(s) - s
        slope = -float((fp.a * fp.p * (1.0 - s) ** (fp.p - 1.0)).sum()) - 1.0
        if not np.isfinite(slope) or slope == 0.0:
            break
        s_new = min(max(s - r / slope, 0.0), 1.0)
        if s_new == s:
            break
        s = s_new
        r_new = abs(fp.f(s) - s)
        if r_new < best_r:
            best_s, best_r = s, r_new
    if best_r > tol:
        warnings.warn(
            f"fixed-point residual floor {best_r:.3e} above tol {tol:.3e}",
            RuntimeWarning,
        )
    return best_s


def invert_states(w: np.ndarray, phi: np.ndarray, spec: MixtureSpec):
    """Invert entropy variables at many points.

    Args:
        w: potentials, shape (n-1, P).
        phi: electric potential, shape (P,).

    Returns:
        (x, rho, c_tot) with shapes (n, P), (n, P), (P,); every column of x
        lies strictly inside the simplex.
    """
    a, p = _coefficients(w, phi, spec)
    q = _solve_q(a, p)
    x = np.empty((spec.n, q.size))
    x[:-1] = a * q ** p
    x[-1] = q
    c_tot = 1.0 / (spec.M @ x)
    rho = c_tot[None, :] * spec.M[:, None] * x
    return x, rho, c_tot


def x_from_w(ev: EntropyVars, spec: MixtureSpec) -> np.ndarray:
    """Molar fractions for one (w, Phi) point; strictly interior, summing to one."""
    x, _, _ = invert_states(ev.w[:, None], np.array([ev.phi]), spec)
    return x[:, 0]


def rho_from_x(x: np.ndarray, spec: MixtureSpec) -> Composition:
    """Densities from fractions: c_tot = (sum_j M_j x_j)^{-1}, rho_i = c_tot M_i x_i."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise DomainError("molar fractions must lie strictly inside the simplex")
    c_tot = 1.0 / float(spec.M @ x)
    rho = c_tot * spec.M * x
    return Composition(rho=rho, x=x, c_tot=c_tot)


def w_from_rho(
    comp: Composition,
    phi: float,
    phi_D: float,
    spec: MixtureSpec,
) -> np.ndarray:
    """Shifted potentials u_i = w_i - (z_i/M_i - z_n/M_n) Phi_D at one point.

    Here w_i = log(x_i)/M_i - log(x_n)/M_n + (z_i/M_i - z_n/M_n) Phi.  Any
    non-positive fraction is a domain error; callers floor densities first.
    """
    x = comp.x
    if np.any(x <= 0.0):
        raise DomainError("fractions must be positive to take logarithms")
    m = spec.n - 1
    logs = np.log(x) / spec.M
    return logs[:m] - logs[m] + spec.phi_coupling * (phi - phi_D)


def state_jacobians(x: np.ndarray, c_tot: np.ndarray, spec: MixtureSpec):
    """Derivatives of the first n-1 densities with respect to (w, Phi).

    Implicit differentiation of the potential definition with the simplex
    closure: G dx' = dw - zeta dPhi with
    G_ij = delta_ij/(M_i x_i) + 1/(M_n x_n), then the product rule through
    c_tot = (sum_j M_j x_j)^{-1}.

    Args:
        x: fractions, shape (n, P); c_tot: shape (P,).

    Returns:
        (Jw, Jphi) of shapes (P, n-1, n-1) and (P, n-1).
    """
    m = spec.n - 1
    P = c_tot.size
    xp = x[:m].T  # (P, m)
    if np.any(x <= 0.0):
        raise DomainError("fractions must be positive")
    G = np.zeros((P, m, m))
    G[:, np.arange(m), np.arange(m)] = 1.0 / (spec.M[:m] * xp)
    G += (1.0 / (spec.M[m] * x[m]))[:, None, None]
    dx_dw = np.linalg.solve(G, np.broadcast_to(np.eye(m), (P, m, m)).copy())
    # rho' = c_tot M x' with dc = -c^2 (M_j - M_n) dx_j
    c = c_tot[:, None, None]
    T = -(c ** 2) * (spec.M[:m] * xp)[:, :, None] * (spec.M[:m] - spec.M[m])[None, None, :]
    T[:, np.arange(m), np.arange(m)] += c_tot[:, None] * spec.M[:m]
    Jw = T @ dx_dw
    Jphi = -np.einsum("pij,j->pi", Jw, spec.phi_coupling)
    return Jw, Jphi


def jacobian_rho(ev: EntropyVars, spec: MixtureSpec) -> np.ndarray:
    """Analytic Jacobian of rho' with respect to (w_1..w_{n-1}, Phi), shape (n-1, n)."""
    x, _, c_tot = invert_states(ev.w[:, None], np.array([ev.phi]), spec)
    Jw, Jphi = state_jacobians(x, c_tot, spec)
    return np.hstack([Jw[0], Jphi[0][:, None]])
