"""Friction matrices and the three equivalent flux formulations.

For a pointwise composition the flux/driving-force relation D = -A J is
singular (the forces sum to zero), so the system is closed either in the
first n-1 components, J' = -A0^{-1} D', or through the mobility matrix B
acting on gradients of the electro-chemical potentials, J' = -B grad(w).
B is built as (1/c_tot) A0^{-1} R with R_ij = rho_i delta_ij - rho_i rho_j,
which makes the identity B grad(w) == A0^{-1} D' hold pointwise; it equals
C^{-1}/c_tot for the reduced friction matrix C assembled from A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularCompositionError
from .mixture import Composition, MixtureSpec, driving_force, rescaled_k


def build_A(rho: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Full friction matrix: A_ii = sum_{l != i} k_il rho_l, A_ij = -k_ij rho_i.

    Columns sum to zero exactly, i.e. A^T annihilates the constant vector.
    """
    rho = np.asarray(rho, dtype=float)
    k = np.asarray(k, dtype=float)
    n = rho.size
    if k.shape != (n, n):
        raise ValueError("k must have shape (n, n)")
    A = -k * rho[:, None]
    diag = k @ rho - np.diag(k) * rho
    A[np.diag_indices(n)] = diag
    return A


def build_A0(rho: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Reduced (n-1) x (n-1) friction matrix obtained by eliminating J_n."""
    rho = np.asarray(rho, dtype=float)
    k = np.asarray(k, dtype=float)
    if k.shape != (rho.size, rho.size):
        raise ValueError("k must have shape (n, n)")
    return build_A0_many(rho[None, :], k[None, :, :])[0]


def build_A0_many(rho: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Vectorized ``build_A0``: rho (P, n), k (P, n, n) -> (P, n-1, n-1)."""
    n = rho.shape[1]
    m = n - 1
    kk = k[:, :m, :m] - k[:, :m, m][:, :, None]
    A0 = -kk * rho[:, :m, None]
    diag = (
        np.einsum("pij,pj->pi", kk, rho[:, :m])
        - np.einsum("pii->pi", kk) * rho[:, :m]
        + k[:, :m, m]
    )
    A0[:, np.arange(m), np.arange(m)] = diag
    return A0


def build_C(rho: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Reduced friction matrix C_ij = A_ij/rho_i - A_in/rho_i - A_nj/rho_n + A_nn/rho_n.

    Symmetric positive definite for compositions strictly inside the simplex;
    any vanishing component makes the combination singular.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise SingularCompositionError("C requires all rho_i > 0")
    A = build_A(rho, k)
    Ar = A / rho[:, None]
    m = rho.size - 1
    return Ar[:m, :m] - Ar[:m, m][:, None] - Ar[m, :m][None, :] + Ar[m, m]


def build_B(rho: np.ndarray, c_tot: float, k: np.ndarray) -> np.ndarray:
    """Mobility matrix B = (1/c_tot) A0^{-1} R, R_ij = rho_i delta_ij - rho_i rho_j.

    Positive definite on interior compositions; satisfies B grad(w) == A0^{-1} D'
    by construction and equals C^{-1}/c_tot.
    """
    rho = np.asarray(rho, dtype=float)
    return mobility_many(rho[None, :], np.array([c_tot]), k[None, :, :])[0]


def mobility_many(rho: np.ndarray, c_tot: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Vectorized ``build_B``: rho (P, n), c_tot (P,), k (P, n, n) -> (P, n-1, n-1)."""
    m = rho.shape[1] - 1
    rp = rho[:, :m]
    R = -rp[:, :, None] * rp[:, None, :]
    R[:, np.arange(m), np.arange(m)] += rp
    A0 = build_A0_many(rho, k)
    try:
        B = np.linalg.solve(A0, R)
    except np.linalg.LinAlgError as exc:
        raise SingularCompositionError(f"singular reduced friction matrix: {exc}")
    return B / np.asarray(c_tot, dtype=float)[:, None, None]


def flux_from_driving(rho: np.ndarray, k: np.ndarray, dprime: np.ndarray) -> np.ndarray:
    """Fluxes of the first n-1 species, J' = -A0^{-1} D'."""
    A0 = build_A0(rho, k)
    try:
        return -np.linalg.solve(A0, np.asarray(dprime, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise SingularCompositionError(f"singular reduced friction matrix: {exc}")


def flux_equivalence_check(
    comp: Composition,
    k: np.ndarray,
    grad_w: np.ndarray,
    grad_phi: float,
    spec: MixtureSpec,
) -> float:
    """Relative defect between A0^{-1} D' and B grad(w) at one state.

    The fraction gradients entering D' are reconstructed from grad(w) and
    grad(Phi) by the chain rule of the potential definition, so the two
    expressions agree to roundoff; the returned value is
    ||A0^{-1} D' - B grad(w)|| / max(1, ||B grad(w)||).
    """
    grad_w = np.asarray(grad_w, dtype=float)
    m = spec.n - 1
    x, rho = comp.x, comp.rho
    zeta = spec.phi_coupling

    # chain rule: grad(w) = G grad(x') + zeta grad(Phi) with the simplex closure
    G = np.diag(1.0 / (spec.M[:m] * x[:m])) + 1.0 / (spec.M[m] * x[m])
    dx_p = np.linalg.solve(G, grad_w - zeta * grad_phi)
    dx = np.concatenate([dx_p, [-dx_p.sum()]])

    D = driving_force(comp, dx, grad_phi, spec)
    lhs = np.linalg.solve(build_A0(rho, k), D[:m])
    rhs = build_B(rho, comp.c_tot, k) @ grad_w
    return float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(rhs)))


@dataclass(frozen=True, eq=False)
class FluxOperators:
    """The matrices tied to one composition: A, A0, C, mobility B and projector R."""

    A: np.ndarray
    A0: np.ndarray
    C: np.ndarray
    B: np.ndarray
    R: np.ndarray


def flux_operators(spec: MixtureSpec, comp: Composition) -> FluxOperators:
    """Assemble all flux matrices for one composition."""
    k = rescaled_k(spec, comp.c_tot)
    rho = comp.rho
    m = spec.n - 1
    rp = rho[:m]
    R = np.diag(rp) - np.outer(rp, rp)
    return FluxOperators(
        A=build_A(rho, k),
        A0=build_A0(rho, k),
        C=build_C(rho, k),
        B=build_B(rho, comp.c_tot, k),
        R=R,
    )
