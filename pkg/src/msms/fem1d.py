"""Linear finite elements on a uniform grid over (0, 1).

Provides mass and coefficient-weighted stiffness assembly in block-tridiagonal
form, Dirichlet constraint elimination, a banded direct solve, the Poisson
sub-solver, and the nested-grid L2 distance used by refinement studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import scipy.linalg

from .errors import SolverError


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh of (0, 1) with n_p elements and piecewise-linear basis."""

    n_p: int

    def __post_init__(self):
        if self.n_p < 2:
            raise ValueError("grid needs at least two elements")

    @property
    def h(self) -> float:
        return 1.0 / self.n_p

    @property
    def n_nodes(self) -> int:
        return self.n_p + 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_p + 1)

    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights of the trapezoidal rule at the nodes."""
        w = np.full(self.n_p + 1, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


@dataclass(eq=False)
class TridiagonalMatrix:
    """Scalar tridiagonal matrix stored as three diagonals."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[1:] += self.lower * v[:-1]
        out[:-1] += self.upper * v[1:]
        return out

    def dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.lower, -1)
            + np.diag(self.upper, 1)
        )

    def row_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[1:] += self.lower
        s[:-1] += self.upper
        return s


def assemble_mass(grid: Grid1D, lumped: bool = False) -> TridiagonalMatrix:
    """Mass matrix of the linear elements; row pattern (h/6, 4h/6, h/6).

    The lumped variant moves each row onto the diagonal, preserving row sums.
    """
    h = grid.h
    N = grid.n_nodes
    if lumped:
        return TridiagonalMatrix(
            lower=np.zeros(N - 1),
            diag=grid.trapezoid_weights(),
            upper=np.zeros(N - 1),
        )
    diag = np.full(N, 4.0 * h / 6.0)
    diag[0] = diag[-1] = 2.0 * h / 6.0
    off = np.full(N - 1, h / 6.0)
    return TridiagonalMatrix(lower=off.copy(), diag=diag, upper=off.copy())


@dataclass(eq=False)
class BlockTridiagonal:
    """Block-tridiagonal matrix with square blocks of size m per node."""

    diag: np.ndarray  # (N, m, m)
    lower: np.ndarray  # (N-1, m, m), block (j+1, j)
    upper: np.ndarray  # (N-1, m, m), block (j, j+1)

    @property
    def n_nodes(self) -> int:
        return self.diag.shape[0]

    @property
    def m(self) -> int:
        return self.diag.shape[1]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply to nodal vectors v of shape (N, m)."""
        out = np.einsum("nij,nj->ni", self.diag, v)
        out[1:] += np.einsum("nij,nj->ni", self.lower, v[:-1])
        out[:-1] += np.einsum("nij,nj->ni", self.upper, v[1:])
        return out

    def dense(self) -> np.ndarray:
        N, m = self.n_nodes, self.m
        A = np.zeros((N * m, N * m))
        for j in range(N):
            A[j * m : (j + 1) * m, j * m : (j + 1) * m] = self.diag[j]
        for j in range(N - 1):
            A[(j + 1) * m : (j + 2) * m, j * m : (j + 1) * m] = self.lower[j]
            A[j * m : (j + 1) * m, (j + 1) * m : (j + 2) * m] = self.upper[j]
        return A


def assemble_weighted_stiffness(grid: Grid1D, coeff: np.ndarray) -> BlockTridiagonal:
    """Stiffness assembled from one m x m coefficient matrix per element.

    Each element contributes the (1/h) coeff [[1, -1], [-1, 1]] pattern, so
    constant nodal fields lie in the kernel regardless of the coefficients.
    """
    coeff = np.asarray(coeff, dtype=float)
    if coeff.ndim != 3 or coeff.shape[0] != grid.n_p or coeff.shape[1] != coeff.shape[2]:
        raise ValueError("coeff must have shape (n_p, m, m)")
    m = coeff.shape[1]
    N = grid.n_nodes
    ch = coeff / grid.h
    diag = np.zeros((N, m, m))
    diag[:-1] += ch
    diag[1:] += ch
    return BlockTridiagonal(diag=diag, lower=-ch.copy(), upper=-ch.copy())


@dataclass(eq=False)
class BandedSystem:
    """A block-tridiagonal linear system with Dirichlet constraints."""

    matrix: BlockTridiagonal
    rhs: np.ndarray  # (N, m)
    constraints: List[Tuple[int, int, float]] = field(default_factory=list)

    def apply_dirichlet(self, node: int, comp: int, value: float) -> None:
        """Pin one unknown by symmetric row/column elimination."""
        A = self.matrix
        N = A.n_nodes
        if node > 0:
            self.rhs[node - 1] -= A.upper[node - 1][:, comp] * value
            A.upper[node - 1][:, comp] = 0.0
            A.lower[node - 1][comp, :] = 0.0
        if node < N - 1:
            self.rhs[node + 1] -= A.lower[node][:, comp] * value
            A.lower[node][:, comp] = 0.0
            A.upper[node][comp, :] = 0.0
        self.rhs[node] -= A.diag[node][:, comp] * value
        A.diag[node][:, comp] = 0.0
        A.diag[node][comp, :] = 0.0
        A.diag[node][comp, comp] = 1.0
        self.rhs[node, comp] = value
        self.constraints.append((node, comp, value))


def solve_banded(sys: BandedSystem) -> np.ndarray:
    """Direct banded LU solve; returns the nodal solution of shape (N, m)."""
    A = sys.matrix
    N, m = A.n_nodes, A.m
    kl = ku = 2 * m - 1
    ab = np.zeros((kl + ku + 1, N * m))
    cols_d = np.arange(N) * m
    cols_o = np.arange(N - 1) * m
    for alpha in range(m):
        for beta in range(m):
            ab[ku + alpha - beta, cols_d + beta] = A.diag[:, alpha, beta]
            if N > 1:
                ab[ku + alpha - beta - m, cols_o + m + beta] = A.upper[:, alpha, beta]
                ab[ku + alpha - beta + m, cols_o + beta] = A.lower[:, alpha, beta]
    try:
        x = scipy.linalg.solve_banded((kl, ku), ab, sys.rhs.reshape(-1))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SolverError(f"banded factorization failed: {exc}")
    if not np.all(np.isfinite(x)):
        raise SolverError("banded solve produced non-finite values (singular pivot)")
    return x.reshape(N, m)


def poisson_solve(
    grid: Grid1D,
    charge: np.ndarray,
    lam: float,
    bc: Tuple[float, float],
) -> np.ndarray:
    """Nodal solution of -lam Phi'' = charge with Dirichlet values at y = 0, 1.

    The load is paired with trapezoidal node weights, matching the charge
    pairing used by the time stepper.
    """
    if not lam > 0.0:
        raise ValueError("permittivity must be positive")
    charge = np.asarray(charge, dtype=float)
    stiff = assemble_weighted_stiffness(grid, np.full((grid.n_p, 1, 1), lam))
    rhs = (grid.trapezoid_weights() * charge)[:, None]
    sys = BandedSystem(matrix=stiff, rhs=rhs)
    sys.apply_dirichlet(0, 0, float(bc[0]))
    sys.apply_dirichlet(grid.n_p, 0, float(bc[1]))
    return solve_banded(sys)[:, 0]


def l2_distance(
    grid_coarse: Grid1D,
    u_coarse: np.ndarray,
    grid_fine: Grid1D,
    u_fine: np.ndarray,
) -> float:
    """L2 norm of (coarse interpolant - fine field) over the fine grid.

    The fine grid must refine the coarse one.  The difference of the two
    piecewise-linear fields is itself linear on every fine element, so its
    squared norm is integrated exactly elementwise; sampling quadratures
    alias the fine-scale oscillation of the difference.
    """
    if grid_fine.n_p % grid_coarse.n_p != 0:
        raise ValueError("fine grid must be a refinement of the coarse grid")
    interp = np.interp(grid_fine.nodes, grid_coarse.nodes, np.asarray(u_coarse, float))
    d = interp - np.asarray(u_fine, dtype=float)
    h = grid_fine.h
    total = np.sum(d[:-1] ** 2 + d[:-1] * d[1:] + d[1:] ** 2) * h / 3.0
    return float(np.sqrt(total))
