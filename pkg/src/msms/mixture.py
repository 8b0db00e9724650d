"""Species data and pointwise thermodynamic relations of an ionized mixture.

Everything is nondimensional: the total mass density is scaled to one, so the
per-species densities ``rho`` form a point of the unit simplex, molar
concentrations are ``c_i = rho_i / M_i``, and molar fractions are
``x_i = c_i / c_tot``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError

ChargeField = Callable[[np.ndarray], np.ndarray]
ReactionHook = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """Fixed physical parameters of an ``n``-species ionized mixture.

    Attributes:
        n: species count (>= 2).
        M: molar masses, shape (n,), strictly positive.
        z: charge numbers, shape (n,).
        Dms: pairwise diffusivity matrix, shape (n, n); symmetric with
            positive off-diagonal entries, diagonal unused.
        lam: scaled permittivity (> 0).
        f: background charge profile ``f(y) -> array`` or None for zero.
        r: reaction hook mapping molar fractions (n, P) to rates (n, P)
            that sum to zero over species, or None for no reactions.
    """

    n: int
    M: np.ndarray
    z: np.ndarray
    Dms: np.ndarray
    lam: float = 1.0
    f: Optional[ChargeField] = None
    r: Optional[ReactionHook] = None

    def __post_init__(self):
        object.__setattr__(self, "M", np.asarray(self.M, dtype=float))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        object.__setattr__(self, "Dms", np.asarray(self.Dms, dtype=float))
        n = self.n
        if n < 2:
            raise InvalidParameterError("need at least two species")
        if self.M.shape != (n,) or self.z.shape != (n,):
            raise InvalidParameterError("M and z must have shape (n,)")
        if np.any(self.M <= 0.0):
            raise InvalidParameterError("molar masses must be positive")
        if self.Dms.shape != (n, n):
            raise InvalidParameterError("Dms must have shape (n, n)")
        off = ~np.eye(n, dtype=bool)
        if np.any(self.Dms[off] <= 0.0):
            raise InvalidParameterError("off-diagonal diffusivities must be positive")
        if not np.array_equal(self.Dms, self.Dms.T):
            raise InvalidParameterError("diffusivity matrix must be symmetric")
        if not self.lam > 0.0:
            raise InvalidParameterError("permittivity must be positive")

    @property
    def phi_coupling(self) -> np.ndarray:
        """Coefficients z_i/M_i - z_n/M_n multiplying the potential, shape (n-1,)."""
        zm = self.z / self.M
        return zm[:-1] - zm[-1]

    def background_charge(self, y: np.ndarray) -> np.ndarray:
        if self.f is None:
            return np.zeros_like(y)
        return np.asarray(self.f(y), dtype=float)

    def reactions(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the reaction hook on molar fractions x of shape (n, P)."""
        if self.r is None:
            return np.zeros_like(x)
        rates = np.asarray(self.r(x), dtype=float)
        total = np.abs(rates.sum(axis=0)).max()
        if total > 1e-10 * max(1.0, np.abs(rates).max()):
            raise InvalidParameterError("reaction rates must sum to zero over species")
        return rates


@dataclass(frozen=True, eq=False)
class Composition:
    """A pointwise mixture state: densities, molar fractions, total concentration.

    Satisfies sum(rho) = 1, sum(x) = 1, rho_i = c_tot * M_i * x_i and
    1/max(M) <= c_tot <= 1/min(M).
    """

    rho: np.ndarray
    x: np.ndarray
    c_tot: float

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if abs(self.rho.sum() - 1.0) > 1e-8:
            raise InvalidParameterError("densities must sum to one")
        if abs(self.x.sum() - 1.0) > 1e-8:
            raise InvalidParameterError("molar fractions must sum to one")
        if self.c_tot <= 0.0:
            raise InvalidParameterError("total concentration must be positive")


def composition_from_rho(spec: MixtureSpec, rho: np.ndarray) -> Composition:
    """Build a Composition from a density vector on the simplex."""
    rho = np.asarray(rho, dtype=float)
    c = rho / spec.M
    c_tot = c.sum()
    comp = Composition(rho=rho, x=c / c_tot, c_tot=float(c_tot))
    _check_ctot_bounds(spec, comp.c_tot)
    return comp


def _check_ctot_bounds(spec: MixtureSpec, c_tot: float) -> None:
    lo = 1.0 / spec.M.max()
    hi = 1.0 / spec.M.min()
    if not (lo - 1e-12 <= c_tot <= hi + 1e-12):
        raise InvalidParameterError(
            f"total concentration {c_tot} outside [{lo}, {hi}]"
        )


def rescaled_k(spec: MixtureSpec, c_tot: float) -> np.ndarray:
    """Reciprocal diffusivities k_ij = 1 / (c_tot^3 M_i M_j D_ij).

    Symmetric with zero (unused) diagonal.  Raises for non-positive c_tot.
    """
    if not c_tot > 0.0:
        raise InvalidParameterError("c_tot must be positive")
    return rescaled_k_many(spec, np.array([c_tot]))[0]


def rescaled_k_many(spec: MixtureSpec, c_tot: np.ndarray) -> np.ndarray:
    """Vectorized ``rescaled_k``: c_tot of shape (P,) -> k of shape (P, n, n)."""
    c_tot = np.asarray(c_tot, dtype=float)
    if np.any(c_tot <= 0.0):
        raise InvalidParameterError("c_tot must be positive")
    n = spec.n
    denom = spec.M[:, None] * spec.M[None, :] * spec.Dms
    k = np.zeros((c_tot.size, n, n))
    off = ~np.eye(n, dtype=bool)
    k[:, off] = 1.0 / (c_tot[:, None] ** 3 * denom[off][None, :])
    return k


def driving_force(
    comp: Composition,
    grad_x: np.ndarray,
    grad_phi: float,
    spec: MixtureSpec,
) -> np.ndarray:
    """Per-species driving force D_i = grad(x_i) + (z_i x_i - (z.x) rho_i) grad(Phi).

    The forces sum to zero whenever the fraction gradients do.
    """
    grad_x = np.asarray(grad_x, dtype=float)
    zx = float(spec.z @ comp.x)
    return grad_x + (spec.z * comp.x - zx * comp.rho) * grad_phi
