"""Relative entropy, conditional entropy, and the local free energy.

Conventions.  For two states the relative entropy is ordered so that the
*first* argument is the reference:

    S(omega1, omega2) = Tr( D2 (log D2 - log D1) ),

finite exactly when the kernel of ``D1`` sits inside the kernel of ``D2``
(equivalently, the support of ``D2`` inside that of ``D1``); otherwise the
value is ``+inf`` and the returned object says so.  It is jointly convex,
vanishes only at equal states, and can only shrink under restriction to a
subregion.

The conditional entropy of a state on a region ``I`` measures how far the
state is from factorizing through the normalized trace on ``I``:

    Sc_I(omega) = -S(omega o E_c, omega)  <=  0,

where ``E_c`` is the conditional expectation onto the complement algebra.
It vanishes exactly on states that are such products.  Subtracting the
energy of the region gives the local free energy

    F(omega) = Sc_I(omega) - beta * omega(H(I)),

the functional whose constrained maximizers are the thermally stable states
(see :mod:`fermichain.stability`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from . import car
from .potentials import Potential, local_hamiltonian
from .regions import Region
from .states import DensityState, restrict

# Relative spectral cutoff separating genuine kernel directions from dust.
_KERNEL_CUTOFF = 1e-12

# Magnitude of negative computed values still attributable to rounding.
_NEGATIVE_SLACK = 1e-9


@dataclass(frozen=True)
class EntropyValue:
    """A relative-entropy value together with its kernel-condition verdict."""

    value: float
    kernel_ok: bool

    @property
    def finite(self) -> bool:
        return self.kernel_ok and math.isfinite(self.value)


def relative_entropy_matrices(d1: np.ndarray, d2: np.ndarray) -> EntropyValue:
    """Relative entropy from raw density matrices (first argument = reference).

    Values are computed entirely on the support of the reference: the
    entropic terms use every positive eigenvalue (the function ``x log x``
    extends continuously by zero, so spectral dust is harmless), while the
    kernel condition is decided with a relative cutoff on the spectrum.
    """
    lam1, u1 = np.linalg.eigh((d1 + d1.conj().T) / 2.0)
    lam2 = np.linalg.eigvalsh((d2 + d2.conj().T) / 2.0)
    cut1 = _KERNEL_CUTOFF * max(float(np.max(lam1)), _KERNEL_CUTOFF)
    support1 = lam1 > cut1

    if not np.all(support1):
        kernel_vecs = u1[:, ~support1]
        leak = float(np.real(np.einsum("ij,jk,ki->", kernel_vecs.conj().T, d2,
                                       kernel_vecs)))
        if leak > _KERNEL_CUTOFF * max(1.0, float(np.abs(np.trace(d2)))):
            return EntropyValue(value=math.inf, kernel_ok=False)

    p2 = np.clip(lam2, 0.0, None)
    ent2 = float(np.sum(xlogy(p2, p2)))

    diag2 = np.real(np.einsum("ij,jk,ki->i", u1.conj().T, d2, u1))
    cross = float(np.sum(np.log(lam1[support1]) * diag2[support1]))

    value = ent2 - cross
    if value < 0.0:
        if value < -_NEGATIVE_SLACK:
            raise RuntimeError(f"relative entropy came out {value:.3e} < 0; "
                               "inputs are not valid densities")
        value = 0.0
    return EntropyValue(value=value, kernel_ok=True)


def relative_entropy(omega1: DensityState, omega2: DensityState) -> EntropyValue:
    """``S(omega1, omega2)``; finite only if ``omega2`` lives on the support
    of ``omega1``."""
    return relative_entropy_matrices(omega1.density, omega2.density)


def restricted_relative_entropy(omega1: DensityState, omega2: DensityState,
                                region: Region) -> EntropyValue:
    """Relative entropy of the two restrictions to a region.

    Both states are restricted and transferred to the standard matrix copy of
    the region's algebra; monotonicity guarantees the result never exceeds
    the global relative entropy.
    """
    rho1 = restrict(omega1, region).small_density()
    rho2 = restrict(omega2, region).small_density()
    return relative_entropy_matrices(rho1, rho2)


def conditional_entropy(omega: DensityState, region: Region) -> float:
    """``Sc_I(omega) <= 0``: minus the relative entropy to the state rebuilt
    from the complement restriction (density = conditional expectation of the
    density onto the complement algebra)."""
    comp = region.complement()
    projected = car.conditional_expectation_matrix(omega.density, comp)
    result = relative_entropy_matrices(projected, omega.density)
    if not result.kernel_ok:  # cannot happen for true densities; be explicit
        return -math.inf
    return -result.value


def conditional_free_energy(omega: DensityState, potential: Potential,
                            region: Region, beta: float) -> float:
    """``F(omega) = Sc_I(omega) - beta omega(H(I))`` for the given potential."""
    h_i = local_hamiltonian(potential, region).matrix
    energy = float(np.real(omega.expectation(h_i)))
    return conditional_entropy(omega, region) - beta * energy
