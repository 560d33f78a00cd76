"""Probes for symmetry breaking: clustering, grading asymmetry, odd correlations.

Spontaneous breaking of the fermion grading would require a state with a
nonzero odd expectation; these probes quantify how close a state comes.

All three probes reduce questions about a restricted functional to finite
linear algebra through the same device: a linear functional on the algebra
of a region ``R``, written as ``B -> Tr(K B)`` with ``K`` in that algebra,
has operator-norm dual

    sup { |Tr(K B)| : B in A_R, ||B|| <= 1 }
        = (N / m) * (trace norm of the small representation of K),

where ``m = 2**|R|`` and ``N/m`` is the multiplicity of the embedding.  The
compressing element ``K`` is produced by the conditional expectation, which
is exactly the adjoint of including ``A_R`` into the chain algebra.

Odd self-adjoint elements supported on disjoint regions can only be
correlated imaginarily: they anticommute, so their product is
skew-adjoint and the real part of its expectation vanishes for every
state.  The scan in :func:`scan_odd_correlations` confirms this together
with the Cauchy-Schwarz envelope; a genuine violation would mean a
functional outside the graded framework altogether.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import car
from .car import AlgebraElement
from .regions import Region
from .states import DensityState


@dataclass
class ProbeResult:
    """Outcome of a probe: the quantity, where it was measured, and (when
    available) an element of the probed algebra attaining it."""

    quantity: float
    region: Region
    witness: AlgebraElement | None = None


def _trace_norm(matrix: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(matrix, compute_uv=False)))


def _dual_element(functional_matrix: np.ndarray, region: Region) -> np.ndarray:
    """Small representation of the ``A_R``-compression of ``B -> Tr(M B)``."""
    adj = car.conditional_expectation_matrix(functional_matrix.conj().T, region)
    return car.small_representation(adj.conj().T, region)


def cluster_coefficient(omega: DensityState, observable: AlgebraElement,
                        region: Region) -> ProbeResult:
    """``sup |omega(A B) - omega(A) omega(B)|`` over ``B`` in the region's
    algebra of unit norm.

    For a Gibbs state of a local potential this decays as the region recedes
    from the support of ``A``; a floor persisting at all distances signals
    long-range order.
    """
    if not observable.support.is_orthogonal(region):
        raise ValueError("cluster probe region must be disjoint from the observable")
    n = car.dim(omega.lattice_size)
    m = car.dim(len(region))
    mean = omega.expectation(observable)
    hand = omega.density @ observable.matrix - mean * omega.density
    small = _dual_element(hand, region)
    value = (n / m) * _trace_norm(small)
    return ProbeResult(quantity=float(value), region=region)


def grading_asymmetry(omega: DensityState, region: Region) -> ProbeResult:
    """``sup |omega(W)|`` over odd self-adjoint ``W`` in the region's algebra
    of unit norm, with an attaining witness.

    Equals half the norm distance between the state and its grading image on
    the region, hence lies in ``[0, 1]``; it vanishes iff the state is even
    there.  The witness is extracted from the spectral decomposition of the
    compressed difference functional and then reduced to its odd part, which
    changes nothing: even elements cannot see the difference of a state and
    its grading image.
    """
    n = car.dim(omega.lattice_size)
    m = car.dim(len(region))
    diff = omega.density - car.theta_matrix(omega.density, omega.lattice_size)
    small = _dual_element(diff, region)
    small = (small + small.conj().T) / 2.0
    evals, vecs = np.linalg.eigh(small)
    value = 0.5 * (n / m) * float(np.sum(np.abs(evals)))

    signs = np.where(evals >= 0.0, 1.0, -1.0)
    opt_small = (vecs * signs[None, :]) @ vecs.conj().T
    coeffs = car.monomial_basis(Region.full(len(region))).coefficients(opt_small) \
        if len(region) else np.array([1.0 + 0.0j])
    opt_big = car.monomial_basis(region).assemble(coeffs)
    odd = (opt_big - car.theta_matrix(opt_big, omega.lattice_size)) / 2.0
    odd = (odd + odd.conj().T) / 2.0
    witness = AlgebraElement(odd, region)
    return ProbeResult(quantity=float(value), region=region, witness=witness)


def purely_imaginary_check(omega: DensityState, a: AlgebraElement,
                           b: AlgebraElement) -> float:
    """``|Re omega(A B)|`` for odd self-adjoint elements on disjoint regions.

    Zero identically: the adjoint of the product is ``B A = -A B``, so the
    expectation equals minus its own conjugate and its real part vanishes
    for every state — the correlation of disjoint odd observables can only
    be imaginary.  Inputs are validated; the return value is the raw
    residual.
    """
    if not a.support.is_orthogonal(b.support):
        raise ValueError("elements must have disjoint supports")
    for name, x in (("first", a), ("second", b)):
        scale = max(1.0, float(np.max(np.abs(x.matrix))))
        if not x.is_self_adjoint(1e-12 * scale):
            raise ValueError(f"{name} element is not self-adjoint")
        if np.max(np.abs(x.matrix + car.theta_matrix(x.matrix, x.lattice_size))) \
                > 1e-12 * scale:
            raise ValueError(f"{name} element is not odd")
    return float(abs(np.real(omega.expectation(a.matrix @ b.matrix))))


def scan_odd_correlations(cases, real_tol: float = 1e-12) -> dict:
    """Check every (even state, odd A, odd B) case for impossible correlations.

    A case is a violation if the real part of ``omega(AB)`` exceeds
    ``real_tol`` or if ``|omega(AB)|`` breaks the Cauchy-Schwarz envelope
    ``sqrt(omega(A*A) omega(B*B))``.  Returns the violation count and the
    worst observed values; a nonzero count would exhibit a state outside the
    even-state framework the probes assume.
    """
    violations = 0
    worst_real = 0.0
    worst_excess = -np.inf
    for omega, a, b in cases:
        corr = omega.expectation(a.matrix @ b.matrix)
        envelope = np.sqrt(
            max(np.real(omega.expectation(a.matrix.conj().T @ a.matrix)), 0.0)
            * max(np.real(omega.expectation(b.matrix.conj().T @ b.matrix)), 0.0)
        )
        real_part = abs(np.real(corr))
        excess = abs(corr) - envelope
        worst_real = max(worst_real, real_part)
        worst_excess = max(worst_excess, excess)
        if real_part > real_tol or excess > real_tol:
            violations += 1
    return {
        "cases": len(cases) if hasattr(cases, "__len__") else None,
        "violations": violations,
        "worst_real_part": float(worst_real),
        "worst_cauchy_schwarz_excess": float(worst_excess),
    }
