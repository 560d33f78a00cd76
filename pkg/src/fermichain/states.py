"""States of the chain: Gibbs, KMS checks, perturbations, restrictions.

States are positive normalized functionals, held as density matrices for the
unnormalized trace: ``omega(A) = Tr(D A)``.  The Gibbs state of a Hamiltonian
``H`` at inverse temperature ``beta`` is ``e^(-beta H) / Z``; on a finite
chain it is the unique state satisfying the KMS boundary condition

    omega(A e^(-beta H) B e^(beta H)) = omega(B A),

which :func:`kms_residual` checks directly in the eigenbasis of ``H``.

Removing from a potential every term that meets a region ``I`` and taking
the Gibbs state of the remainder yields the *decoupled* equilibrium state:
it is even, lies in the algebra of the complement, and factorizes exactly as

    omega(A B) = tau(A) omega(B),   A supported in I, B in the complement,

with ``tau`` the normalized trace (:func:`product_check` measures this).
Adding to its density a small odd direction supported in ``I``
(:func:`noneven_perturbation`) produces a noneven state with the *same*
restriction to the complement — the two are indistinguishable outside ``I``
yet differ globally, which is the engine behind the free-energy comparisons
in :mod:`fermichain.stability`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import car
from . import kernels
from .car import AlgebraElement
from .potentials import Potential, local_hamiltonian, prune, total_hamiltonian
from .regions import Region

_HERM_TOL = 1e-11
_TRACE_TOL = 1e-9
_PSD_TOL = 1e-11


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, AlgebraElement) else np.asarray(op, dtype=np.complex128)


@dataclass
class DensityState:
    """A state, as a density matrix for the unnormalized trace."""

    density: np.ndarray
    label: str = "state"
    validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        self.density = np.asarray(self.density, dtype=np.complex128)
        n = self.density.shape[0]
        if self.density.shape != (n, n) or n & (n - 1):
            raise ValueError(f"density shape {self.density.shape} is not (2**L, 2**L)")
        if self.validate:
            scale = max(1.0, float(np.max(np.abs(self.density))))
            if np.max(np.abs(self.density - self.density.conj().T)) > _HERM_TOL * scale:
                raise ValueError(f"density of {self.label!r} is not self-adjoint")
            if abs(np.trace(self.density).real - 1.0) > _TRACE_TOL or \
                    abs(np.trace(self.density).imag) > _TRACE_TOL:
                raise ValueError(f"density of {self.label!r} has trace {np.trace(self.density)}")
            if float(np.min(np.linalg.eigvalsh(self.density))) < -_PSD_TOL:
                raise ValueError(f"density of {self.label!r} is not positive semidefinite")

    @property
    def lattice_size(self) -> int:
        return int(self.density.shape[0]).bit_length() - 1

    def expectation(self, op) -> complex:
        mat = _as_matrix(op)
        return complex(np.einsum("ij,ji->", self.density, mat))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.density)

    def lambda_min(self) -> float:
        return float(np.min(self.eigenvalues()))

    def theta(self) -> "DensityState":
        """The composed state ``omega o theta`` (its density is the grading image)."""
        return DensityState(car.theta_matrix(self.density, self.lattice_size),
                            label=f"{self.label}.theta", validate=False)

    def evenness_defect(self) -> float:
        """Largest entry of ``D - theta(D)``; zero exactly for even states."""
        return float(np.max(np.abs(self.density -
                                   car.theta_matrix(self.density, self.lattice_size))))

    def is_even(self, tol: float = 1e-12) -> bool:
        return self.evenness_defect() <= tol


def tracial_state(lattice_size: int) -> DensityState:
    n = car.dim(lattice_size)
    return DensityState(np.eye(n, dtype=np.complex128) / n, label="tau", validate=False)


# ---------------------------------------------------------------------------
# Gibbs states and the KMS condition
# ---------------------------------------------------------------------------


def gibbs_state(hamiltonian, beta: float, label: str | None = None) -> DensityState:
    """``e^(-beta H) / Z``, computed from the eigendecomposition of ``H``."""
    h = _as_matrix(hamiltonian)
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > 1e-12 * scale:
        raise ValueError("Hamiltonian is not self-adjoint")
    if not np.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    eps, u = np.linalg.eigh(h)
    # shift the spectrum so the largest weight is 1 before normalizing
    w = np.exp(-beta * (eps - (np.min(eps) if beta >= 0 else np.max(eps))))
    w /= np.sum(w)
    density = (u * w[None, :]) @ u.conj().T
    density = (density + density.conj().T) / 2.0
    return DensityState(density, label=label or f"gibbs(beta={beta:g})", validate=False)


def random_pair_panel(lattice_size: int, count: int,
                      rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Random operator pairs of unit spectral norm, for KMS residual panels."""
    n = car.dim(lattice_size)
    pairs = []
    for _ in range(count):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        pairs.append((a / np.linalg.norm(a, 2), b / np.linalg.norm(b, 2)))
    return pairs


def kms_residual(omega: DensityState, hamiltonian, beta: float, pairs) -> float:
    """Worst deviation from the KMS boundary condition over the given pairs.

    Both sides are evaluated in the eigenbasis of ``H``, where the analytic
    continuation of the dynamics is entrywise multiplication by
    ``exp(-beta (eps_k - eps_l))``; no inverse of ``e^(-beta H)`` is formed.
    """
    h = _as_matrix(hamiltonian)
    eps, u = np.linalg.eigh(h)
    d_t = u.conj().T @ omega.density @ u
    weight = np.exp(-beta * (eps[:, None] - eps[None, :]))
    worst = 0.0
    for a, b in pairs:
        a_t = u.conj().T @ _as_matrix(a) @ u
        b_t = u.conj().T @ _as_matrix(b) @ u
        lhs = np.einsum("ij,jk,ki->", d_t, a_t, b_t * weight)
        rhs = np.einsum("ij,jk,ki->", d_t, b_t, a_t)
        worst = max(worst, abs(lhs - rhs))
    return float(worst)


def perturbed_state(potential: Potential, beta: float, region: Region,
                    validate: bool = True) -> DensityState:
    """Gibbs state of the potential with every term meeting ``region`` removed.

    The result is even and lies in the algebra of the complement, so it
    factorizes against the region as ``omega(AB) = tau(A) omega(B)``.  When
    ``validate`` is set, its relative-entropy distance to the full Gibbs
    state is checked against the analytic bound ``2 * |beta| * ||H(region)||``
    in both orderings.
    """
    remainder = total_hamiltonian(prune(potential, region))
    state = gibbs_state(remainder, beta,
                        label=f"perturbed(beta={beta:g}, I={region.label()})")
    if validate:
        from . import entropy  # deferred: entropy builds on states

        full = gibbs_state(total_hamiltonian(potential), beta)
        bound = 2.0 * abs(beta) * np.linalg.norm(
            local_hamiltonian(potential, region).matrix, 2)
        slack = 1e-8
        fwd = entropy.relative_entropy(full, state)
        bwd = entropy.relative_entropy(state, full)
        if not (fwd.value <= bound + slack and bwd.value <= bound + slack):
            raise ValueError(
                f"perturbed state failed the entropy bound: {fwd.value:.3e} / "
                f"{bwd.value:.3e} vs {bound:.3e}"
            )
    return state


# ---------------------------------------------------------------------------
# restrictions and product structure
# ---------------------------------------------------------------------------


@dataclass
class RestrictedState:
    """A state restricted to a region: its values on the monomial basis."""

    region: Region
    values: np.ndarray  # aligned with monomial_basis(region)

    @property
    def lattice_size(self) -> int:
        return self.region.lattice_size

    @property
    def basis(self) -> car.MonomialBasis:
        return car.monomial_basis(self.region)

    @property
    def labels(self) -> list[str]:
        return self.basis.labels

    def evaluate(self, element: AlgebraElement) -> complex:
        """Value on an element supported in the region, via its expansion."""
        if not element.support.is_subregion(self.region):
            raise ValueError(
                f"element supported on {element.support.sites} is not within "
                f"region {self.region.sites}"
            )
        coeffs = self.basis.coefficients(element.matrix)
        return complex(np.dot(coeffs, self.values))

    def max_difference(self, other: "RestrictedState") -> float:
        if other.region != self.region:
            raise ValueError("restrictions live on different regions")
        return float(np.max(np.abs(self.values - other.values)))

    def product_extension(self) -> DensityState:
        """The unique extension annihilating everything orthogonal to the region.

        Its density lies in the region's algebra and reproduces the stored
        values; against any element of the complement it factorizes through
        the normalized trace.
        """
        density = self.basis.reconstruction_density(self.values)
        density = (density + density.conj().T) / 2.0
        return DensityState(density, label=f"product-extension({self.region.label()})",
                            validate=False)

    def small_density(self) -> np.ndarray:
        """Density on the ``2**|R|``-dimensional standard copy of the algebra.

        The region's algebra is a full matrix algebra of that size, embedded
        with uniform multiplicity; restricting a state is a density on the
        standard copy, obtained by transferring basis coefficients to the
        corresponding basis of a fresh chain on ``|R|`` sites.
        """
        r = len(self.region)
        if r == 0:
            return np.array([[1.0 + 0.0j]])
        n_big = car.dim(self.lattice_size)
        m = car.dim(r)
        rho = (n_big / m) * car.small_representation(
            self.basis.reconstruction_density(self.values), self.region)
        return (rho + rho.conj().T) / 2.0

    def as_dict(self) -> dict[str, list[float]]:
        return {lab: [float(v.real), float(v.imag)]
                for lab, v in zip(self.labels, self.values)}


def restrict(omega: DensityState, region: Region) -> RestrictedState:
    basis = car.monomial_basis(region)
    return RestrictedState(region=region, values=basis.expectations(omega.density))


def product_check(omega: DensityState, region: Region) -> float:
    """Worst deviation of ``omega(A B)`` from ``tau(A) omega(B)``.

    ``A`` ranges over the monomial basis of the region, ``B`` over the
    monomial basis of its complement; by linearity this bounds the defect on
    the whole product algebra.
    """
    inner = car.monomial_basis(region)
    outer = car.monomial_basis(region.complement())
    cross = kernels.pair_expect(inner.P, inner.V, outer.P, outer.V,
                                np.ascontiguousarray(omega.density))
    taus = inner.taus()
    outer_vals = outer.expectations(omega.density)
    return float(np.max(np.abs(cross - np.outer(taus, outer_vals))))


# ---------------------------------------------------------------------------
# noneven perturbations of decoupled states
# ---------------------------------------------------------------------------


def odd_direction(region: Region) -> AlgebraElement:
    """Default odd self-adjoint direction in the region: ``a_i + a_i*`` at its
    first site.  Unit norm, traceless, orthogonal to the complement algebra."""
    if region.is_empty:
        raise ValueError("need a nonempty region for the odd direction")
    site = min(region.sites)
    a = car.annihilator(site, region.lattice_size)
    return AlgebraElement(a.matrix + a.matrix.conj().T, Region((site,), region.lattice_size))


def max_perturbation_strength(omega: DensityState, direction: AlgebraElement) -> float:
    """Largest coefficient keeping ``D + lam X`` positive by the spectral bound
    ``lam <= lambda_min(D) / (2 ||X||)``."""
    nrm = direction.norm()
    if nrm == 0.0:
        raise ValueError("zero direction")
    return 0.5 * omega.lambda_min() / nrm


def noneven_perturbation(omega: DensityState, region: Region,
                         direction: AlgebraElement | None = None,
                         strength: float | None = None) -> DensityState:
    """Add an odd direction supported in ``region`` to the density of ``omega``.

    The direction must be self-adjoint, odd, and orthogonal to the algebra of
    the complement; the default is ``a_i + a_i*`` at the region's first site.
    The strength defaults to its largest safe value, half of
    ``lambda_min / ||X||``.  The result restricts to the complement exactly as
    ``omega`` does, its even part is ``omega`` itself, and it is noneven.
    """
    x = odd_direction(region) if direction is None else direction
    lattice = omega.lattice_size
    if x.support.lattice_size != lattice:
        raise ValueError("direction lives on a different chain")
    if not x.support.is_subregion(region):
        raise ValueError(f"direction supported on {x.support.sites}, not inside "
                         f"{region.sites}")
    scale = max(1.0, float(np.max(np.abs(x.matrix))))
    if not x.is_self_adjoint(1e-12 * scale):
        raise ValueError("direction is not self-adjoint")
    if np.max(np.abs(x.matrix + car.theta_matrix(x.matrix, lattice))) > 1e-12 * scale:
        raise ValueError("direction is not odd")
    comp = region.complement()
    overlap = float(np.max(np.abs(car.monomial_basis(comp).coefficients(x.matrix))))
    if overlap > 1e-12 * scale:
        raise ValueError("direction is not orthogonal to the complement algebra")

    lam_max = max_perturbation_strength(omega, x)
    lam = lam_max if strength is None else float(strength)
    if not 0.0 < lam <= lam_max * (1.0 + 1e-12):
        raise ValueError(f"strength {lam} outside (0, {lam_max}]")
    density = omega.density + lam * x.matrix
    return DensityState(density, label=f"{omega.label}+{lam:.3e}*odd", validate=True)


# ---------------------------------------------------------------------------
# vector states implementing the grading breakdown at a single site
# ---------------------------------------------------------------------------


def remark2_construct(outer: DensityState, u: AlgebraElement | None = None) -> DensityState:
    """Vector state whose restriction outside site 0 is the even average of a
    given state there, yet which assigns expectation 1 to an odd unitary.

    The given state is first extended from the complement of site 0 as a
    product with the normalized trace; the vector is built from the square
    root of that extension's density (a standard purification over the chain
    algebra itself, with the state read as ``A -> Tr(Xi* A Xi)``) by applying
    ``(1 + u)/sqrt(2)`` with the odd self-adjoint unitary ``u = a_0 + a_0*``.
    The construction checks that the result restricts outside site 0 to the
    even average of the input and raises otherwise.
    """
    lattice = outer.lattice_size
    site0 = Region((0,), lattice)
    comp = site0.complement()
    if u is None:
        a0 = car.annihilator(0, lattice)
        u = AlgebraElement(a0.matrix + a0.matrix.conj().T, site0)
    n = car.dim(lattice)
    scale = max(1.0, float(np.max(np.abs(u.matrix))))
    if not u.is_self_adjoint(1e-12 * scale):
        raise ValueError("u is not self-adjoint")
    if np.max(np.abs(u.matrix + car.theta_matrix(u.matrix, lattice))) > 1e-12 * scale:
        raise ValueError("u is not odd")
    if np.max(np.abs(u.matrix @ u.matrix - np.eye(n))) > 1e-12 * scale:
        raise ValueError("u is not unitary")

    extended = car.conditional_expectation_matrix(outer.density, comp)
    extended = (extended + extended.conj().T) / 2.0
    evals, vecs = np.linalg.eigh(extended)
    evals = np.clip(evals, 0.0, None)
    root = (vecs * np.sqrt(evals)[None, :]) @ vecs.conj().T  # Hilbert-Schmidt vector
    xi = (root + u.matrix @ root) / np.sqrt(2.0)
    weight = float(np.trace(xi @ xi.conj().T).real)
    density = (xi @ xi.conj().T) / weight
    state = DensityState(density, label="site0-vector-state", validate=True)

    target = 0.5 * (outer.density + car.theta_matrix(outer.density, lattice))
    expected = car.monomial_basis(comp).expectations(target)
    got = restrict(state, comp).values
    defect = float(np.max(np.abs(expected - got)))
    if defect > 1e-10:
        raise RuntimeError(f"vector state restriction defect {defect:.3e}")
    return state


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


def snapshot(omega: DensityState, regions: list[Region]) -> dict:
    """JSON-ready summary: label, spectrum, and restriction tables."""
    return {
        "label": omega.label,
        "eigenvalues": [float(x) for x in omega.eigenvalues()],
        "restrictions": {
            region.label(): restrict(omega, region).as_dict() for region in regions
        },
    }
