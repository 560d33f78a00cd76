"""CAR algebra of a finite fermion chain, with its grading and local structure.

The chain of ``L`` sites is represented on the ``2**L``-dimensional
occupation basis; basis state ``s`` has site ``i`` occupied iff bit ``i``
of ``s`` is set (site 0 is the least significant bit).  The annihilator at
site ``i`` is realized Jordan-Wigner style,

    a_i = v_0 v_1 ... v_{i-1} * (lowering operator at site i),

where ``v_k = a_k* a_k - a_k a_k* = 2 n_k - 1`` is the per-site parity
(-1 on an empty site, +1 on an occupied one).  With this convention the
canonical anticommutation relations

    {a_i, a_j} = 0,      {a_i, a_j*} = delta_ij

hold exactly, and elements supported on disjoint regions commute up to the
grading sign (even elements commute with everything local; odd elements of
disjoint supports anticommute in their odd parts).

The grading automorphism ``theta`` conjugates by the full-chain parity
``v_0 ... v_{L-1}``; it fixes even elements and negates odd ones, and every
element splits as ``A = A_even + A_odd`` with the two parts obtained by
averaging ``A`` with ``theta(A)``.

Monomials in the generators are "column maps" (each occupation state is sent
to at most one occupation state), which is what the kernels in
:mod:`fermichain.kernels` exploit; see :mod:`fermichain._kernels_py` for the
encoding.  The monomial basis used throughout is, per site, one factor out of

    { 1,  a_i,  a_i*,  v_i }

taken over the sites of a region in ascending order.  Distinct such products
are mutually orthogonal for the normalized trace ``tau = Tr / 2**L``, with
squared norms ``(1/2)**(number of a or a* factors)``; this makes orthogonal
projection onto a local subalgebra (the tau-preserving conditional
expectation) a single coefficient pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .regions import Region

# Largest monomial-basis table we are willing to materialize, in entries
# (4**|region| * 2**L).  Covers every workflow in this package; a clear error
# beats an opaque multi-gigabyte allocation.
_BASIS_ENTRY_LIMIT = 1 << 24


def dim(lattice_size: int) -> int:
    return 1 << lattice_size


def tau(matrix: np.ndarray) -> complex:
    """Normalized trace ``Tr(matrix) / N`` (the unique tracial state)."""
    return complex(np.trace(matrix)) / matrix.shape[0]


# ---------------------------------------------------------------------------
# generator encodings
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _string_signs(lattice_size: int) -> np.ndarray:
    """``signs[i, s]`` = product of ``2 n_k(s) - 1`` over ``k < i``."""
    n = dim(lattice_size)
    states = np.arange(n, dtype=np.int64)
    signs = np.empty((lattice_size + 1, n), dtype=np.float64)
    signs[0] = 1.0
    for k in range(lattice_size):
        signs[k + 1] = signs[k] * (2.0 * ((states >> k) & 1) - 1.0)
    return signs


def annihilator_encoding(site: int, lattice_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Column-map encoding of ``a_site`` on the full chain."""
    if not 0 <= site < lattice_size:
        raise ValueError(f"site {site} out of bounds for chain of {lattice_size}")
    n = dim(lattice_size)
    states = np.arange(n, dtype=np.int64)
    occupied = ((states >> site) & 1).astype(bool)
    perm = np.where(occupied, states ^ (1 << site), -1)
    val = np.where(occupied, _string_signs(lattice_size)[site] + 0.0j, 0.0j)
    return perm, val


def creator_encoding(site: int, lattice_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Column-map encoding of ``a_site*`` on the full chain."""
    if not 0 <= site < lattice_size:
        raise ValueError(f"site {site} out of bounds for chain of {lattice_size}")
    n = dim(lattice_size)
    states = np.arange(n, dtype=np.int64)
    empty = (~((states >> site) & 1).astype(bool))
    perm = np.where(empty, states | (1 << site), -1)
    val = np.where(empty, _string_signs(lattice_size)[site] + 0.0j, 0.0j)
    return perm, val


def site_parity_encoding(site: int, lattice_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Encoding of ``v_site = 2 n_site - 1`` (diagonal)."""
    if not 0 <= site < lattice_size:
        raise ValueError(f"site {site} out of bounds for chain of {lattice_size}")
    n = dim(lattice_size)
    states = np.arange(n, dtype=np.int64)
    val = (2.0 * ((states >> site) & 1) - 1.0) + 0.0j
    return states.copy(), val


def identity_encoding(lattice_size: int) -> tuple[np.ndarray, np.ndarray]:
    n = dim(lattice_size)
    return np.arange(n, dtype=np.int64), np.ones(n, dtype=np.complex128)


def grading_encoding(region: Region) -> tuple[np.ndarray, np.ndarray]:
    """Encoding of the grading unitary ``v_R = prod_{i in R} v_i`` (diagonal)."""
    n = dim(region.lattice_size)
    states = np.arange(n, dtype=np.int64)
    val = np.ones(n, dtype=np.float64)
    for site in region.sites:
        val *= 2.0 * ((states >> site) & 1) - 1.0
    return states.copy(), val.astype(np.complex128)


def dagger_encoding(perm: np.ndarray, val: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Encoding of the adjoint of an encoded column map."""
    n = perm.shape[0]
    alive = perm >= 0
    pd = np.full(n, -1, dtype=np.int64)
    vd = np.zeros(n, dtype=np.complex128)
    src = np.arange(n, dtype=np.int64)[alive]
    pd[perm[alive]] = src
    vd[perm[alive]] = np.conj(val[alive])
    return pd, vd


def encoding_dense(perm: np.ndarray, val: np.ndarray) -> np.ndarray:
    """Dense matrix of a single encoded column map."""
    return kernels.scatter(perm[None, :], val[None, :], np.ones(1, dtype=np.complex128))


def encoding_combination_max_abs(encodings, coeffs) -> float:
    """Largest matrix entry (in modulus) of ``sum_k coeffs[k] * m_k``.

    Works entirely on the column maps; used for exact-arithmetic relation
    checks (anticommutators, graded commutators) at sizes where assembling
    dense matrices would dominate the runtime.
    """
    from scipy.sparse import coo_matrix

    rows, cols, data = [], [], []
    n = None
    for (perm, val), c in zip(encodings, coeffs):
        n = perm.shape[0]
        alive = perm >= 0
        rows.append(perm[alive])
        cols.append(np.arange(n, dtype=np.int64)[alive])
        data.append(c * val[alive])
    mat = coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return float(np.max(np.abs(mat.data))) if mat.nnz else 0.0


# ---------------------------------------------------------------------------
# algebra elements and the grading
# ---------------------------------------------------------------------------


@dataclass
class AlgebraElement:
    """A dense operator together with its claimed support region.

    The support claim is checked (via the conditional expectation) in
    :func:`support_residual`; arithmetic tracks supports by set union.
    """

    matrix: np.ndarray
    support: Region

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        n = dim(self.support.lattice_size)
        if self.matrix.shape != (n, n):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match chain of "
                f"{self.support.lattice_size} sites"
            )

    @property
    def lattice_size(self) -> int:
        return self.support.lattice_size

    def dagger(self) -> "AlgebraElement":
        return AlgebraElement(self.matrix.conj().T, self.support)

    def tau(self) -> complex:
        return tau(self.matrix)

    def norm(self) -> float:
        """Operator (spectral) norm."""
        return float(np.linalg.norm(self.matrix, 2))

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.matrix + other.matrix, self.support.union(other.support))

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.matrix - other.matrix, self.support.union(other.support))

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.matrix, self.support)

    def __mul__(self, scalar) -> "AlgebraElement":
        if isinstance(scalar, AlgebraElement):
            raise TypeError("'*' is scalar multiplication; use '@' for "
                            "operator products")
        return AlgebraElement(self.matrix * scalar, self.support)

    __rmul__ = __mul__

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.matrix @ other.matrix, self.support.union(other.support))


def identity_element(lattice_size: int) -> AlgebraElement:
    return AlgebraElement(np.eye(dim(lattice_size), dtype=np.complex128),
                          Region.empty(lattice_size))


def annihilator(site: int, lattice_size: int) -> AlgebraElement:
    """``a_site`` as an element supported on the single site."""
    p, v = annihilator_encoding(site, lattice_size)
    return AlgebraElement(encoding_dense(p, v), Region((site,), lattice_size))


def creator(site: int, lattice_size: int) -> AlgebraElement:
    p, v = creator_encoding(site, lattice_size)
    return AlgebraElement(encoding_dense(p, v), Region((site,), lattice_size))


def number_operator(site: int, lattice_size: int) -> AlgebraElement:
    c = creator(site, lattice_size)
    a = annihilator(site, lattice_size)
    return AlgebraElement(c.matrix @ a.matrix, Region((site,), lattice_size))


def grading_unitary(region: Region) -> AlgebraElement:
    """``v_R``: self-adjoint unitary implementing the grading inside ``A_R``."""
    if region.is_empty:
        raise ValueError("grading unitary of the empty region is not defined")
    p, v = grading_encoding(region)
    return AlgebraElement(np.diag(v), region)


@lru_cache(maxsize=16)
def parity_signs(lattice_size: int) -> np.ndarray:
    """Diagonal of the full-chain grading unitary ``v_0 ... v_{L-1}``."""
    _, val = grading_encoding(Region.full(lattice_size))
    return val.real.copy()


def theta_matrix(matrix: np.ndarray, lattice_size: int) -> np.ndarray:
    """Grading automorphism on a dense matrix: conjugation by the chain parity."""
    signs = parity_signs(lattice_size)
    return matrix * np.outer(signs, signs)


def theta(element: AlgebraElement) -> AlgebraElement:
    """Grading automorphism; support is preserved."""
    return AlgebraElement(theta_matrix(element.matrix, element.lattice_size), element.support)


def theta_encoding(perm: np.ndarray, val: np.ndarray,
                   lattice_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Grading automorphism applied to an encoded column map."""
    signs = parity_signs(lattice_size)
    n = perm.shape[0]
    alive = perm >= 0
    v = val.copy()
    v[alive] = v[alive] * signs[perm[alive]] * signs[np.arange(n)[alive]]
    return perm.copy(), v


@dataclass
class GradedSplit:
    """Even/odd decomposition ``A = even + odd`` under the grading."""

    even: AlgebraElement
    odd: AlgebraElement

    def reassemble(self) -> AlgebraElement:
        return self.even + self.odd


def even_odd_split(element: AlgebraElement) -> GradedSplit:
    """Split by averaging with the grading image: ``A_± = (A ± theta(A)) / 2``."""
    th = theta_matrix(element.matrix, element.lattice_size)
    even = AlgebraElement((element.matrix + th) / 2.0, element.support)
    odd = AlgebraElement((element.matrix - th) / 2.0, element.support)
    return GradedSplit(even=even, odd=odd)


# ---------------------------------------------------------------------------
# monomial bases and conditional expectations
# ---------------------------------------------------------------------------

_FACTOR_NORM_SQ = (1.0, 0.5, 0.5, 1.0)   # per-site factors 1, a, a*, v
_FACTOR_PARITY = (0, 1, 1, 0)


def _factor_label(kind: int, site: int) -> str:
    return ("", f"a{site}", f"a{site}*", f"v{site}")[kind]


@lru_cache(maxsize=16)
def _site_factor_encodings(lattice_size: int):
    out = []
    for site in range(lattice_size):
        out.append(
            (
                identity_encoding(lattice_size),
                annihilator_encoding(site, lattice_size),
                creator_encoding(site, lattice_size),
                site_parity_encoding(site, lattice_size),
            )
        )
    return out


@dataclass
class Monomial:
    """One basis monomial: product of per-site factors over ascending sites."""

    label: str
    sites: tuple[int, ...]       # sites carrying a non-identity factor
    parity: int                  # number of a / a* factors mod 2
    norm_sq: float               # tau(m* m)
    perm: np.ndarray
    val: np.ndarray

    def dense(self) -> np.ndarray:
        return encoding_dense(self.perm, self.val)

    def as_element(self, lattice_size: int) -> AlgebraElement:
        return AlgebraElement(self.dense(), Region(self.sites, lattice_size))


@dataclass
class MonomialBasis:
    """A tau-orthogonal family of monomials spanning a subalgebra.

    For a region ``R`` this is the full product basis over ``R`` (dimension
    ``4**|R|``); the commutant construction reuses the same container for a
    different monomial family.  Rows of ``P``/``V`` are the encodings.
    """

    region: Region | None
    lattice_size: int
    monomials: list[Monomial]
    P: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    _dagger: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.monomials)

    def __getitem__(self, k: int) -> Monomial:
        return self.monomials[k]

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.monomials]

    @property
    def norms_sq(self) -> np.ndarray:
        return np.array([m.norm_sq for m in self.monomials])

    @property
    def parities(self) -> np.ndarray:
        return np.array([m.parity for m in self.monomials], dtype=np.int64)

    def coefficients(self, matrix: np.ndarray) -> np.ndarray:
        """Expansion coefficients ``tau(m_k* A) / tau(m_k* m_k)``."""
        return kernels.inner_batch(self.P, self.V, np.ascontiguousarray(matrix,
                                   dtype=np.complex128)) / self.norms_sq

    def assemble(self, coeffs: np.ndarray) -> np.ndarray:
        """Dense ``sum_k coeffs[k] m_k``."""
        return kernels.scatter(self.P, self.V, np.ascontiguousarray(coeffs,
                               dtype=np.complex128))

    def project(self, matrix: np.ndarray) -> np.ndarray:
        """Orthogonal projection of ``matrix`` onto the span of the family."""
        return self.assemble(self.coefficients(matrix))

    def expectations(self, density: np.ndarray) -> np.ndarray:
        """``Tr(density @ m_k)`` for every monomial."""
        return kernels.expect_batch(self.P, self.V,
                                    np.ascontiguousarray(density, dtype=np.complex128))

    def taus(self) -> np.ndarray:
        """``tau(m_k)`` for every monomial (1 for the identity, else 0)."""
        return kernels.trace_batch(self.P, self.V) / self.P.shape[1]

    def dagger_encodings(self) -> tuple[np.ndarray, np.ndarray]:
        if self._dagger is None:
            pd = np.empty_like(self.P)
            vd = np.empty_like(self.V)
            for k in range(len(self)):
                pd[k], vd[k] = dagger_encoding(self.P[k], self.V[k])
            self._dagger = (pd, vd)
        return self._dagger

    def reconstruction_density(self, values: np.ndarray) -> np.ndarray:
        """The density in the span whose expectations on the family are ``values``.

        Solves ``Tr(D m_k) = values[k]``: with the normalized trace this is
        ``D = sum_k values[k] m_k* / (N tau(m_k* m_k))``.
        """
        pd, vd = self.dagger_encodings()
        n = self.P.shape[1]
        coeffs = np.asarray(values, dtype=np.complex128) / (n * self.norms_sq)
        return kernels.scatter(pd, vd, coeffs)


def _basis_size_guard(n_monomials: int, n: int) -> None:
    if n_monomials * n > _BASIS_ENTRY_LIMIT:
        raise ValueError(
            f"monomial table of {n_monomials} x {n} entries exceeds the "
            f"supported size; use a smaller region or chain"
        )


@lru_cache(maxsize=64)
def monomial_basis(region: Region) -> MonomialBasis:
    """The tau-orthogonal monomial basis of the local algebra on ``region``."""
    lattice = region.lattice_size
    n = dim(lattice)
    _basis_size_guard(4 ** len(region), n)
    factors = _site_factor_encodings(lattice)

    p0, v0 = identity_encoding(lattice)
    P = p0[None, :].copy()
    V = v0[None, :].copy()
    meta = [((), 0, 1.0, ())]  # (label parts, parity, norm_sq, sites)

    for site in region.sites:
        k = P.shape[0]
        newP = np.empty((k * 4, n), dtype=np.int64)
        newV = np.empty((k * 4, n), dtype=np.complex128)
        new_meta = []
        for f in range(4):
            pf, vf = factors[site][f]
            bP, bV = kernels.compose_batch(P, V, pf, vf)
            newP[f::4] = bP
            newV[f::4] = bV
        for parts, parity, norm_sq, sites in meta:
            for f in range(4):
                new_meta.append(
                    (
                        parts + ((_factor_label(f, site),) if f else ()),
                        (parity + _FACTOR_PARITY[f]) % 2,
                        norm_sq * _FACTOR_NORM_SQ[f],
                        sites + ((site,) if f else ()),
                    )
                )
        P, V, meta = newP, newV, new_meta

    monomials = [
        Monomial(
            label=" ".join(parts) if parts else "1",
            sites=sites,
            parity=parity,
            norm_sq=norm_sq,
            perm=P[k],
            val=V[k],
        )
        for k, (parts, parity, norm_sq, sites) in enumerate(meta)
    ]
    return MonomialBasis(region=region, lattice_size=lattice, monomials=monomials, P=P, V=V)


def conditional_expectation_matrix(matrix: np.ndarray, region: Region) -> np.ndarray:
    """Tau-preserving conditional expectation onto ``A_region`` (dense input)."""
    return monomial_basis(region).project(matrix)


def conditional_expectation(element: AlgebraElement, region: Region) -> AlgebraElement:
    """Tau-preserving conditional expectation of an element onto ``A_region``."""
    return AlgebraElement(conditional_expectation_matrix(element.matrix, region), region)


def support_residual(element: AlgebraElement) -> float:
    """How far the matrix is from actually lying in its claimed support algebra."""
    proj = conditional_expectation_matrix(element.matrix, element.support)
    return float(np.max(np.abs(proj - element.matrix)))


def small_representation(matrix: np.ndarray, region: Region) -> np.ndarray:
    """Image of an element of ``A_region`` in the standard ``2**|R|`` copy.

    The local algebra on ``|R|`` sites is a full matrix algebra of dimension
    ``2**|R|``; transferring monomial-basis coefficients to the basis of a
    fresh ``|R|``-site chain realizes the isomorphism (a unital one, so
    operator norms are preserved, while the ambient trace picks up the
    multiplicity ``2**L / 2**|R|``).  The input must be supported in the
    region; anything orthogonal to its algebra is discarded by the expansion.
    """
    r = len(region)
    if r == 0:
        return np.array([[tau(matrix)]], dtype=np.complex128)
    coeffs = monomial_basis(region).coefficients(matrix)
    return monomial_basis(Region.full(r)).assemble(coeffs)


@lru_cache(maxsize=32)
def commutant_basis(region: Region) -> MonomialBasis:
    """Tau-orthogonal basis of the commutant of ``A_region``.

    The commutant of a local algebra is strictly larger than the opposite
    local algebra: it is spanned by the even monomials of the complement
    together with ``v_R`` times the odd ones.  Each product is again a single
    canonical monomial (parity factors on all of ``region``, the original
    factors outside), so orthogonality and norms carry over unchanged.
    """
    if region.is_empty:
        raise ValueError("commutant basis of the empty region is the full algebra; "
                         "use monomial_basis(Region.full(L)) instead")
    comp = region.complement()
    base = monomial_basis(comp)
    pR, vR = grading_encoding(region)

    monomials = []
    perms = []
    vals = []
    for m in base.monomials:
        if m.parity == 0:
            monomials.append(m)
            perms.append(m.perm)
            vals.append(m.val)
        else:
            p, v = kernels.compose(pR, vR, m.perm, m.val)
            label_parts = sorted(
                [f"v{s}" for s in region.sites] + (m.label.split() if m.label != "1" else []),
                key=lambda t: (int(t.rstrip("*").lstrip("av")), t),
            )
            mono = Monomial(
                label=" ".join(label_parts) if label_parts else "1",
                sites=tuple(sorted(set(region.sites) | set(m.sites))),
                parity=m.parity,
                norm_sq=m.norm_sq,
                perm=p,
                val=v,
            )
            monomials.append(mono)
            perms.append(p)
            vals.append(v)
    P = np.stack(perms)
    V = np.stack(vals)
    return MonomialBasis(region=None, lattice_size=region.lattice_size,
                         monomials=monomials, P=P, V=V)


# ---------------------------------------------------------------------------
# random elements (for tests, samplers, and probe panels)
# ---------------------------------------------------------------------------


def random_element(region: Region, rng: np.random.Generator, *,
                   parity: int | None = None, hermitian: bool = False,
                   include_identity: bool = True) -> AlgebraElement:
    """Random element of ``A_region`` with optional fixed parity / adjointness.

    Coefficients over the monomial basis are standard complex Gaussians; with
    ``hermitian`` the result is averaged with its adjoint, which preserves the
    parity constraint (the grading commutes with the adjoint).
    """
    basis = monomial_basis(region)
    coeffs = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    if parity is not None:
        coeffs = np.where(basis.parities == parity, coeffs, 0.0)
    if not include_identity:
        coeffs[0] = 0.0
    mat = basis.assemble(coeffs)
    if hermitian:
        mat = (mat + mat.conj().T) / 2.0
    return AlgebraElement(mat, region)
