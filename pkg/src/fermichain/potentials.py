"""Interaction potentials on the chain and their local Hamiltonians.

A potential assigns to finitely many regions ``K`` a self-adjoint, even
element ``Phi(K)`` of the local algebra on ``K``.  A potential is *standard*
when every term is annihilated by the conditional expectation onto any
region that does not contain its support:

    E_J(Phi(K)) = 0  whenever  K is not contained in J.

Standard form makes the assignment unique: any raw interaction term can be
brought to it by the inclusion-exclusion sweep in :func:`standardize`, which
redistributes each raw term over the subregions of its support and discards
the scalar part.

The local Hamiltonian of a region collects every term whose support meets it,

    H(I) = sum { Phi(K) : K intersects I },

so ``H(I)`` generally extends beyond ``I``.  Dropping exactly those terms
(:func:`prune`) leaves the surface-free remainder ``H~`` with
``H(whole chain) = H(I) + H~(whole chain)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import car
from .car import AlgebraElement
from .regions import Region

# Entrywise size below which a standardized term is considered absent.
_TERM_DROP_TOL = 1e-13


def _region_sort_key(region: Region):
    return (len(region.sites), region.sites)


@dataclass
class Potential:
    """Finitely many interaction terms, keyed by their support region.

    ``records`` optionally keeps the named-term description the potential was
    built from (see :func:`potential_from_records`); it is required for text
    serialization and carried through by the built-in model constructors.
    """

    lattice_size: int
    terms: dict[Region, np.ndarray]
    records: list[dict] | None = field(default=None)

    def __post_init__(self) -> None:
        n = car.dim(self.lattice_size)
        for region, term in self.terms.items():
            if region.lattice_size != self.lattice_size:
                raise ValueError(f"term region {region} not on chain of {self.lattice_size}")
            if region.is_empty:
                raise ValueError("potential terms must have nonempty support")
            if term.shape != (n, n):
                raise ValueError(f"term for {region.sites} has shape {term.shape}")

    def regions(self) -> list[Region]:
        return sorted(self.terms.keys(), key=_region_sort_key)

    def term(self, region: Region) -> np.ndarray:
        return self.terms[region]

    def __len__(self) -> int:
        return len(self.terms)


def standardize(raw: Mapping[Region, AlgebraElement | np.ndarray]) -> Potential:
    """Bring raw interaction terms to standard form.

    Each raw term must be self-adjoint, even, and supported in its region
    (all three are checked).  Its standardized pieces are

        contribution to J  =  sum over K below J of (-1)^(|J| - |K|) E_K(term)

    for the nonempty subregions ``J`` of its support; the empty-region piece
    (a multiple of the identity) is dropped.  The pieces add back to the raw
    term minus its trace, and each piece is annihilated by the conditional
    expectation onto any region not containing it.
    """
    if not raw:
        raise ValueError("no raw terms given")
    lattice = next(iter(raw.keys())).lattice_size
    out: dict[Region, np.ndarray] = {}
    for region, term in raw.items():
        mat = term.matrix if isinstance(term, AlgebraElement) else np.asarray(term,
                                                                              dtype=np.complex128)
        elem = AlgebraElement(mat, region)
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12 * scale:
            raise ValueError(f"raw term on {region.sites} is not self-adjoint")
        if np.max(np.abs(mat - car.theta_matrix(mat, lattice))) > 1e-12 * scale:
            raise ValueError(f"raw term on {region.sites} is not even")
        if car.support_residual(elem) > 1e-12 * scale:
            raise ValueError(f"raw term on {region.sites} is not supported in its region")

        projections = {sub.sites: car.conditional_expectation_matrix(mat, sub)
                       for sub in region.subregions()}
        for sub in region.subregions(include_empty=False):
            contrib = np.zeros_like(mat)
            for inner in sub.subregions():
                sign = (-1) ** (len(sub) - len(inner))
                contrib += sign * projections[inner.sites]
            if np.max(np.abs(contrib)) <= _TERM_DROP_TOL * scale:
                continue
            if sub in out:
                out[sub] = out[sub] + contrib
            else:
                out[sub] = contrib
    out = {r: t for r, t in out.items() if np.max(np.abs(t)) > _TERM_DROP_TOL}
    out = {r: out[r] for r in sorted(out.keys(), key=_region_sort_key)}
    return Potential(lattice_size=lattice, terms=out)


@dataclass
class LocalHamiltonian:
    """``H(I)``: the sum of potential terms whose support meets ``I``."""

    region: Region
    element: AlgebraElement

    @property
    def matrix(self) -> np.ndarray:
        return self.element.matrix


def local_hamiltonian(potential: Potential, region: Region) -> LocalHamiltonian:
    if region.is_empty:
        raise ValueError("local Hamiltonian of the empty region is not defined")
    n = car.dim(potential.lattice_size)
    total = np.zeros((n, n), dtype=np.complex128)
    support = Region.empty(potential.lattice_size)
    for k in potential.regions():
        if k.intersects(region):
            total += potential.terms[k]
            support = support.union(k)
    return LocalHamiltonian(region=region, element=AlgebraElement(total, support))


def total_hamiltonian(potential: Potential) -> AlgebraElement:
    """``H`` of the whole chain (every term contributes)."""
    return local_hamiltonian(potential, Region.full(potential.lattice_size)).element


def prune(potential: Potential, region: Region) -> Potential:
    """Remove every term whose support meets ``region``.

    The remainder generates the dynamics of the complement decoupled from
    ``region``; its total Hamiltonian is supported in the complement and is
    even there.
    """
    kept = {k: t for k, t in potential.terms.items() if k.is_orthogonal(region)}
    return Potential(lattice_size=potential.lattice_size, terms=kept)


def derivation_apply(potential: Potential, element: AlgebraElement) -> AlgebraElement:
    """Generator of the dynamics on a local element: ``i [H(support), A]``.

    Only the terms meeting the support of ``A`` contribute to the commutator
    (everything else commutes with ``A`` up to grading, and potential terms
    are even), so the local Hamiltonian of the support suffices.
    """
    if element.support.is_empty:
        n = car.dim(element.lattice_size)
        return AlgebraElement(np.zeros((n, n), dtype=np.complex128), element.support)
    ham = local_hamiltonian(potential, element.support)
    mat = 1j * (ham.matrix @ element.matrix - element.matrix @ ham.matrix)
    return AlgebraElement(mat, ham.element.support.union(element.support))


@dataclass
class PotentialReport:
    """Per-condition residuals from :func:`validate_potential`."""

    residuals: dict[str, float]
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.residuals.values())


def validate_potential(potential: Potential) -> PotentialReport:
    """Check support, self-adjointness, evenness, and standardness of all terms.

    Standardness is checked against the co-atoms of each support (drop one
    site at a time) plus the empty region; by the tower property of the
    conditional expectations this covers every region not containing the
    support.
    """
    lattice = potential.lattice_size
    res = {"support": 0.0, "self_adjoint": 0.0, "even": 0.0, "standard": 0.0}
    for region in potential.regions():
        term = potential.terms[region]
        res["self_adjoint"] = max(res["self_adjoint"],
                                  float(np.max(np.abs(term - term.conj().T))))
        res["even"] = max(res["even"],
                          float(np.max(np.abs(term - car.theta_matrix(term, lattice)))))
        res["support"] = max(res["support"],
                             car.support_residual(AlgebraElement(term, region)))
        res["standard"] = max(res["standard"], abs(car.tau(term)))
        for site in region.sites:
            sub = region.difference(Region((site,), lattice))
            proj = car.conditional_expectation_matrix(term, sub)
            res["standard"] = max(res["standard"], float(np.max(np.abs(proj))))
    return PotentialReport(residuals=res)


# ---------------------------------------------------------------------------
# named terms, models, and text serialization
# ---------------------------------------------------------------------------


def _build_term(name: str, sites: list[int], coefficient: float,
                lattice_size: int) -> tuple[Region, np.ndarray]:
    if name == "hop":
        i, j = sites
        ad_i = car.creator(i, lattice_size).matrix
        a_j = car.annihilator(j, lattice_size).matrix
        hop = ad_i @ a_j
        return Region((i, j), lattice_size), coefficient * (hop + hop.conj().T)
    if name in ("num", "num_raw"):
        (i,) = sites
        n_i = car.number_operator(i, lattice_size).matrix
        if name == "num":
            n_i = n_i - 0.5 * np.eye(car.dim(lattice_size))
        return Region((i,), lattice_size), coefficient * n_i
    if name == "nn":
        i, j = sites
        eye = np.eye(car.dim(lattice_size))
        n_i = car.number_operator(i, lattice_size).matrix - 0.5 * eye
        n_j = car.number_operator(j, lattice_size).matrix - 0.5 * eye
        return Region((i, j), lattice_size), coefficient * (n_i @ n_j)
    raise ValueError(f"unknown term name: {name!r}")


def potential_from_records(records: list[dict], lattice_size: int) -> Potential:
    """Build a potential from named-term records.

    Each record is ``{"sites": [...], "coefficient": c, "term": name}`` with
    term names ``hop`` (symmetrized hopping), ``num`` (centered number
    operator), ``num_raw`` (plain number operator; deliberately non-standard),
    and ``nn`` (centered density-density coupling).  Records on the same
    region accumulate.
    """
    terms: dict[Region, np.ndarray] = {}
    kept_records = []
    for rec in records:
        region, mat = _build_term(rec["term"], list(rec["sites"]),
                                  float(rec["coefficient"]), lattice_size)
        if region in terms:
            terms[region] = terms[region] + mat
        else:
            terms[region] = mat
        kept_records.append({"sites": list(region.sites),
                             "coefficient": float(rec["coefficient"]),
                             "term": str(rec["term"])})
    terms = {r: terms[r] for r in sorted(terms.keys(), key=_region_sort_key)}
    return Potential(lattice_size=lattice_size, terms=terms, records=kept_records)


def potential_records(potential: Potential) -> list[dict]:
    """Named-term records of a potential built from them (round-trips)."""
    if potential.records is None:
        raise ValueError(
            "potential was not built from named-term records; only record-built "
            "potentials serialize to text"
        )
    return [dict(rec) for rec in potential.records]


def hopping_model(lattice_size: int, t: float = 1.0, mu: float = 0.5) -> Potential:
    """Nearest-neighbour hopping with a chemical potential, in standard form."""
    records = [{"sites": [i, i + 1], "coefficient": -t, "term": "hop"}
               for i in range(lattice_size - 1)]
    records += [{"sites": [i], "coefficient": -mu, "term": "num"}
                for i in range(lattice_size)]
    return potential_from_records(records, lattice_size)


def tv_model(lattice_size: int, t: float = 1.0, mu: float = 0.5,
             v: float = 0.8) -> Potential:
    """Hopping plus a centered nearest-neighbour density-density coupling."""
    records = [{"sites": [i, i + 1], "coefficient": -t, "term": "hop"}
               for i in range(lattice_size - 1)]
    records += [{"sites": [i], "coefficient": -mu, "term": "num"}
                for i in range(lattice_size)]
    records += [{"sites": [i, i + 1], "coefficient": v, "term": "nn"}
                for i in range(lattice_size - 1)]
    return potential_from_records(records, lattice_size)


def raw_number_model(lattice_size: int, mu: float = 0.5) -> Potential:
    """Chemical potential written with plain number operators.

    Each term has a nonzero trace, so the potential is *not* standard; it
    exists to exercise the validation path.
    """
    records = [{"sites": [i], "coefficient": -mu, "term": "num_raw"}
               for i in range(lattice_size)]
    return potential_from_records(records, lattice_size)


MODELS = {
    "hopping": hopping_model,
    "tv": tv_model,
    "raw-number": raw_number_model,
}


def build_model(name: str, lattice_size: int, **params) -> Potential:
    try:
        builder = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; known: {sorted(MODELS)}") from None
    return builder(lattice_size, **params)


def random_standard_potential(lattice_size: int, rng: np.random.Generator,
                              scale: float = 1.0) -> Potential:
    """Random even potential in standard form, for panels and stress tests.

    Draws a random even self-adjoint raw term on every site, every adjacent
    pair, and one non-adjacent pair, normalizes each to unit operator norm,
    and standardizes the family.
    """
    raw: dict[Region, AlgebraElement] = {}
    regions = [Region((i,), lattice_size) for i in range(lattice_size)]
    regions += [Region((i, i + 1), lattice_size) for i in range(lattice_size - 1)]
    if lattice_size >= 3:
        i = int(rng.integers(0, lattice_size - 2))
        j = int(rng.integers(i + 2, lattice_size))
        regions.append(Region((i, j), lattice_size))
    for region in regions:
        elem = car.random_element(region, rng, parity=0, hermitian=True,
                                  include_identity=True)
        nrm = elem.norm()
        if nrm < 1e-12:
            continue
        raw[region] = (scale / nrm) * elem
    return standardize(raw)
