import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermichain import car
from fermichain.potentials import (MODELS, Potential, build_model,
                                   derivation_apply, hopping_model,
                                   local_hamiltonian, potential_from_records,
                                   potential_records, prune,
                                   random_standard_potential,
                                   raw_number_model, standardize,
                                   total_hamiltonian, tv_model,
                                   validate_potential)
from fermichain.regions import Region

from conftest import oracle_annihilator


def test_hopping_hamiltonian_matches_kron_oracle():
    lattice, t, mu = 4, 1.3, 0.7
    pot = hopping_model(lattice, t=t, mu=mu)
    ann = [oracle_annihilator(i, lattice) for i in range(lattice)]
    want = np.zeros((2 ** lattice,) * 2, dtype=complex)
    for i in range(lattice - 1):
        want += -t * (ann[i].conj().T @ ann[i + 1]
                      + ann[i + 1].conj().T @ ann[i])
    for i in range(lattice):
        want += -mu * (ann[i].conj().T @ ann[i])
    # standardization only moves scalar weight; totals agree up to a
    # multiple of the identity
    got = total_hamiltonian(pot).matrix
    diff = got - want
    shift = np.trace(diff) / diff.shape[0]
    assert np.max(np.abs(diff - shift * np.eye(diff.shape[0]))) < 1e-12


def test_preset_models_are_standard():
    for name in MODELS:
        if name == "raw-number":
            continue
        report = validate_potential(build_model(name, 5))
        assert report.passed, report.residuals


def test_raw_number_model_fails_standardness_by_half_tau():
    # the deliberately non-standard term is -mu n_i; the scalar its
    # conditional expectation leaves behind is mu * tau(n) = mu / 2
    mu = 0.5
    report = validate_potential(raw_number_model(5, mu=mu))
    assert not report.passed
    assert abs(report.residuals["standard"] - mu / 2) < 1e-15


def test_standardize_repairs_raw_model_and_shifts_by_scalar():
    lattice = 4
    raw = raw_number_model(lattice, mu=0.8)
    fixed = standardize(raw.terms)
    assert validate_potential(fixed).passed
    diff = (total_hamiltonian(raw).matrix
            - total_hamiltonian(fixed).matrix)
    shift = np.trace(diff) / diff.shape[0]
    assert np.max(np.abs(diff - shift * np.eye(diff.shape[0]))) < 1e-12


def test_standardize_telescopes_back_to_centered_term():
    # summed over all subregions, the standardized pieces of one raw term
    # rebuild the term minus its scalar part
    lattice = 4
    region = Region.of([1, 2], lattice)
    rng = np.random.default_rng(2)
    term = car.random_element(region, rng, parity=0, hermitian=True)
    pot = standardize({region: term})
    rebuilt = np.zeros((2 ** lattice,) * 2, dtype=complex)
    for piece in pot.terms.values():
        rebuilt = rebuilt + piece
    centered = term.matrix - term.tau() * np.eye(2 ** lattice)
    assert np.max(np.abs(rebuilt - centered)) < 1e-12


def test_standardize_rejects_bad_raw_terms():
    lattice = 3
    region = Region.of([0], lattice)
    odd = car.random_element(region, np.random.default_rng(4), parity=1,
                             hermitian=True)
    with pytest.raises(ValueError):
        standardize({region: odd})
    skew = car.annihilator(0, lattice)
    with pytest.raises(ValueError):
        standardize({region: skew})
    leaking = car.AlgebraElement(car.number_operator(1, lattice).matrix,
                                 region)
    with pytest.raises(ValueError):
        standardize({region: leaking})


@given(st.integers(min_value=0, max_value=10_000))
def test_random_standard_potentials_validate(seed):
    pot = random_standard_potential(4, np.random.default_rng(seed))
    assert validate_potential(pot).passed


def test_local_hamiltonian_collects_meeting_terms():
    lattice = 5
    pot = hopping_model(lattice)
    region = Region.of([2], lattice)
    manual = np.zeros((2 ** lattice,) * 2, dtype=complex)
    for support, term in pot.terms.items():
        if support.intersects(region):
            manual = manual + term
    got = local_hamiltonian(pot, region)
    assert np.max(np.abs(got.matrix - manual)) == 0.0
    # support of H(I) is the union of the meeting supports
    assert got.region == region
    assert got.element.support.sites == (1, 2, 3)
    assert car.support_residual(got.element) < 1e-12


def test_total_is_local_of_full_chain():
    pot = tv_model(4)
    total = total_hamiltonian(pot)
    local = local_hamiltonian(pot, Region.full(4))
    assert np.max(np.abs(total.matrix - local.matrix)) == 0.0


def test_prune_removes_exactly_the_meeting_terms():
    lattice = 5
    pot = hopping_model(lattice)
    region = Region.of([2], lattice)
    pruned = prune(pot, region)
    assert all(r.is_orthogonal(region) for r in pruned.terms)
    kept = set(pruned.terms)
    dropped = set(pot.terms) - kept
    assert all(r.intersects(region) for r in dropped)
    # the pruned total commutes with everything in the region's algebra
    h = total_hamiltonian(pruned).matrix
    basis = car.monomial_basis(region)
    for k in range(len(basis)):
        mono = basis[k].dense()
        assert np.max(np.abs(h @ mono - mono @ h)) < 1e-12


def test_derivation_is_local_and_compatible_with_adjoints():
    lattice = 5
    pot = hopping_model(lattice)
    rng = np.random.default_rng(6)
    a = car.random_element(Region.of([1, 2], lattice), rng)
    da = derivation_apply(pot, a)
    # the full commutator agrees: distant terms cannot contribute
    h = total_hamiltonian(pot).matrix
    full = 1j * (h @ a.matrix - a.matrix @ h)
    assert np.max(np.abs(da.matrix - full)) < 1e-12
    # the generator is *-compatible: d(a)* = d(a*)
    dad = derivation_apply(pot, a.dagger())
    assert np.max(np.abs(da.matrix.conj().T - dad.matrix)) < 1e-12


def test_record_round_trip_and_rejections():
    pot = hopping_model(4, t=0.9, mu=0.3)
    records = potential_records(pot)
    back = potential_from_records(records, 4)
    assert set(back.terms) == set(pot.terms)
    for region in pot.terms:
        assert np.max(np.abs(back.terms[region] - pot.terms[region])) == 0.0
    with pytest.raises(ValueError):
        potential_from_records([{"sites": [0], "coefficient": 1.0,
                                 "term": "frobnicate"}], 4)
    # potentials not built from records cannot claim a record form
    rng = np.random.default_rng(8)
    anon = random_standard_potential(4, rng)
    with pytest.raises(ValueError):
        potential_records(anon)


def test_build_model_rejects_unknown_names():
    with pytest.raises(ValueError):
        build_model("heisenberg", 4)


def test_potential_terms_are_validated():
    lattice = 3
    bad_region = Region.of([0], lattice)
    with pytest.raises(ValueError):
        Potential(lattice_size=4, terms={bad_region: np.eye(8)})
