import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermichain import car
from fermichain.potentials import (hopping_model, prune, total_hamiltonian,
                                   tv_model)
from fermichain.regions import Region
from fermichain.states import (DensityState, gibbs_state, kms_residual,
                               max_perturbation_strength,
                               noneven_perturbation, odd_direction,
                               perturbed_state, product_check,
                               random_pair_panel, remark2_construct, restrict,
                               snapshot, tracial_state)


def random_density(lattice, rng):
    n = car.dim(lattice)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    d = g @ g.conj().T
    return DensityState(d / np.trace(d).real, label="random")


# ---------------------------------------------------------------------------
# densities and Gibbs states
# ---------------------------------------------------------------------------


def test_density_validation_rejects_bad_inputs():
    n = car.dim(2)
    with pytest.raises(ValueError):
        DensityState(np.eye(n))                       # trace is 4, not 1
    with pytest.raises(ValueError):
        DensityState(1j * np.eye(n) / n)              # not self-adjoint
    spectrum = np.diag([1.5, -0.5, 0.0, 0.0])
    with pytest.raises(ValueError):
        DensityState(spectrum)                        # negative eigenvalue


def test_single_site_gibbs_closed_form():
    beta, mu = 1.7, 0.9
    pot = hopping_model(1, t=0.0, mu=mu)
    got = gibbs_state(total_hamiltonian(pot), beta).density
    # occupation basis: index 0 empty, index 1 occupied; H = -mu n
    z = 1.0 + math.exp(beta * mu)
    want = np.diag([1.0 / z, math.exp(beta * mu) / z])
    assert np.max(np.abs(got - want)) < 1e-14


def test_gibbs_limits_and_invariance():
    pot = tv_model(4)
    h = total_hamiltonian(pot)
    assert np.max(np.abs(gibbs_state(h, 0.0).density
                         - tracial_state(4).density)) < 1e-14
    g = gibbs_state(h, 1.3)
    assert np.max(np.abs(g.density @ h.matrix - h.matrix @ g.density)) < 1e-13
    assert g.is_even()
    with pytest.raises(ValueError):
        gibbs_state(h, math.inf)
    skew = car.annihilator(0, 4).matrix
    with pytest.raises(ValueError):
        gibbs_state(skew, 1.0)


def test_kms_condition_separates_gibbs_from_tracial():
    lattice, beta = 4, 1.1
    h = total_hamiltonian(hopping_model(lattice))
    pairs = random_pair_panel(lattice, 40, np.random.default_rng(0))
    assert kms_residual(gibbs_state(h, beta), h, beta, pairs) < 1e-10
    # the tracial state satisfies the condition only at beta = 0
    tau = tracial_state(lattice)
    assert kms_residual(tau, h, 0.0, pairs) < 1e-12
    assert kms_residual(tau, h, beta, pairs) > 1e-3


# ---------------------------------------------------------------------------
# restrictions
# ---------------------------------------------------------------------------


def test_restriction_values_match_dense_traces():
    lattice = 4
    region = Region.of([1, 3], lattice)
    omega = random_density(lattice, np.random.default_rng(1))
    rest = restrict(omega, region)
    basis = car.monomial_basis(region)
    for k in range(len(basis)):
        want = np.trace(omega.density @ basis[k].dense())
        assert abs(rest.values[k] - want) < 1e-12


def test_restriction_evaluate_and_errors():
    lattice = 3
    region = Region.of([0, 1], lattice)
    omega = random_density(lattice, np.random.default_rng(2))
    rest = restrict(omega, region)
    num = car.number_operator(0, lattice)
    assert abs(rest.evaluate(num) - omega.expectation(num.matrix)) < 1e-12
    with pytest.raises(ValueError):
        rest.evaluate(car.number_operator(2, lattice))
    other = restrict(omega, Region.of([0], lattice))
    with pytest.raises(ValueError):
        rest.max_difference(other)


def test_product_extension_factorizes_through_tau():
    lattice = 4
    region = Region.of([0, 1], lattice)
    omega = random_density(lattice, np.random.default_rng(3))
    ext = restrict(omega, region).product_extension()
    # reproduces the restriction ...
    assert restrict(ext, region).max_difference(restrict(omega, region)) < 1e-12
    # ... and factorizes against the complement
    assert product_check(ext, region.complement()) < 1e-12


def test_small_density_represents_the_restriction():
    lattice = 4
    region = Region.of([1, 2], lattice)
    omega = random_density(lattice, np.random.default_rng(4))
    small = restrict(omega, region).small_density()
    m = car.dim(len(region))
    assert small.shape == (m, m)
    evals = np.linalg.eigvalsh(small)
    assert evals.min() > -1e-12 and abs(np.trace(small).real - 1.0) < 1e-12
    # expectation of a region element through the small copy
    num = car.number_operator(1, lattice)
    small_num = car.small_representation(num.matrix, region)
    assert abs(np.trace(small @ small_num)
               - omega.expectation(num.matrix)) < 1e-12


# ---------------------------------------------------------------------------
# decoupled equilibrium states
# ---------------------------------------------------------------------------


def test_perturbed_state_has_exact_product_property():
    lattice, beta = 5, 1.0
    pot = hopping_model(lattice)
    region = Region.of([2], lattice)
    phi = perturbed_state(pot, beta, region)
    assert product_check(phi, region) < 1e-13
    assert phi.is_even()
    # the density lies in the complement algebra
    comp = region.complement()
    assert np.max(np.abs(car.conditional_expectation_matrix(phi.density, comp)
                         - phi.density)) < 1e-13


def test_perturbed_state_is_gibbs_of_pruned_potential():
    lattice, beta = 4, 0.7
    pot = tv_model(lattice)
    region = Region.of([1], lattice)
    phi = perturbed_state(pot, beta, region)
    direct = gibbs_state(total_hamiltonian(prune(pot, region)), beta)
    assert np.max(np.abs(phi.density - direct.density)) < 1e-14


# ---------------------------------------------------------------------------
# noneven perturbations
# ---------------------------------------------------------------------------


def test_odd_direction_properties():
    lattice = 4
    region = Region.of([1, 2], lattice)
    x = odd_direction(region)
    assert x.is_self_adjoint()
    assert np.max(np.abs(car.theta(x).matrix + x.matrix)) == 0.0
    assert abs(x.norm() - 1.0) < 1e-12
    # invisible to the complement algebra
    comp = region.complement()
    assert np.max(np.abs(car.conditional_expectation_matrix(x.matrix,
                                                            comp))) == 0.0
    with pytest.raises(ValueError):
        odd_direction(Region.empty(lattice))


def test_max_perturbation_strength_guarantees_positivity():
    lattice = 3
    omega = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    x = odd_direction(Region.of([0], lattice))
    lam = max_perturbation_strength(omega, x)
    assert lam > 0.0
    # the spectral bound keeps half of the smallest eigenvalue in reserve
    onto = omega.density + lam * x.matrix
    assert np.linalg.eigvalsh(onto).min() >= 0.5 * omega.lambda_min() - 1e-13
    # strengths past the bound are refused rather than risked
    region = Region.of([0], lattice)
    with pytest.raises(ValueError):
        noneven_perturbation(omega, region, strength=2.0 * lam)
    with pytest.raises(ValueError):
        noneven_perturbation(omega, region, strength=0.0)
    zero = car.AlgebraElement(np.zeros_like(omega.density), region)
    with pytest.raises(ValueError):
        max_perturbation_strength(omega, zero)


def test_noneven_perturbation_is_invisible_outside():
    lattice, beta = 5, 1.0
    pot = hopping_model(lattice)
    region = Region.of([2, 3], lattice)
    phi = perturbed_state(pot, beta, region)
    psi = noneven_perturbation(phi, region)
    comp = region.complement()
    # exactly the same restriction outside ...
    assert restrict(psi, comp).max_difference(restrict(phi, comp)) == 0.0
    # ... yet genuinely different and noneven
    assert np.max(np.abs(psi.density - phi.density)) > 1e-4
    assert psi.evenness_defect() > 1e-4
    # the even average recovers the original state exactly
    averaged = 0.5 * (psi.density + psi.theta().density)
    assert np.max(np.abs(averaged - phi.density)) < 1e-15


def test_noneven_perturbation_validates_direction():
    lattice = 4
    pot = hopping_model(lattice)
    region = Region.of([1], lattice)
    phi = perturbed_state(pot, 1.0, region)
    even_dir = car.AlgebraElement(car.number_operator(1, lattice).matrix,
                                  region)
    with pytest.raises(ValueError):
        noneven_perturbation(phi, region, direction=even_dir)
    not_sa = car.annihilator(1, lattice)
    with pytest.raises(ValueError):
        noneven_perturbation(phi, region, direction=not_sa)


# ---------------------------------------------------------------------------
# the single-site vector state
# ---------------------------------------------------------------------------


def test_remark2_vector_state():
    lattice = 4
    outer = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    state = remark2_construct(outer)
    site0 = Region.of([0], lattice)
    u = odd_direction(site0)
    # maximally noneven at site 0: expectation 1 on the odd unitary
    assert abs(state.expectation(u.matrix) - 1.0) < 1e-12
    # restriction outside site 0 is the even average of the input
    comp = site0.complement()
    target = 0.5 * (outer.density + outer.theta().density)
    expected = car.monomial_basis(comp).expectations(target)
    got = restrict(state, comp).values
    assert np.max(np.abs(expected - got)) < 1e-10


def test_remark2_rejects_bad_unitaries():
    lattice = 3
    outer = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    site0 = Region.of([0], lattice)
    with pytest.raises(ValueError):
        remark2_construct(outer, u=car.annihilator(0, lattice))  # not s.a.
    with pytest.raises(ValueError):
        remark2_construct(outer, u=car.AlgebraElement(
            car.number_operator(0, lattice).matrix, site0))      # even
    odd_not_unitary = 0.5 * odd_direction(site0)
    with pytest.raises(ValueError):
        remark2_construct(outer, u=odd_not_unitary)


def test_snapshot_is_json_ready():
    import json

    lattice = 3
    omega = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    shot = snapshot(omega, [Region.of([0], lattice), Region.of([1, 2], lattice)])
    text = json.dumps(shot)
    assert "eigenvalues" in text and "restrictions" in text


# ---------------------------------------------------------------------------
# state expectations, gradings
# ---------------------------------------------------------------------------


@given(st.integers(min_value=0, max_value=10_000))
def test_theta_of_state_is_an_involution(seed):
    omega = random_density(3, np.random.default_rng(seed))
    twice = omega.theta().theta()
    assert np.max(np.abs(twice.density - omega.density)) == 0.0


def test_expectation_matches_trace():
    lattice = 3
    omega = random_density(lattice, np.random.default_rng(7))
    x = car.random_element(Region.full(lattice), np.random.default_rng(8))
    want = np.trace(omega.density @ x.matrix)
    assert abs(omega.expectation(x.matrix) - want) < 1e-13
