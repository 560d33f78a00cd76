import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermichain import car
from fermichain.potentials import hopping_model, total_hamiltonian
from fermichain.probes import (ProbeResult, cluster_coefficient,
                               grading_asymmetry, purely_imaginary_check,
                               scan_odd_correlations)
from fermichain.regions import Region
from fermichain.states import (DensityState, gibbs_state,
                               noneven_perturbation, odd_direction,
                               perturbed_state, remark2_construct, restrict)


def random_even_state(lattice, rng):
    n = car.dim(lattice)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    d = g @ g.conj().T
    d /= np.trace(d).real
    sym = 0.5 * (d + car.theta_matrix(d, lattice))
    return DensityState(sym, label="even-random")


def odd_hermitian(region, rng):
    # parity bit 1 selects the odd monomials
    x = car.random_element(region, rng, parity=1, hermitian=True)
    nrm = x.norm()
    assert nrm > 1e-6, "odd draw must be nontrivial"
    return (1.0 / nrm) * x


# ---------------------------------------------------------------------------
# grading asymmetry
# ---------------------------------------------------------------------------


def test_even_states_have_no_grading_asymmetry():
    lattice = 4
    region = Region.of([1, 2], lattice)
    for seed in range(5):
        omega = random_even_state(lattice, np.random.default_rng(seed))
        assert grading_asymmetry(omega, region).quantity < 1e-12
    gibbs = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    assert grading_asymmetry(gibbs, region).quantity < 1e-12


def test_asymmetry_witness_is_odd_selfadjoint_and_attaining():
    lattice = 5
    region = Region.of([2], lattice)
    phi = perturbed_state(hopping_model(lattice), 1.0, region)
    psi = noneven_perturbation(phi, region)
    result = grading_asymmetry(psi, region)
    assert result.quantity > 1e-4
    w = result.witness
    assert w is not None
    assert w.support.is_subregion(region)
    assert w.is_self_adjoint()
    assert np.max(np.abs(car.theta(w).matrix + w.matrix)) < 1e-12
    assert w.norm() <= 1.0 + 1e-12
    # the witness actually realizes the supremum
    assert abs(abs(psi.expectation(w.matrix)) - result.quantity) < 1e-10


def test_remark2_state_is_maximally_asymmetric_at_site_zero():
    lattice = 4
    outer = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    state = remark2_construct(outer)
    result = grading_asymmetry(state, Region.of([0], lattice))
    assert abs(result.quantity - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------


def test_cluster_coefficient_vanishes_for_product_states():
    lattice = 6
    rng = np.random.default_rng(10)
    n = car.dim(lattice)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    d = g @ g.conj().T
    d /= np.trace(d).real
    inside = Region.of([0, 1], lattice)
    ext = restrict(DensityState(d), inside).product_extension()
    obs = car.AlgebraElement(car.number_operator(0, lattice).matrix, inside)
    result = cluster_coefficient(ext, obs, Region.of([4, 5], lattice))
    assert result.quantity < 1e-12


def test_cluster_coefficient_decays_for_local_gibbs_states():
    lattice = 6
    gibbs = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    n0 = car.number_operator(0, lattice)
    centered = car.AlgebraElement(
        n0.matrix - n0.tau() * np.eye(car.dim(lattice)), Region.of([0], lattice))
    near = cluster_coefficient(gibbs, centered, Region.of([1], lattice)).quantity
    mid = cluster_coefficient(gibbs, centered, Region.of([3], lattice)).quantity
    far = cluster_coefficient(gibbs, centered, Region.of([5], lattice)).quantity
    assert near > mid > far >= 0.0
    assert far < 1e-3 * near


def test_cluster_coefficient_requires_disjoint_supports():
    lattice = 4
    gibbs = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    obs = car.AlgebraElement(car.number_operator(1, lattice).matrix,
                             Region.of([1], lattice))
    with pytest.raises(ValueError):
        cluster_coefficient(gibbs, obs, Region.of([1, 2], lattice))


# ---------------------------------------------------------------------------
# purely imaginary odd correlations
# ---------------------------------------------------------------------------


@given(st.integers(min_value=0, max_value=10_000))
def test_odd_correlations_have_no_real_part(seed):
    lattice = 4
    rng = np.random.default_rng(seed)
    omega = random_even_state(lattice, rng)
    a = odd_hermitian(Region.of([0, 1], lattice), rng)
    b = odd_hermitian(Region.of([2, 3], lattice), rng)
    assert purely_imaginary_check(omega, a, b) < 1e-12


def test_the_imaginary_part_is_genuinely_nonzero():
    # the vanishing real part is not for lack of correlation: for the hopping
    # chain the cross term of the two odd quadratures is visibly imaginary
    lattice = 5
    gibbs = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    a = odd_direction(Region.of([0], lattice))
    ann = car.annihilator(1, lattice)
    b = car.AlgebraElement(1j * (ann.matrix - ann.matrix.conj().T),
                           Region.of([1], lattice))
    assert purely_imaginary_check(gibbs, a, b) < 1e-13
    corr = gibbs.expectation(a.matrix @ b.matrix)
    assert abs(corr.imag) > 0.4


def test_purely_imaginary_check_validates_inputs():
    lattice = 4
    gibbs = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    a = odd_direction(Region.of([0], lattice))
    with pytest.raises(ValueError):        # overlapping supports
        purely_imaginary_check(gibbs, a, odd_direction(Region.of([0, 1], lattice)))
    with pytest.raises(ValueError):        # not self-adjoint
        purely_imaginary_check(gibbs, a, car.annihilator(2, lattice))
    even = car.AlgebraElement(car.number_operator(2, lattice).matrix,
                              Region.of([2], lattice))
    with pytest.raises(ValueError):        # not odd
        purely_imaginary_check(gibbs, a, even)


# ---------------------------------------------------------------------------
# the correlation scan
# ---------------------------------------------------------------------------


def test_scan_reports_zero_violations_for_honest_panels():
    lattice = 4
    rng = np.random.default_rng(42)
    cases = []
    for _ in range(40):
        omega = random_even_state(lattice, rng)
        a = odd_hermitian(Region.of([0], lattice), rng)
        b = odd_hermitian(Region.of([2, 3], lattice), rng)
        cases.append((omega, a, b))
    report = scan_odd_correlations(cases)
    assert report["cases"] == 40
    assert report["violations"] == 0
    assert report["worst_real_part"] < 1e-13
    assert report["worst_cauchy_schwarz_excess"] <= 1e-12


def test_scan_counts_fabricated_violations():
    # a fake functional that reports a real correlation of 1 while keeping a
    # tight Cauchy-Schwarz envelope must be flagged
    class BrokenFunctional:
        def expectation(self, matrix):
            return 1.0

    lattice = 3
    a = odd_direction(Region.of([0], lattice))
    b = odd_direction(Region.of([2], lattice))
    report = scan_odd_correlations([(BrokenFunctional(), a, b)])
    assert report["violations"] == 1
    assert report["worst_real_part"] == 1.0


def test_probe_result_carries_its_region():
    lattice = 4
    region = Region.of([3], lattice)
    gibbs = gibbs_state(total_hamiltonian(hopping_model(lattice)), 1.0)
    obs = car.AlgebraElement(car.number_operator(0, lattice).matrix,
                             Region.of([0], lattice))
    result = cluster_coefficient(gibbs, obs, region)
    assert isinstance(result, ProbeResult)
    assert result.region == region
    assert result.witness is None
