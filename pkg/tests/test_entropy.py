import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermichain import car
from fermichain.entropy import (conditional_entropy, conditional_free_energy,
                                relative_entropy, relative_entropy_matrices,
                                restricted_relative_entropy)
from fermichain.potentials import (hopping_model, local_hamiltonian,
                                   total_hamiltonian)
from fermichain.regions import Region
from fermichain.states import (DensityState, gibbs_state, perturbed_state,
                               restrict, tracial_state)


def random_density_matrix(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    d = g @ g.conj().T
    return d / np.trace(d).real


def random_state(lattice, rng):
    return DensityState(random_density_matrix(car.dim(lattice), rng))


# ---------------------------------------------------------------------------
# relative entropy
# ---------------------------------------------------------------------------


def test_relative_entropy_vanishes_on_the_diagonal():
    omega = random_state(3, np.random.default_rng(0))
    result = relative_entropy(omega, omega)
    assert result.kernel_ok
    assert 0.0 <= result.value < 1e-13


def test_relative_entropy_pure_vs_tracial_oracle():
    lattice = 3
    n = car.dim(lattice)
    pure = np.zeros((n, n), dtype=complex)
    pure[0, 0] = 1.0
    # reference = normalized trace: S(tau, pure) = log(dim) = L log 2
    result = relative_entropy(tracial_state(lattice), DensityState(pure))
    assert result.finite
    assert abs(result.value - lattice * math.log(2)) < 1e-12


def test_relative_entropy_detects_kernel_violation():
    n = 4
    pure = np.zeros((n, n), dtype=complex)
    pure[0, 0] = 1.0
    mixed = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    result = relative_entropy_matrices(pure, mixed)
    assert not result.kernel_ok
    assert not result.finite
    assert result.value == math.inf
    # the opposite ordering is fine: the mixed reference dominates everything
    assert relative_entropy_matrices(mixed, pure).finite


@given(st.integers(min_value=0, max_value=10_000))
def test_relative_entropy_is_nonnegative(seed):
    rng = np.random.default_rng(seed)
    a = random_density_matrix(8, rng)
    b = random_density_matrix(8, rng)
    result = relative_entropy_matrices(a, b)
    assert result.kernel_ok
    assert result.value >= 0.0


def test_relative_entropy_is_unitarily_invariant():
    rng = np.random.default_rng(5)
    a = random_density_matrix(8, rng)
    b = random_density_matrix(8, rng)
    u = np.linalg.qr(rng.standard_normal((8, 8))
                     + 1j * rng.standard_normal((8, 8)))[0]
    plain = relative_entropy_matrices(a, b).value
    rotated = relative_entropy_matrices(u @ a @ u.conj().T,
                                        u @ b @ u.conj().T).value
    assert abs(plain - rotated) < 1e-11


def test_relative_entropy_adds_over_independent_sites():
    rng = np.random.default_rng(6)
    a1, a2 = (random_density_matrix(2, rng) for _ in range(2))
    b1, b2 = (random_density_matrix(2, rng) for _ in range(2))
    # occupation-basis convention: site 0 is the least significant factor
    joint = relative_entropy_matrices(np.kron(b1, a1), np.kron(b2, a2)).value
    split = (relative_entropy_matrices(a1, a2).value
             + relative_entropy_matrices(b1, b2).value)
    assert abs(joint - split) < 1e-11


# ---------------------------------------------------------------------------
# restriction monotonicity
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(6))
def test_restriction_never_increases_relative_entropy(seed):
    lattice = 4
    rng = np.random.default_rng(200 + seed)
    omega1 = random_state(lattice, rng)
    omega2 = random_state(lattice, rng)
    full = relative_entropy(omega1, omega2).value
    for region in (Region.of([0], lattice), Region.of([1, 2], lattice),
                   Region.of([0, 3], lattice)):
        part = restricted_relative_entropy(omega1, omega2, region).value
        assert part <= full + 1e-10


def test_restriction_to_the_full_chain_changes_nothing():
    lattice = 3
    rng = np.random.default_rng(7)
    omega1 = random_state(lattice, rng)
    omega2 = random_state(lattice, rng)
    full = relative_entropy(omega1, omega2).value
    again = restricted_relative_entropy(omega1, omega2,
                                        Region.full(lattice)).value
    assert abs(full - again) < 1e-10


# ---------------------------------------------------------------------------
# conditional entropy
# ---------------------------------------------------------------------------


def test_conditional_entropy_is_never_positive():
    lattice = 4
    region = Region.of([1, 2], lattice)
    for seed in range(8):
        omega = random_state(lattice, np.random.default_rng(300 + seed))
        assert conditional_entropy(omega, region) <= 1e-12


def test_conditional_entropy_vanishes_on_decoupled_states():
    lattice = 5
    region = Region.of([2], lattice)
    phi = perturbed_state(hopping_model(lattice), 1.0, region)
    assert abs(conditional_entropy(phi, region)) < 1e-12


def test_conditional_entropy_of_a_product_vector_state():
    lattice = 2
    n = car.dim(lattice)
    vacuum = np.zeros((n, n), dtype=complex)
    vacuum[0, 0] = 1.0
    omega = DensityState(vacuum, label="vacuum")
    # the vacuum is pure on site 0, so decoupling it costs exactly log 2
    got = conditional_entropy(omega, Region.of([0], lattice))
    assert abs(got + math.log(2)) < 1e-12


def test_conditional_free_energy_matches_its_parts():
    lattice, beta = 4, 1.3
    region = Region.of([1, 2], lattice)
    pot = hopping_model(lattice)
    omega = gibbs_state(total_hamiltonian(pot), beta)
    h_i = local_hamiltonian(pot, region).matrix
    want = (conditional_entropy(omega, region)
            - beta * float(np.real(omega.expectation(h_i))))
    assert abs(conditional_free_energy(omega, pot, region, beta) - want) == 0.0


def test_conditional_free_energy_favors_the_gibbs_state():
    # among a handful of candidate states the Gibbs state has the largest F
    lattice, beta = 4, 1.0
    region = Region.of([1, 2], lattice)
    pot = hopping_model(lattice)
    best = conditional_free_energy(gibbs_state(total_hamiltonian(pot), beta),
                                   pot, region, beta)
    for seed in range(5):
        omega = random_state(lattice, np.random.default_rng(400 + seed))
        assert conditional_free_energy(omega, pot, region, beta) <= best + 1e-10
