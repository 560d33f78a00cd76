import numpy as np
from hypothesis import HealthCheck, settings

# matrix work dominates the runtime of a single example, so per-example
# deadlines only produce noise; keep example counts modest instead
settings.register_profile(
    "fermichain",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fermichain")


def kron_chain(factors):
    """Independent construction of chain operators: plain Kronecker products,
    site 0 as the least significant tensor slot (rightmost factor)."""
    out = np.array([[1.0]])
    for factor in factors:
        out = np.kron(out, factor)
    return out


LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])   # |0><1| on one site
PARITY = np.diag([-1.0, 1.0])                # -1 on empty, +1 on occupied
EYE2 = np.eye(2)


def oracle_annihilator(site: int, lattice_size: int) -> np.ndarray:
    """Reference annihilator built without the package's operator layer."""
    return kron_chain([EYE2] * (lattice_size - 1 - site) + [LOWER]
                      + [PARITY] * site)
