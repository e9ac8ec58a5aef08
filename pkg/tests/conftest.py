import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Numerical property tests can stall on first-call JIT compilation; wall-clock
# deadlines are meaningless for them.
settings.register_profile(
    "bbdyn",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("bbdyn")


def random_spectrum(rng, n, kappa):
    """Ascending eigenvalues spanning [1, kappa] with log-uniform interior."""
    if n == 1:
        return np.array([1.0])
    interior = np.sort(np.exp(rng.uniform(0.0, np.log(kappa), n - 2))) if n > 2 else np.array([])
    return np.sort(np.concatenate(([1.0], interior, [kappa])))


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture
def rng():
    return philox(1234)
