import numpy as np
import pytest

from usdeid import synth


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus():
    """Ten rendered phantoms with ground truth, reused by pipeline tests."""
    specs = synth.make_phantom_specs(seed=3, per_kind=4, frames=8)[:10]
    return [(spec, *synth.render(spec)) for spec in specs]
