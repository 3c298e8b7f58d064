import numpy as np
import pytest
from hypothesis import strategies as st

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
vectors = st.tuples(finite, finite, finite).map(np.array)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def diag123():
    from herglotz.models import SystemSpec
    return SystemSpec([1.0, 2.0, 3.0], gamma=0.1)
