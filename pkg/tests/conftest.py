import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def flow_matrix(draw, max_side=5):
    """Non-negative matrix with some structural zeros."""
    r = draw(st.integers(1, max_side))
    c = draw(st.integers(1, max_side))
    vals = draw(arrays(np.float64, (r, c), elements=st.floats(0.5, 100.0)))
    mask = draw(arrays(np.bool_, (r, c)))
    return np.where(mask, vals, 0.0)


@pytest.fixture
def tiny_flows():
    # A(1) -> C(2), A -> D(3) spans two levels, B(1) -> C, C -> D
    flows = [("A", "C", 3.0), ("A", "D", 2.0), ("B", "C", 1.0), ("C", "D", 4.0)]
    level_of = {"A": 1, "B": 1, "C": 2, "D": 3}
    return flows, level_of
