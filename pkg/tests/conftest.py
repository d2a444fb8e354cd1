import numpy as np
import pytest

from partialclust import Instance, MetricSpace


@pytest.fixture
def square_space():
    """Unit square corners plus one far point; distances easy to eyeball."""
    pts = np.array([
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [1.0, 1.0],
        [50.0, 0.0],
    ])
    return MetricSpace.euclidean(pts)


@pytest.fixture
def square_instance(square_space):
    return Instance.from_points(square_space)


@pytest.fixture
def line_space():
    """Collinear points 0, 1, 2, 100: a two-cluster instance with one outlier."""
    pts = np.array([[0.0], [1.0], [2.0], [100.0]])
    return MetricSpace.euclidean(pts)
