import numpy as np
import pytest

from yann.bigm import compute_big_m_exact
from yann.pwa import Halfspace, PwaFunction, Region
from yann.synth import max_affine_from_pieces


@pytest.fixture
def abs_pwa() -> PwaFunction:
    """|x| on [-1, 1]: piece -x on [-1, 0] then piece x on [0, 1]."""
    return max_affine_from_pieces([[-1.0], [1.0]], [0.0, 0.0], (-1.0, 1.0))


@pytest.fixture
def abs_bound(abs_pwa):
    return compute_big_m_exact(abs_pwa)


@pytest.fixture
def unit_interval_region() -> Region:
    """{x <= 1, -x <= 0} with the identity map, the 1-D slab example."""
    return Region([Halfspace([1.0], 1.0), Halfspace([-1.0], 0.0)],
                  [[1.0]], [0.0])


@pytest.fixture
def one_piece_pwa() -> PwaFunction:
    """u = 3x + 1 on [0, 2]."""
    return PwaFunction(1, 1, [Region(
        [Halfspace([1.0], 2.0), Halfspace([-1.0], 0.0)],
        [[3.0]], [1.0])], domain_box=(np.array([0.0]), np.array([2.0])))
