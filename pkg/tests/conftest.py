import pytest

from artifact.woa import BeliefState


@pytest.fixture
def one_type():
    return dict(p_b=0.5, p_s=0.8, beliefs=BeliefState(0.1, 0.1, (0.9,)), costs=(0.2,))


@pytest.fixture
def two_types():
    return dict(p_b=0.5, p_s=0.8, beliefs=BeliefState(0.1, 0.1, (0.45, 0.45)), costs=(0.2, 0.6))
