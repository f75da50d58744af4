import numpy as np
import pytest

from ebssp.mdp import CostDistribution, SspMdp


@pytest.fixture
def three_state_mdp():
    """Two actions; action 0 is cheap but loops, action 1 heads for the goal."""
    P = np.zeros((3, 2, 4))
    P[0, 0] = [0.0, 0.6, 0.2, 0.2]
    P[0, 1] = [0.1, 0.0, 0.0, 0.9]
    P[1, 0] = [0.3, 0.0, 0.5, 0.2]
    P[1, 1] = [0.0, 0.2, 0.3, 0.5]
    P[2, 0] = [0.5, 0.5, 0.0, 0.0]
    P[2, 1] = [0.0, 0.0, 0.4, 0.6]
    means = [[0.1, 0.9], [0.2, 0.4], [0.05, 0.7]]
    costs = [[CostDistribution("deterministic", c) for c in row] for row in means]
    return SspMdp(P, costs, 0)
