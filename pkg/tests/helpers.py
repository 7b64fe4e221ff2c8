import numpy as np
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

EXAMPLE1 = np.array([
    [0.5, 0.5, 0, 0, 0],
    [0.4, 0.3, 0, 0, 0.3],
    [0.1, 0.2, 0.2, 0.4, 0.1],
    [0, 0, 0, 0.7, 0.3],
    [0.1, 0.5, 0.1, 0.2, 0.1],
])
EXAMPLE2 = EXAMPLE1.copy()
EXAMPLE2[0] = [1, 0, 0, 0, 0]
EXAMPLE2[3] = [0, 0, 0, 1, 0]
X0 = np.array([3.0, 2.0, 1.0, 3.0, 5.0])


def random_stochastic(rng, n, density=0.6):
    """Random row-stochastic matrix with a positive diagonal."""
    A = rng.random((n, n)) * (rng.random((n, n)) < density)
    A[np.arange(n), np.arange(n)] += rng.random(n) + 0.05
    return A / A.sum(axis=1, keepdims=True)


def random_leader_first(rng, n, m):
    """``[[I, 0], [X, Y]]`` with every follower row putting weight on a leader."""
    F = np.zeros((n, n))
    F[:m, :m] = np.eye(m)
    X = rng.random((n - m, m)) + 0.01
    Y = rng.random((n - m, n - m)) * (rng.random((n - m, n - m)) < 0.7)
    block = np.hstack([X, Y])
    F[m:] = block / block.sum(axis=1, keepdims=True)
    return F


@st.composite
def nonneg_matrices(draw, min_n=1, max_n=7):
    n = draw(st.integers(min_n, max_n))
    A = draw(hnp.arrays(np.float64, (n, n),
                        elements=st.floats(0, 10, allow_subnormal=False)))
    A[np.arange(n), np.arange(n)] += 0.5
    return A


@st.composite
def stochastic_matrices(draw, min_n=1, max_n=7):
    A = draw(nonneg_matrices(min_n, max_n))
    return A / A.sum(axis=1, keepdims=True)
