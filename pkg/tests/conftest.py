"""Shared fixtures and independent oracle implementations.

The oracles here deliberately re-derive quantities from first principles
(double sums, grid searches, explicit matrix inverses) so the library paths
they check are never exercised in the expected-value computation.
"""

import numpy as np
import pytest

import postcap


# -- channel builders ----------------------------------------------------------


def bsc(p: float) -> postcap.MemorylessChannel:
    return postcap.MemorylessChannel(np.array([[1 - p, p], [p, 1 - p]]))


def perturbed_post(W: np.ndarray, delta: float, seed: int) -> postcap.PostChannel:
    """W-centered POST channel at exact proximity delta (random zero-column-sum direction)."""
    rng = np.random.default_rng(seed)
    y, x = W.shape
    U = rng.standard_normal((y, y, x))
    U -= U.mean(axis=1, keepdims=True)
    U /= np.max(np.abs(U))
    kernels = W[None, :, :] + delta * U
    assert kernels.min() >= 0, "delta too large for this direction"
    return postcap.PostChannel(kernels)


def random_post(rng: np.random.Generator, y_size: int, x_size: int) -> postcap.PostChannel:
    kernels = rng.dirichlet(np.ones(y_size), size=(y_size, x_size)).transpose(0, 2, 1)
    return postcap.PostChannel(kernels)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def ch_2x2_pair():
    """The worked 2x2 POST channel with visibly distinct state matrices."""
    return postcap.PostChannel(np.array([[[.9, .2], [.1, .8]],
                                         [[.88, .22], [.12, .78]]]))


# -- independent oracles -------------------------------------------------------


def mutual_information_xy(p_x: np.ndarray, W: np.ndarray) -> float:
    """I(X;Y) for input p_x through column-stochastic W, by the double sum."""
    q = W @ p_x
    total = 0.0
    for x in range(W.shape[1]):
        for y in range(W.shape[0]):
            joint = p_x[x] * W[y, x]
            if joint > 0:
                total += joint * np.log(W[y, x] / q[y])
    return total


def capacity_grid_2input(W: np.ndarray, step: float = 1e-4) -> float:
    """Brute-force capacity of a 2-input channel over the simplex grid."""
    t = np.arange(0.0, 1.0 + step / 2, step)
    p = np.stack([t, 1.0 - t])           # (2, m)
    q = W @ p                            # (y, m)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q[:, None, :] > 0, W[:, :, None] / q[:, None, :], 1.0)
        terms = W[:, :, None] * np.log(np.where(W[:, :, None] > 0, ratio, 1.0))
    terms = np.where(W[:, :, None] > 0, terms, 0.0)
    mi = (p[None, :, :] * terms).sum(axis=(0, 1))
    return float(mi.max())


def conditional_mi_direct(ch: postcap.PostChannel, P: np.ndarray) -> float:
    """I(X;Y|Y') by the raw triple sum over the joint P(x,y') Q(y|x,y')."""
    total = 0.0
    p_yp = P.sum(axis=0)
    cond_out = np.zeros((ch.y_size, ch.y_size))  # P(y|y') unnormalized
    for yp in range(ch.y_size):
        for y in range(ch.y_size):
            cond_out[y, yp] = sum(P[x, yp] * ch.kernels[yp][y, x] for x in range(ch.x_size))
    for yp in range(ch.y_size):
        if p_yp[yp] <= 0:
            continue
        for x in range(ch.x_size):
            for y in range(ch.y_size):
                joint = P[x, yp] * ch.kernels[yp][y, x]
                if joint > 0:
                    total += joint * np.log(ch.kernels[yp][y, x] * p_yp[yp] / cond_out[y, yp])
    return total


def fcap_grid_2x2(ch: postcap.PostChannel, points: int = 400) -> float:
    """Stationarity-manifold grid oracle for 2x2 channels.

    Parameterizes the conditional inputs by (a, b) on a points^2 grid, computes
    each induced two-state stationary law in closed form, and evaluates the
    conditional MI on the resulting feasible joints.
    """
    assert ch.x_size == 2 and ch.y_size == 2
    t = np.linspace(0.0, 1.0, points + 1)
    a, b = np.meshgrid(t, t, indexing="ij")
    Q0, Q1 = ch.kernels[0], ch.kernels[1]
    # induced kernel columns: from state 0 and state 1
    k10 = Q0[1, 0] * a + Q0[1, 1] * (1 - a)      # P(y=1 | y'=0)
    k01 = Q1[0, 0] * b + Q1[0, 1] * (1 - b)      # P(y=0 | y'=1)
    denom = k10 + k01
    pi0 = np.where(denom > 0, k01 / np.where(denom > 0, denom, 1.0), 0.5)
    pi1 = 1.0 - pi0
    P = np.stack([np.stack([a * pi0, b * pi1], axis=-1),
                  np.stack([(1 - a) * pi0, (1 - b) * pi1], axis=-1)])  # (x, grid..., y')
    cond = np.einsum("syx,x...s->y...s", ch.kernels, P)  # joint (y, grid..., y')
    p_yp = P.sum(axis=0)

    def xlogx(v):
        return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)

    h_cond_out = -xlogx(cond).sum(axis=(0, -1)) + xlogx(p_yp).sum(axis=-1)
    e = xlogx(ch.kernels).sum(axis=1).T  # (x, s)
    lin = np.einsum("x...s,xs->...", P, e)
    return float((h_cond_out + lin).max())


def stationary_power(K: np.ndarray, iters: int = 10_000) -> np.ndarray:
    """Stationary law by brute-force power iteration (independent of the solver path)."""
    pi = np.full(K.shape[0], 1.0 / K.shape[0])
    for _ in range(iters):
        pi = K @ pi
    return pi / pi.sum()
