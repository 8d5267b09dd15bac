"""Synthetic hierarchical data with known ground truth."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .sender_core import Activation, Decomposition, LayerFactors, chain

RHO_DEFAULT = 10.0

__all__ = ["SynthSpec", "GroundTruth", "gen_hierarchical", "split_test_retest"]


@dataclass(frozen=True)
class SynthSpec:
    """Shape and content of a synthetic dataset.

    Parameters
    ----------
    rows, cols : int
    layer_ranks_linear, layer_ranks_nonlinear : tuple of int
        Strictly decreasing widths of each stack; equal lengths.
    sparsity : float, default=0.02
        Fraction of nonzeros in each ``S_k``.
    noise_sigma : float, default=0.0
        Standard deviation of the additive Gaussian noise.
    activation : {'relu', 'sigmoid'}, default='relu'
    seed : int, default=0
    """

    rows: int
    cols: int
    layer_ranks_linear: tuple = (40, 10)
    layer_ranks_nonlinear: tuple = (20, 5)
    sparsity: float = 0.02
    noise_sigma: float = 0.0
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        lin = tuple(int(r) for r in self.layer_ranks_linear)
        nl = tuple(int(r) for r in self.layer_ranks_nonlinear)
        object.__setattr__(self, "layer_ranks_linear", lin)
        object.__setattr__(self, "layer_ranks_nonlinear", nl)
        if self.rows < 2 or self.cols < 2:
            raise ConfigError("rows and cols must be at least 2")
        if not lin or len(lin) != len(nl):
            raise ConfigError("linear and nonlinear rank chains must be nonempty and of equal length")
        for name, ranks in (("layer_ranks_linear", lin), ("layer_ranks_nonlinear", nl)):
            if min(ranks) < 1 or any(a <= b for a, b in zip(ranks, ranks[1:])):
                raise ConfigError(f"{name} must be strictly decreasing positive integers, got {ranks}")
            if ranks[0] > min(self.rows, self.cols) - 1:
                raise ConfigError(f"{name}[0] must be <= min(rows, cols) - 1")
        if not 0 <= self.sparsity < 1:
            raise ConfigError(f"sparsity must lie in [0, 1), got {self.sparsity}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        Activation(self.activation)


@dataclass(frozen=True)
class GroundTruth:
    """True factors with the clean and noisy data built from them."""

    layers: list
    clean: np.ndarray
    noisy: np.ndarray
    activation: str = "relu"
    linear: np.ndarray = field(default=None, repr=False)
    nonlinear: np.ndarray = field(default=None, repr=False)

    @property
    def sparse(self):
        return sum(layer.s for layer in self.layers)

    def as_decomposition(self, rho=RHO_DEFAULT):
        return Decomposition(
            layers=list(self.layers), loss_history=[], terminated_by="rank_one",
            activation=self.activation, rho=rho,
        )


def gen_hierarchical(spec):
    """Draw a seeded hierarchical dataset.

    Factors are uniform on ``(-0.5, 0.5)`` divided by the square root of
    their width. The first weight of each stack is then rescaled so that
    the stack's contribution has unit root-mean-square, which keeps the
    sparse entries (magnitudes uniform on ``[2/rho, 5/rho]`` with random
    sign, ``rho = 10``) on a fixed footing relative to the signal.

    Returns
    -------
    GroundTruth
    """
    act = Activation(spec.activation)
    rng = np.random.default_rng(spec.seed)
    p, q = spec.rows, spec.cols

    def draw(a, b, rank):
        return rng.uniform(-0.5, 0.5, size=(a, b)) / np.sqrt(rank)

    def stack(ranks):
        dims = (p,) + ranks
        weights = [draw(dims[i], dims[i + 1], dims[i + 1]) for i in range(len(ranks))]
        return weights, draw(ranks[-1], q, ranks[-1])

    xs, y = stack(spec.layer_ranks_linear)
    us, v = stack(spec.layer_ranks_nonlinear)
    lin = chain(xs) @ y
    nonlin = chain(us) @ act.apply(v)
    for weights, part in ((xs, lin), (us, nonlin)):
        rms = np.sqrt(np.mean(part * part))
        if rms > 0:
            weights[0] = weights[0] / rms
    lin = chain(xs) @ y
    nonlin = chain(us) @ act.apply(v)

    depth = len(xs)
    sparse = []
    for _ in range(depth):
        mask = rng.random((p, q)) < spec.sparsity
        mags = rng.uniform(2.0 / RHO_DEFAULT, 5.0 / RHO_DEFAULT, size=(p, q))
        signs = rng.choice([-1.0, 1.0], size=(p, q))
        sparse.append(np.where(mask, signs * mags, 0.0))

    # Intermediate features: Y_k = X_{k+1} Y_{k+1} and V_k is the inverse
    # activation of U_{k+1} act(V_{k+1}), exact where that lies in range.
    ys, vs = [y], [v]
    for k in range(depth - 1, 0, -1):
        ys.insert(0, xs[k] @ ys[0])
        vs.insert(0, act.inverse(us[k] @ act.apply(vs[0])))
    layers = [
        LayerFactors(x=xs[k], y=ys[k], u=us[k], v=vs[k], s=sparse[k]) for k in range(depth)
    ]
    clean = lin + nonlin + sum(sparse)
    noisy = clean + rng.normal(0.0, spec.noise_sigma, size=(p, q)) if spec.noise_sigma > 0 else clean.copy()
    return GroundTruth(
        layers=layers, clean=clean, noisy=noisy, activation=spec.activation,
        linear=lin, nonlinear=nonlin,
    )


def split_test_retest(data, seed):
    """Partition the columns of ``data`` into two disjoint halves.

    The column indices are shuffled with ``seed``; the first half goes to
    the test matrix and the rest to the retest matrix. Each half keeps its
    columns in their original order.

    Returns
    -------
    test, retest : ndarray
    test_cols, retest_cols : ndarray of int
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValueError("need a 2-D matrix with at least 2 columns")
    perm = np.random.default_rng(seed).permutation(data.shape[1])
    half = data.shape[1] // 2
    test_cols, retest_cols = np.sort(perm[:half]), np.sort(perm[half:])
    return data[:, test_cols], data[:, retest_cols], test_cols, retest_cols
