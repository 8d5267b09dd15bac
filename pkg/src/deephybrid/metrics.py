"""Reconstruction, reliability and similarity metrics."""

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import directed_hausdorff

from .exceptions import DegenerateInputError

__all__ = [
    "ComponentSet",
    "reconstruction_error",
    "icc",
    "icc_matrix",
    "identifiability",
    "threshold_to_pointset",
    "hausdorff",
    "similarity",
    "low_rank_components",
    "test_retest_identifiability",
]


@dataclass(frozen=True)
class ComponentSet:
    """Components stored as rows of a 2-D array, with optional labels."""

    components: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        comps = np.atleast_2d(np.asarray(self.components, dtype=np.float64))
        if comps.ndim != 2 or comps.shape[0] == 0:
            raise ValueError("a component set needs at least one vector")
        object.__setattr__(self, "components", comps)

    def __len__(self):
        return self.components.shape[0]


def _rows(components):
    if isinstance(components, ComponentSet):
        return components.components
    return ComponentSet(components).components


def reconstruction_error(data, decomposition, act=None):
    """Relative Frobenius error of the full reconstruction.

    ``||I - lin - nonlin - sum_k S_k||_F / ||I||_F``. ``act`` overrides the
    decomposition's activation.
    """
    data = np.asarray(data, dtype=np.float64)
    norm = np.linalg.norm(data)
    if norm == 0:
        raise DegenerateInputError("reconstruction error is undefined for an all-zero input")
    if act is not None and getattr(act, "kind", act) != decomposition.activation:
        decomposition = dataclasses.replace(decomposition, activation=getattr(act, "kind", act))
    return float(np.linalg.norm(data - decomposition.reconstruct()) / norm)


def icc(x, y):
    """ICC(2,1): two-way random effects, absolute agreement, single rating.

    ``x`` and ``y`` are the two ratings of ``n`` targets.

    Raises
    ------
    DegenerateInputError
        When the ICC denominator vanishes (for example both inputs constant
        and equal).
    """
    table = np.column_stack([np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)])
    n, k = table.shape
    if n < 2:
        raise ValueError("icc needs at least 2 targets")
    row_means = table.mean(axis=1)
    col_means = table.mean(axis=0)
    grand = col_means.mean()
    ms_rows = k * np.sum((row_means - grand) ** 2) / (n - 1)
    ms_cols = n * np.sum((col_means - grand) ** 2) / (k - 1)
    resid = table - row_means[:, None] - col_means[None, :] + grand
    ms_err = np.sum(resid**2) / ((n - 1) * (k - 1))
    denom = ms_rows + (k - 1) * ms_err + k * (ms_cols - ms_err) / n
    if not denom > 0:
        raise DegenerateInputError("icc is undefined: no variance between or within targets")
    return float((ms_rows - ms_err) / denom)


def icc_matrix(test, retest):
    """ICC of every test component against every retest component."""
    a, b = _rows(test), _rows(retest)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"component lengths differ: {a.shape[1]} vs {b.shape[1]}")
    return np.array([[icc(ai, bj) for bj in b] for ai in a])


def identifiability(test, retest, pairing="matched", sign_invariant=False):
    """Mean ICC between test and retest components.

    Parameters
    ----------
    test, retest : ComponentSet or array-like of shape (n, length)
    pairing : {'matched', 'all'}, default='matched'
        ``'all'`` averages the ICC over every test/retest pair.
        ``'matched'`` pairs each component with its counterpart through the
        assignment that maximizes total ICC and averages over those
        ``min(n_test, n_retest)`` pairs.
    sign_invariant : bool, default=False
        Score each pair with the better of ``icc(a, b)`` and ``icc(a, -b)``.
        Factorization components are only defined up to sign.
    """
    grid = icc_matrix(test, retest)
    if sign_invariant:
        grid = np.maximum(grid, icc_matrix(test, -_rows(retest)))
    if pairing == "all":
        return float(grid.sum() / grid.size)
    if pairing != "matched":
        raise ValueError(f"unknown pairing {pairing!r}")
    rows, cols = linear_sum_assignment(grid, maximize=True)
    return float(grid[rows, cols].mean())


def threshold_to_pointset(component, thresh):
    """Sorted indices where ``component`` exceeds ``thresh``."""
    component = np.asarray(component, dtype=np.float64).ravel()
    return np.flatnonzero(component > thresh)


def hausdorff(a, b):
    """Symmetric Hausdorff distance between two sets of 1-D indices."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 1)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 1)
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff distance needs two nonempty point sets")
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))


def similarity(a, b, threshold_pct=90.0):
    """Hausdorff distance between paired components after thresholding.

    Row ``i`` of ``a`` is compared with row ``i`` of ``b``. Each component
    keeps the indices where its magnitude exceeds its own
    ``threshold_pct`` percentile of magnitudes.

    Returns
    -------
    ndarray of shape (n_components,)
    """
    a, b = _rows(a), _rows(b)
    if a.shape != b.shape:
        raise ValueError(f"component sets differ in shape: {a.shape} vs {b.shape}")

    def points(c):
        mag = np.abs(c)
        pts = threshold_to_pointset(mag, np.percentile(mag, threshold_pct))
        # A flat component keeps its single largest entry.
        return pts if pts.size else np.array([int(np.argmax(mag))])

    return np.array([hausdorff(points(ca), points(cb)) for ca, cb in zip(a, b)])


def low_rank_components(decomposition, n_components=None):
    """Unit-norm column patterns of the low-rank reconstruction.

    These are the left singular vectors of ``lin + nonlin``, ordered by
    singular value and signed so that the largest-magnitude entry is
    positive. The default count is the final linear width ``r_M``.

    Returns
    -------
    ndarray of shape (n_components, P)
    """
    low_rank = decomposition.linear_part() + decomposition.nonlinear_part()
    basis, _, _ = np.linalg.svd(low_rank, full_matrices=False)
    n = decomposition.layers[-1].rank_linear if n_components is None else n_components
    basis = basis[:, : max(1, n)]
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return (basis * signs).T


def test_retest_identifiability(data, seed, config=None):
    """Split the columns, decompose each half and compare components.

    Both halves share the row axis, so components are compared as column
    patterns (see :func:`low_rank_components`), matched by assignment and
    aligned in sign.

    Returns
    -------
    score : float
    test_components, retest_components : ndarray
    """
    from .harness import split_test_retest
    from .sender_core import SenderConfig, decompose

    config = SenderConfig() if config is None else config
    test, retest, _, _ = split_test_retest(data, seed)
    comps_test = low_rank_components(decompose(test, config))
    comps_retest = low_rank_components(decompose(retest, config))
    score = identifiability(comps_test, comps_retest, pairing="matched", sign_invariant=True)
    return score, comps_test, comps_retest
