"""Layer-wise hybrid factorization engine.

Layer ``k`` approximates its residual input ``R_k`` as

    R_k ~ (X_1 ... X_k) Y_k + (U_1 ... U_k) act(V_k) + S_k

with a sparse ``S_k``. Within a layer the four factors are refreshed in
turn by STORM on the smooth term ``(rho/2) ||R_k - lin - nonlin||_F^2`` and
``S_k`` is the soft-thresholded residual. The next layer factorizes
``Y_k ~ X_{k+1} Y_{k+1}`` and ``act(V_k) ~ U_{k+1} act(V_{k+1})`` and sees
``R_{k+1} = R_k - S_k``. Widths come from :func:`~deephybrid.rro.estimate_rank`.
"""

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, DegenerateInputError
from .matrix_core import as_matrix, pseudo_inverse, qr_decompose
from .rro import estimate_rank
from .storm import StormParams, storm_solve

logger = logging.getLogger(__name__)

SIGMOID_EPS = 1e-7

__all__ = [
    "Activation",
    "SenderConfig",
    "LayerFactors",
    "Decomposition",
    "activation_apply",
    "activation_inverse",
    "activation_inverse_deriv",
    "shrinkage",
    "chain",
    "layer_loss",
    "smooth_gradients",
    "update_layer",
    "decompose",
    "HybridFactorization",
]


# ---------------------------------------------------------------- activations


@dataclass(frozen=True)
class Activation:
    """Elementwise activation with its inverse.

    Parameters
    ----------
    kind : {'relu', 'sigmoid'}
    """

    kind: str = "relu"

    def __post_init__(self):
        if self.kind not in ("relu", "sigmoid"):
            raise ConfigError(f"activation must be 'relu' or 'sigmoid', got {self.kind!r}")

    def apply(self, m):
        m = np.asarray(m, dtype=np.float64)
        if self.kind == "relu":
            return np.maximum(m, 0.0)
        return 0.5 * (1.0 + np.tanh(0.5 * m))

    def deriv(self, m):
        """Derivative with respect to the pre-activation."""
        m = np.asarray(m, dtype=np.float64)
        if self.kind == "relu":
            return (m > 0).astype(np.float64)
        s = self.apply(m)
        return s * (1.0 - s)

    def inverse(self, m):
        m = np.asarray(m, dtype=np.float64)
        if self.kind == "relu":
            return np.where(m >= 0, m, 0.0)
        m = np.clip(m, SIGMOID_EPS, 1.0 - SIGMOID_EPS)
        return np.log(m) - np.log1p(-m)

    def inverse_deriv(self, m):
        """Derivative of the inverse, evaluated at an activated value."""
        m = np.asarray(m, dtype=np.float64)
        if self.kind == "relu":
            return (m > 0).astype(np.float64)
        m = np.clip(m, SIGMOID_EPS, 1.0 - SIGMOID_EPS)
        return 1.0 / (m * (1.0 - m))

    @property
    def max_slope(self):
        return 1.0 if self.kind == "relu" else 0.25

    @property
    def positively_homogeneous(self):
        return self.kind == "relu"


def _act(act):
    return act if isinstance(act, Activation) else Activation(act)


def activation_apply(act, m):
    """``relu(x) = max(0, x)`` or ``sigmoid(x) = 1 / (1 + exp(-x))``."""
    return _act(act).apply(m)


def activation_inverse(act, m):
    """Inverse activation; sigmoid inputs are clamped into ``[1e-7, 1 - 1e-7]``."""
    return _act(act).inverse(m)


def activation_inverse_deriv(act, m):
    """Derivative of the inverse activation at activated values ``m``."""
    return _act(act).inverse_deriv(m)


def shrinkage(m, tau):
    """Soft threshold ``sign(x) * max(|x| - tau, 0)``, the prox of ``tau * |x|``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    m = np.asarray(m, dtype=np.float64)
    return np.sign(m) * np.maximum(np.abs(m) - tau, 0.0)


def chain(mats):
    """Left-to-right product of a list of matrices (``None`` when empty)."""
    mats = list(mats)
    if not mats:
        return None
    if len(mats) == 1:
        return mats[0]
    return np.linalg.multi_dot(mats)


def _lmul(left, m):
    # ``None`` stands for an identity of matching size.
    return m if left is None else left @ m


# --------------------------------------------------------------------- config


@dataclass(frozen=True)
class SenderConfig:
    """Tunables of :func:`decompose`.

    Parameters
    ----------
    rho : float, default=10.0
        Penalty weight; the shrinkage threshold is ``1 / rho``. Must exceed 1.
    activation : {'relu', 'sigmoid'}, default='relu'
    storm : StormParams
        Inner solver settings for each factor update. Gradients handed to
        the solver are divided by the block's Lipschitz bound, so ``k_lr``
        is a step size in units of ``1 / L``.
    initial_rank : int or 'auto', default='auto'
        Width of the first layer; ``'auto'`` uses ``max(2, min(P, Q) // 2)``.
    max_outer_sweeps : int, default=200
    outer_tol : float, default=1e-6
        Relative loss change that ends a layer.
    seed : int, default=0
    mbp_enabled : bool, default=True
    mbp_T : float, default=0.01
        Step constant of the nonlinear refinement.
    mbp_max_iter : int, default=30
    rank_gap : float, default=3.0
        Minimum diagonal ratio at a rank estimate for it to count as a
        resolved break. A stack without one shrinks by a single unit.
    """

    rho: float = 10.0
    activation: str = "relu"
    storm: StormParams = field(default_factory=lambda: StormParams(k_lr=1.0, max_iter=20))
    initial_rank: object = "auto"
    max_outer_sweeps: int = 200
    outer_tol: float = 1e-6
    seed: int = 0
    mbp_enabled: bool = True
    mbp_T: float = 0.01
    mbp_max_iter: int = 30
    rank_gap: float = 3.0

    def __post_init__(self):
        def positive_int(name):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")

        if not (isinstance(self.rho, (int, float)) and np.isfinite(self.rho) and self.rho > 1):
            raise ConfigError(f"rho must satisfy rho > 1, got {self.rho!r}")
        Activation(self.activation)
        if not isinstance(self.storm, StormParams):
            raise ConfigError("storm must be a StormParams instance")
        if self.initial_rank != "auto":
            positive_int("initial_rank")
        positive_int("max_outer_sweeps")
        positive_int("mbp_max_iter")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        for name in ("outer_tol", "mbp_T", "rank_gap"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive real, got {v!r}")
        if not isinstance(self.mbp_enabled, bool):
            raise ConfigError(f"mbp_enabled must be true or false, got {self.mbp_enabled!r}")

    @property
    def act(self):
        return Activation(self.activation)

    def resolve_initial_rank(self, shape):
        limit = min(shape) - 1
        if self.initial_rank == "auto":
            return max(2, min(shape) // 2)
        if self.initial_rank > limit:
            raise ConfigError(f"initial_rank must be <= min(rows, cols) - 1 = {limit}, got {self.initial_rank}")
        return int(self.initial_rank)

    def to_dict(self):
        """Flat mapping; STORM fields carry a ``storm_`` prefix."""
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "storm":
                for sf in dataclasses.fields(StormParams):
                    out[f"storm_{sf.name}"] = getattr(value, sf.name)
            else:
                out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, mapping):
        """Inverse of :meth:`to_dict`; unknown keys raise :class:`ConfigError`."""
        mapping = dict(mapping)
        storm_names = {f"storm_{f.name}": f.name for f in dataclasses.fields(StormParams)}
        plain = {f.name for f in dataclasses.fields(cls)} - {"storm"}
        unknown = sorted(set(mapping) - plain - set(storm_names))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        default_storm = cls().storm
        storm_kwargs = {
            name: mapping.pop(key, getattr(default_storm, name)) for key, name in storm_names.items()
        }
        try:
            storm = StormParams(**storm_kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return cls(storm=storm, **mapping)


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class LayerFactors:
    """Factors of one layer.

    ``x`` is ``r_{k-1} x r_k``, ``y`` is ``r_k x Q``, ``u`` is
    ``s_{k-1} x s_k``, ``v`` is ``s_k x Q`` and ``s`` is ``P x Q``.
    """

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    s: np.ndarray

    @property
    def rank_linear(self):
        return self.y.shape[0]

    @property
    def rank_nonlinear(self):
        return self.v.shape[0]


@dataclass(frozen=True)
class Decomposition:
    """Result of :func:`decompose`.

    Attributes
    ----------
    layers : list of LayerFactors
    loss_history : list of (layer, sweep, loss)
        One entry per sweep, 1-based layer and sweep indices. Refinement
        passes append entries to the last layer.
    terminated_by : {'rank_one', 'flat_spectrum'}
        ``'rank_one'`` when a next-layer width would drop to 1,
        ``'flat_spectrum'`` when neither stack showed a resolved break.
    rank_estimates : list of (RankEstimate or None, RankEstimate or None)
        Linear and nonlinear estimates made after each layer.
    layer_sweeps : list of int
    activation : str
    rho : float
    """

    layers: list
    loss_history: list
    terminated_by: str
    rank_estimates: list = field(default_factory=list)
    layer_sweeps: list = field(default_factory=list)
    activation: str = "relu"
    rho: float = 10.0

    @property
    def depth(self):
        return len(self.layers)

    @property
    def act(self):
        return Activation(self.activation)

    def linear_basis(self, k=None):
        """``X_1 ... X_k`` (all layers by default)."""
        k = self.depth if k is None else k
        return chain(layer.x for layer in self.layers[:k])

    def nonlinear_basis(self, k=None):
        k = self.depth if k is None else k
        return chain(layer.u for layer in self.layers[:k])

    def linear_part(self):
        return self.linear_basis() @ self.layers[-1].y

    def nonlinear_part(self):
        return self.nonlinear_basis() @ self.act.apply(self.layers[-1].v)

    def sparse_part(self):
        return sum(layer.s for layer in self.layers)

    def reconstruct(self):
        """Low-rank reconstruction plus all sparse components."""
        return self.linear_part() + self.nonlinear_part() + self.sparse_part()

    def residual_input(self, data, k=None):
        """Input seen by layer ``k``: the data minus the earlier ``S_i``."""
        k = self.depth if k is None else k
        out = np.array(data, dtype=np.float64)
        for layer in self.layers[: k - 1]:
            out = out - layer.s
        return out


# ----------------------------------------------------------- loss / gradients


def _loss_value(residual_input, lin, nonlin, s, rho):
    e = residual_input - lin - nonlin
    return 0.5 * rho * float(np.sum(e * e)) + float(np.sum(np.abs(s))) / rho


def layer_loss(residual_input, layers, k, rho, act):
    """Layer objective ``(rho/2)||R - lin - nonlin||_F^2 + ||S_k||_1 / rho``.

    Parameters
    ----------
    residual_input : ndarray of shape (P, Q)
        Input of layer ``k``.
    layers : sequence of LayerFactors
        At least ``k`` layers.
    k : int
        1-based layer index.
    rho : float
    act : Activation or str
    """
    act = _act(act)
    layers = list(layers)
    if not 1 <= k <= len(layers):
        raise ValueError(f"layer index {k} outside 1..{len(layers)}")
    r = np.asarray(residual_input, dtype=np.float64)
    xs = chain(layer.x for layer in layers[:k])
    us = chain(layer.u for layer in layers[:k])
    top = layers[k - 1]
    lin = xs @ top.y
    nonlin = us @ act.apply(top.v)
    if lin.shape != r.shape or nonlin.shape != r.shape or top.s.shape != r.shape:
        raise ValueError("factor shapes do not conform with the residual input")
    return _loss_value(r, lin, nonlin, top.s, rho)


def smooth_gradients(residual_input, x, y, u, v, rho, act, xp=None, up=None):
    """Gradients of ``(rho/2)||R - Xp X Y - Up U act(V)||_F^2``.

    ``xp`` and ``up`` are the products of the earlier layers' weights
    (``None`` at the first layer).

    Returns
    -------
    dict with keys 'x', 'y', 'u', 'v'
    """
    act = _act(act)
    m = _lmul(xp, x)
    w = _lmul(up, u)
    a = act.apply(v)
    e = residual_input - m @ y - w @ a
    ey = e @ y.T
    ea = e @ a.T
    return {
        "x": -rho * (ey if xp is None else xp.T @ ey),
        "y": -rho * (m.T @ e),
        "u": -rho * (ea if up is None else up.T @ ea),
        "v": -rho * (w.T @ e) * act.deriv(v),
    }


def _sq_norm2(m):
    return float(np.linalg.norm(m, 2)) ** 2 if m.size else 0.0


def _block_solve(grad, x0, lipschitz, params):
    lipschitz = max(lipschitz, 1e-12)
    return storm_solve(lambda z: grad(z) / lipschitz, x0, params).x


def update_layer(residual_input, state, config, xp=None, up=None):
    """One alternation sweep over ``X, Y, U, V`` followed by the ``S`` refresh.

    Each block solves its least-squares subproblem with :func:`storm_solve`
    using Gram-matrix gradients. The gradient is divided by the block's
    Lipschitz bound before it reaches the solver.

    Parameters
    ----------
    residual_input : ndarray of shape (P, Q)
    state : LayerFactors
    config : SenderConfig
    xp, up : ndarray or None
        Products of the earlier layers' weights.

    Returns
    -------
    state : LayerFactors
    loss : float
    """
    rho = config.rho
    act = config.act
    params = config.storm
    r = residual_input
    x, y, u, v = state.x, state.y, state.u, state.v
    xp_gram = None if xp is None else xp.T @ xp

    # X
    w = _lmul(up, u)
    nonlin = w @ act.apply(v)
    target = r - nonlin
    yyt = y @ y.T
    b = target @ y.T if xp is None else xp.T @ (target @ y.T)
    gram = (lambda z: z) if xp_gram is None else (lambda z: xp_gram @ z)
    lip = rho * (1.0 if xp is None else _sq_norm2(xp)) * _sq_norm2(y)
    x = _block_solve(lambda z: rho * (gram(z) @ yyt - b), x, lip, params)

    # Y
    m = _lmul(xp, x)
    mtm = m.T @ m
    mtt = m.T @ target
    y = _block_solve(lambda z: rho * (mtm @ z - mtt), y, rho * _sq_norm2(m), params)

    # U
    lin = m @ y
    target = r - lin
    a = act.apply(v)
    aat = a @ a.T
    up_gram = None if up is None else up.T @ up
    b = target @ a.T if up is None else up.T @ (target @ a.T)
    gram = (lambda z: z) if up_gram is None else (lambda z: up_gram @ z)
    lip = rho * (1.0 if up is None else _sq_norm2(up)) * _sq_norm2(a)
    u = _block_solve(lambda z: rho * (gram(z) @ aat - b), u, lip, params)

    # V, through the activation
    w = _lmul(up, u)
    wtw = w.T @ w
    wtt = w.T @ target
    lip = rho * _sq_norm2(w) * act.max_slope**2
    v = _block_solve(lambda z: rho * (wtw @ act.apply(z) - wtt) * act.deriv(z), v, lip, params)

    nonlin = w @ act.apply(v)
    s = shrinkage(r - lin - nonlin, 1.0 / rho)
    new = LayerFactors(x=x, y=y, u=u, v=v, s=s)
    return new, _loss_value(r, lin, nonlin, s, rho)


# ------------------------------------------------------------------ decompose


def _canonicalize(layer, xp, up, act):
    """Fix the gauge of a fitted layer without changing its reconstruction.

    The linear product ``Xp X Y`` is rewritten through its SVD so that the
    accumulated linear weights keep orthonormal columns and the rows of
    ``Y`` are ordered by energy. For positively homogeneous activations the
    columns of ``Up U`` are scaled to unit norm with the scale moved into
    ``V``. ``xp`` must have orthonormal columns, which holds for every
    product of earlier layers fixed this way.
    """
    m = _lmul(xp, layer.x)
    q, r_fac = np.linalg.qr(m)
    a, sv, bt = np.linalg.svd(r_fac @ layer.y, full_matrices=False)
    basis = q @ a
    x = basis if xp is None else xp.T @ basis
    y = sv[:, None] * bt
    u, v = layer.u, layer.v
    if act.positively_homogeneous:
        norms = np.linalg.norm(_lmul(up, u), axis=0)
        norms[norms == 0] = 1.0
        u = u / norms
        v = v * norms[:, None]
    return LayerFactors(x=x, y=y, u=u, v=v, s=layer.s)


def _next_width(feature, gap):
    """Rank estimate of a feature matrix and whether its break is resolved."""
    if min(feature.shape) < 2:
        return None, 1, True
    try:
        est = estimate_rank(feature)
    except DegenerateInputError:
        return None, 1, True
    if est.gap >= gap:
        return est, est.rank, True
    return est, feature.shape[0] - 1, False


def _seed_next_layer(layer, r_next, s_next, act):
    # Linear: keep the leading rows of the energy-ordered features.
    x = np.eye(layer.y.shape[0])[:, :r_next]
    y = layer.y[:r_next].copy()
    # Nonlinear: keep the pivot rows of act(V) and refit the mixing weights.
    a = act.apply(layer.v)
    rows = np.sort(qr_decompose(a.T).perm[:s_next]) if np.any(a) else np.arange(s_next)
    v = layer.v[rows].copy()
    u = a @ pseudo_inverse(act.apply(v))
    return x, y, u, v


def _fit_layer(residual_input, state, config, xp, up, layer_index, history):
    prev = None
    sweeps = 0
    for sweep in range(1, config.max_outer_sweeps + 1):
        state, loss = update_layer(residual_input, state, config, xp=xp, up=up)
        history.append((layer_index, sweep, loss))
        sweeps = sweep
        if prev is not None and abs(prev - loss) <= config.outer_tol * max(abs(prev), np.finfo(float).tiny):
            break
        prev = loss
    return state, sweeps


def decompose(data, config=None):
    """Factorize ``data`` layer by layer until the ranks stop shrinking.

    Parameters
    ----------
    data : array-like of shape (P, Q), min(P, Q) >= 3
    config : SenderConfig, optional

    Returns
    -------
    Decomposition

    Raises
    ------
    DegenerateInputError
        If ``data`` is all zeros.
    ConfigError
        If ``initial_rank`` is too large for ``data``.

    Notes
    -----
    After each layer the gauge is fixed (see ``_canonicalize``) and the
    widths of the next layer are estimated from ``Y_k`` and ``V_k``. A stack
    whose estimate sits on a diagonal ratio of at least ``rank_gap`` takes
    that estimate; otherwise it shrinks by one. The loop stops when a width
    would reach 1 or when neither stack shows a resolved break.
    """
    config = SenderConfig() if config is None else config
    data = as_matrix(data, "data")
    if min(data.shape) < 3:
        raise ValueError(f"need min(rows, cols) >= 3, got shape {data.shape}")
    if not np.any(data):
        raise DegenerateInputError("input matrix is all zeros")
    act = config.act
    rng = np.random.default_rng(config.seed)
    p, q = data.shape
    r0 = config.resolve_initial_rank(data.shape)

    def draw(rows, cols, rank):
        return rng.uniform(-0.5, 0.5, size=(rows, cols)) / np.sqrt(rank)

    x, y, u, v = draw(p, r0, r0), draw(r0, q, r0), draw(p, r0, r0), draw(r0, q, r0)
    residual = data.copy()
    xp = up = None
    layers, history, estimates, sweeps_per_layer = [], [], [], []
    while True:
        k = len(layers) + 1
        state = LayerFactors(x=x, y=y, u=u, v=v, s=np.zeros_like(data))
        state, sweeps = _fit_layer(residual, state, config, xp, up, k, history)
        state = _canonicalize(state, xp, up, act)
        layers.append(state)
        sweeps_per_layer.append(sweeps)

        est_y, r_next, resolved_y = _next_width(state.y, config.rank_gap)
        est_v, s_next, resolved_v = _next_width(state.v, config.rank_gap)
        estimates.append((est_y, est_v))
        logger.info(
            "layer %d: widths (%d, %d), sweeps %d, next (%d%s, %d%s)",
            k, state.rank_linear, state.rank_nonlinear, sweeps,
            r_next, "" if resolved_y else "*", s_next, "" if resolved_v else "*",
        )
        if min(r_next, s_next) <= 1:
            terminated_by = "rank_one"
            break
        if not (resolved_y or resolved_v):
            terminated_by = "flat_spectrum"
            break
        residual = residual - state.s
        xp = _lmul(xp, state.x)
        up = _lmul(up, state.u)
        x, y, u, v = _seed_next_layer(state, r_next, s_next, act)

    result = Decomposition(
        layers=layers,
        loss_history=history,
        terminated_by=terminated_by,
        rank_estimates=estimates,
        layer_sweeps=sweeps_per_layer,
        activation=config.activation,
        rho=config.rho,
    )
    if config.mbp_enabled:
        from .mbp import run_mbp

        result, _ = run_mbp(data, result, config)
    return result


# ------------------------------------------------------------------ estimator


class HybridFactorization(BaseEstimator):
    """Estimator wrapper around :func:`decompose`.

    The input is the matrix to be factorized, not a samples-by-features
    table: its columns are the observations described by the final-layer
    features.

    Parameters
    ----------
    rho : float, default=10.0
    activation : {'relu', 'sigmoid'}, default='relu'
    initial_rank : int or 'auto', default='auto'
    max_outer_sweeps : int, default=200
    outer_tol : float, default=1e-6
    inner_iter : int, default=20
        STORM iterations per factor update.
    step_scale : float, default=1.0
        STORM ``k_lr``.
    mbp : bool, default=True
    mbp_T : float, default=0.01
    mbp_max_iter : int, default=30
    rank_gap : float, default=3.0
    random_state : int, default=0

    Attributes
    ----------
    decomposition_ : Decomposition
    depth_ : int
    components_ : ndarray of shape (P, r_M)
        Accumulated linear weights ``X_1 ... X_M``.
    """

    def __init__(
        self,
        rho=10.0,
        activation="relu",
        initial_rank="auto",
        max_outer_sweeps=200,
        outer_tol=1e-6,
        inner_iter=20,
        step_scale=1.0,
        mbp=True,
        mbp_T=0.01,
        mbp_max_iter=30,
        rank_gap=3.0,
        random_state=0,
    ):
        self.rho = rho
        self.activation = activation
        self.initial_rank = initial_rank
        self.max_outer_sweeps = max_outer_sweeps
        self.outer_tol = outer_tol
        self.inner_iter = inner_iter
        self.step_scale = step_scale
        self.mbp = mbp
        self.mbp_T = mbp_T
        self.mbp_max_iter = mbp_max_iter
        self.rank_gap = rank_gap
        self.random_state = random_state

    def _config(self):
        return SenderConfig(
            rho=self.rho,
            activation=self.activation,
            storm=StormParams(k_lr=self.step_scale, max_iter=self.inner_iter),
            initial_rank=self.initial_rank,
            max_outer_sweeps=self.max_outer_sweeps,
            outer_tol=self.outer_tol,
            seed=self.random_state,
            mbp_enabled=self.mbp,
            mbp_T=self.mbp_T,
            mbp_max_iter=self.mbp_max_iter,
            rank_gap=self.rank_gap,
        )

    def fit(self, X, y=None):
        """Factorize ``X``."""
        X = as_matrix(X)
        self.decomposition_ = decompose(X, self._config())
        self.depth_ = self.decomposition_.depth
        self.components_ = self.decomposition_.linear_basis()
        self._data_norm = float(np.linalg.norm(X))
        return self

    def fit_transform(self, X, y=None):
        """Factorize ``X`` and return the final linear features ``Y_M``."""
        return self.fit(X).decomposition_.layers[-1].y

    def transform(self, X):
        """Least-squares linear features of new columns given the fitted weights."""
        check_is_fitted(self, "decomposition_")
        X = as_matrix(X)
        return pseudo_inverse(self.components_) @ X

    def reconstruct(self):
        check_is_fitted(self, "decomposition_")
        return self.decomposition_.reconstruct()
