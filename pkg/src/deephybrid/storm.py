"""STORM: stochastic recursive momentum with an adaptive step size.

The step size after ``t`` gradients is

    eta_t = k_lr / (omega + sum_i ||g_i||_F^2) ** (1/3)

and the momentum estimate follows

    d_t = g(x_t, xi_t) + (1 - alpha_t) * (d_{t-1} - g(x_{t-1}, xi_t)),
    alpha_t = min(1, c * eta_{t-1}^2).

With exact gradients the correction term vanishes and the recursion is
gradient descent with the adaptive step ``eta_t``.
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DivergenceError, NumericalError

DIVERGENCE_BOUND = 1e12

__all__ = [
    "StormParams",
    "StormState",
    "StormResult",
    "storm_init",
    "storm_step",
    "storm_solve",
]


@dataclass(frozen=True)
class StormParams:
    """Tunables of the STORM recursion.

    Parameters
    ----------
    k_lr : float, default=0.1
        Learning-rate scale ``k``.
    omega : float, default=1.0
        Offset ``omega`` in the step-size denominator.
    c : float, default=100.0
        Momentum scale; ``alpha = min(1, c * eta**2)``.
    max_iter : int, default=500
        Iteration budget of :func:`storm_solve`.
    grad_tol : float, default=1e-6
        Stop once the Frobenius norm of the gradient falls to this value.
    """

    k_lr: float = 0.1
    omega: float = 1.0
    c: float = 100.0
    max_iter: int = 500
    grad_tol: float = 1e-6

    def __post_init__(self):
        for name in ("k_lr", "omega", "c", "grad_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"StormParams.{name} must be a positive real, got {value!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"StormParams.max_iter must be a positive integer, got {self.max_iter!r}")

    def step_size(self, g_sum):
        return self.k_lr / (self.omega + g_sum) ** (1.0 / 3.0)


@dataclass(frozen=True)
class StormState:
    """Iterate, momentum and step-size bookkeeping of one solve."""

    x: np.ndarray
    d: np.ndarray
    g_sum: float
    t: int
    eta: float


@dataclass(frozen=True)
class StormResult:
    """Outcome of :func:`storm_solve`."""

    x: np.ndarray
    grad_norm: float
    n_iter: int
    converged: bool


def _check_finite(g, what):
    if not np.all(np.isfinite(g)):
        raise NumericalError(f"non-finite entries in {what}")


def storm_init(x0, g0, params):
    """Start a recursion at ``x0`` with first gradient ``g0``.

    The momentum starts at ``d = g0`` and ``g_sum = ||g0||_F^2``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    g0 = np.asarray(g0, dtype=np.float64)
    if x0.shape != g0.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape} vs g0 {g0.shape}")
    _check_finite(g0, "initial gradient")
    g_sum = float(np.sum(g0 * g0))
    return StormState(x=x0.copy(), d=g0.copy(), g_sum=g_sum, t=1, eta=params.step_size(g_sum))


def storm_step(state, grad_new, grad_old_at_new_sample, params):
    """Advance the recursion by one step.

    Parameters
    ----------
    state : StormState
        Holds ``x_t`` together with ``d_{t-1}`` and ``eta_{t-1}``.
    grad_new : ndarray
        Gradient at ``x_t`` on the current sample.
    grad_old_at_new_sample : ndarray
        Gradient at the previous iterate on the same sample.
    params : StormParams

    Returns
    -------
    StormState
        With ``x_{t+1} = x_t - eta_t * d_t``.
    """
    grad_new = np.asarray(grad_new, dtype=np.float64)
    grad_old = np.asarray(grad_old_at_new_sample, dtype=np.float64)
    if grad_new.shape != state.x.shape or grad_old.shape != state.x.shape:
        raise ValueError("gradient shapes must match the iterate")
    _check_finite(grad_new, "gradient")
    _check_finite(grad_old, "gradient at previous iterate")
    alpha = min(1.0, params.c * state.eta**2)
    d = grad_new + (1.0 - alpha) * (state.d - grad_old)
    g_sum = state.g_sum + float(np.sum(grad_new * grad_new))
    eta = params.step_size(g_sum)
    return StormState(x=state.x - eta * d, d=d, g_sum=g_sum, t=state.t + 1, eta=eta)


def storm_solve(gradient, x0, params=None):
    """Minimize a smooth function given its exact gradient oracle.

    Parameters
    ----------
    gradient : callable
        Maps an iterate to its gradient (same shape).
    x0 : array-like
        Starting point.
    params : StormParams, optional

    Returns
    -------
    StormResult
        The first iterate whose gradient norm is at most ``grad_tol``, or
        the iterate after ``max_iter`` moves.

    Raises
    ------
    DivergenceError
        If an iterate's Frobenius norm exceeds 1e12.
    """
    params = StormParams() if params is None else params
    x = np.array(x0, dtype=np.float64)
    _check_finite(x, "starting point")
    g = np.asarray(gradient(x), dtype=np.float64)
    gnorm = float(np.linalg.norm(g))
    if gnorm <= params.grad_tol:
        return StormResult(x=x, grad_norm=gnorm, n_iter=0, converged=True)

    state = storm_init(x, g, params)
    # First move uses d_0 = g_0 and eta_0.
    state = replace(state, x=state.x - state.eta * state.d)
    for it in range(1, params.max_iter + 1):
        if np.linalg.norm(state.x) > DIVERGENCE_BOUND:
            raise DivergenceError(f"STORM iterate norm exceeded {DIVERGENCE_BOUND:g} at iteration {it}")
        g_prev = g
        g = np.asarray(gradient(state.x), dtype=np.float64)
        _check_finite(g, "gradient")
        gnorm = float(np.linalg.norm(g))
        if gnorm <= params.grad_tol or it == params.max_iter:
            return StormResult(x=state.x, grad_norm=gnorm, n_iter=it, converged=gnorm <= params.grad_tol)
        state = storm_step(state, g, g_prev, params)
    raise AssertionError("unreachable")
