"""Top-down refinement of a finished decomposition.

Two passes polish the depth-``M`` model against the last layer's input
``R_M``:

* the linear pass walks ``k = M .. 1`` and applies a semi-NMF
  multiplicative update to ``Y_hat_k = X_{k+1} ... X_M Y_M`` followed by a
  least-squares refresh of ``X_k``;
* the nonlinear pass takes shrinking steps ``T / 2**it`` on ``V_M`` (mapped
  through the derivative of the inverse activation) and on every ``U_k``.

Every candidate update is kept only if the depth-``M`` layer loss does not
increase, so a refinement never makes the reported loss worse.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError
from .matrix_core import pos_neg_split, pseudo_inverse
from .sender_core import Activation, chain, layer_loss

DENOM_FLOOR = 1e-12

__all__ = ["MbpReport", "mbp_linear", "mbp_nonlinear", "run_mbp", "semi_nmf_update"]


@dataclass(frozen=True)
class MbpReport:
    """Losses around a refinement and per-layer factor movement."""

    loss_before: float
    loss_after: float
    iterations_nonlinear: int
    per_layer_change: tuple


def _ratio(num, den):
    safe = np.where(den < DENOM_FLOOR, 1.0, den)
    return np.where(den < DENOM_FLOOR, 1.0, num / safe)


def _nonneg_step(g, ftf_pos, ftf_neg, target):
    # One sqrt-ratio update of g >= 0 for the fit target ~ F g, with
    # target = F^T (data) already formed.
    t_pos, t_neg = pos_neg_split(target)
    return g * np.sqrt(_ratio(t_pos + ftf_neg @ g, t_neg + ftf_pos @ g))


def semi_nmf_update(g, f, z):
    """One multiplicative update of a mixed-sign ``g`` for ``z ~ f @ g``.

    ``g`` is split into nonnegative parts ``g = gp - gn``. ``gp`` is updated
    for the fit ``z + f gn ~ f gp`` and then ``gn`` for ``f gp - z ~ f gn``,
    each with the square-root rule of semi-NMF. Entries whose denominator is
    below 1e-12 are left unchanged.

    Returns
    -------
    g_new, gp, gn : ndarray
        ``g_new == gp - gn`` with both parts nonnegative.
    """
    gp, gn = pos_neg_split(g)
    ftz = f.T @ z
    ftf = f.T @ f
    ftf_pos, ftf_neg = pos_neg_split(ftf)
    gp = _nonneg_step(gp, ftf_pos, ftf_neg, ftz + ftf @ gn)
    gn = _nonneg_step(gn, ftf_pos, ftf_neg, ftf @ gp - ftz)
    return gp - gn, gp, gn


def _depth_loss(r_in, layers, rho, act):
    return layer_loss(r_in, layers, len(layers), rho, act)


def _with(layers, k, **changes):
    out = list(layers)
    out[k] = dataclasses.replace(out[k], **changes)
    return out


def mbp_linear(data, decomposition, act=None, return_changes=False):
    """Refine the linear stack from the top layer down.

    For ``k = M .. 1``: ``Y_hat_k`` is updated by :func:`semi_nmf_update`
    against ``psi = X_1 ... X_k`` and ``Z = R_M - (U_1 ... U_M) act(V_M)``
    (frozen at entry); the result becomes ``Y_k``. Then
    ``X_k <- pinv(X_1 ... X_{k-1}) Z pinv(X_{k+1} ... X_M Y_M)``.

    Parameters
    ----------
    data : ndarray of shape (P, Q)
    decomposition : Decomposition
    act : Activation, optional
        Defaults to the decomposition's activation.

    Returns
    -------
    Decomposition
    """
    act = decomposition.act if act is None else Activation(getattr(act, "kind", act))
    rho = decomposition.rho
    layers = list(decomposition.layers)
    m = len(layers)
    r_in = decomposition.residual_input(data)
    z = r_in - chain(layer.u for layer in layers) @ act.apply(layers[-1].v)
    current = _depth_loss(r_in, layers, rho, act)
    changes = [0.0] * m

    for k in range(m, 0, -1):
        i = k - 1
        old_x, old_y = layers[i].x, layers[i].y
        psi = chain(layer.x for layer in layers[:k])
        y_hat = chain([layer.x for layer in layers[k:]] + [layers[-1].y])
        y_new, _, _ = semi_nmf_update(y_hat, psi, z)
        candidate = _with(layers, i, y=y_new)
        if k < m:
            layers = candidate
        else:
            value = _depth_loss(r_in, candidate, rho, act)
            if value <= current:
                layers, current = candidate, value

        # psi over layers before k for the weight refresh.
        left = chain(layer.x for layer in layers[: k - 1])
        right = chain([layer.x for layer in layers[k:]] + [layers[-1].y])
        x_new = z @ pseudo_inverse(right)
        if left is not None:
            x_new = pseudo_inverse(left) @ x_new
        if np.all(np.isfinite(x_new)):
            candidate = _with(layers, i, x=x_new)
            value = _depth_loss(r_in, candidate, rho, act)
            if value <= current:
                layers, current = candidate, value
        changes[i] = float(
            np.sqrt(np.sum((layers[i].x - old_x) ** 2) + np.sum((layers[i].y - old_y) ** 2))
        )

    out = dataclasses.replace(decomposition, layers=layers)
    return (out, changes) if return_changes else out


def mbp_nonlinear(data, decomposition, act=None, T=0.01, max_iter=30, return_info=False):
    """Refine the nonlinear stack with steps of size ``T / 2**it``.

    With ``W = U_1 ... U_M``, ``A = act(V_M)`` and
    ``B = R_M - (X_1 ... X_M) Y_M``:

    * ``K = W^T B``;
    * ``P = U_M^T U_M * prod_{i<M} max(U_i)``, the scalar being the
      largest entry of each earlier weight;
    * ``C = (P A - K) * d act^{-1}(A)``, the fit direction in activated
      space carried back to ``V_M``;
    * ``D_k = L_k^T (W A - B) A^T T_k^T`` with ``L_k`` and ``T_k`` the
      weight products left and right of ``U_k``.

    Each iteration proposes ``V_M - step C`` and ``U_k - step D_k`` and
    keeps the proposal only if the depth-``M`` loss does not increase.
    Iteration stops early once every proposed change is below 1e-10.

    Raises
    ------
    NumericalError
        If a proposal contains non-finite values.
    """
    act = decomposition.act if act is None else Activation(getattr(act, "kind", act))
    rho = decomposition.rho
    layers = list(decomposition.layers)
    m = len(layers)
    r_in = decomposition.residual_input(data)
    b = r_in - chain(layer.x for layer in layers) @ layers[-1].y
    current = _depth_loss(r_in, layers, rho, act)
    changes = [0.0] * m
    iterations = 0

    for it in range(1, max_iter + 1):
        iterations = it
        us = [layer.u for layer in layers]
        w = chain(us)
        v = layers[-1].v
        a = act.apply(v)
        scale = float(np.prod([u.max() for u in us[:-1]])) if m > 1 else 1.0
        p_mat = (us[-1].T @ us[-1]) * scale
        c = (p_mat @ a - w.T @ b) * act.inverse_deriv(a)
        err_a = (w @ a - b) @ a.T
        d = []
        for k in range(m):
            left = chain(us[:k])
            right = chain(us[k + 1:])
            g = err_a if right is None else err_a @ right.T
            d.append(g if left is None else left.T @ g)

        step = T / 2.0**it
        new_v = v - step * c
        new_us = [u - step * dk for u, dk in zip(us, d)]
        if not (np.all(np.isfinite(new_v)) and all(np.all(np.isfinite(u)) for u in new_us)):
            raise NumericalError(f"non-finite nonlinear refinement at iteration {it}")
        deltas = [step * float(np.linalg.norm(dk)) for dk in d]
        deltas[-1] = float(np.hypot(deltas[-1], step * np.linalg.norm(c)))
        if max(deltas) < 1e-10:
            break
        candidate = [dataclasses.replace(layer, u=u) for layer, u in zip(layers, new_us)]
        candidate[-1] = dataclasses.replace(candidate[-1], v=new_v)
        value = _depth_loss(r_in, candidate, rho, act)
        if value <= current:
            layers, current = candidate, value
            changes = [ch + dl for ch, dl in zip(changes, deltas)]

    out = dataclasses.replace(decomposition, layers=layers)
    return (out, iterations, changes) if return_info else out


def run_mbp(data, decomposition, config):
    """Apply :func:`mbp_linear` then :func:`mbp_nonlinear`.

    Parameters
    ----------
    data : ndarray of shape (P, Q)
    decomposition : Decomposition
    config : SenderConfig

    Returns
    -------
    decomposition : Decomposition
        Loss history extended with one entry per pass.
    report : MbpReport
    """
    act = decomposition.act
    rho = decomposition.rho
    data = np.asarray(data, dtype=np.float64)
    r_in = decomposition.residual_input(data)
    before = _depth_loss(r_in, decomposition.layers, rho, act)
    if not config.mbp_enabled:
        report = MbpReport(before, before, 0, tuple(0.0 for _ in decomposition.layers))
        return decomposition, report

    refined, lin_changes = mbp_linear(data, decomposition, act, return_changes=True)
    after_linear = _depth_loss(r_in, refined.layers, rho, act)
    refined, iterations, nl_changes = mbp_nonlinear(
        data, refined, act, T=config.mbp_T, max_iter=config.mbp_max_iter, return_info=True
    )
    after = _depth_loss(r_in, refined.layers, rho, act)

    depth = decomposition.depth
    last = max((s for layer, s, _ in decomposition.loss_history if layer == depth), default=0)
    history = list(decomposition.loss_history) + [
        (depth, last + 1, after_linear),
        (depth, last + 2, after),
    ]
    refined = dataclasses.replace(refined, loss_history=history)
    per_layer = tuple(float(np.hypot(a, b)) for a, b in zip(lin_changes, nl_changes))
    return refined, MbpReport(before, after, iterations, per_layer)
