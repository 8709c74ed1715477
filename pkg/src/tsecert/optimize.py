"""Adam and L-BFGS, written against the flat-parameter engine.

Both optimizers are deterministic: no randomness enters after
initialization, and all reductions run in a fixed order, so identical
inputs give bit-identical parameter trajectories.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .network import MlpEngine, MlpParams, pack_params, unpack_params

__all__ = ["AdamState", "adam_step", "adam_update", "lbfgs_optimize", "lbfgs_minimize"]

# Armijo backtracking constants
_LS_INIT_STEP = 1.0
_LS_CONTRACTION = 0.5
_LS_SUFFICIENT_DECREASE = 1e-4
_LS_MAX_EVALS = 40
_CURVATURE_MIN = 1e-12


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n_params: int) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), step=0)


def adam_update(theta, g, state: AdamState, lr: float, beta1: float,
                beta2: float, eps: float, buf1=None, buf2=None):
    """One in-place Adam step with bias correction on flat vectors."""
    if buf1 is None:
        buf1 = np.empty_like(theta)
    if buf2 is None:
        buf2 = np.empty_like(theta)
    state.step += 1
    t = state.step
    state.m *= beta1
    np.multiply(g, 1.0 - beta1, out=buf1)
    state.m += buf1
    state.v *= beta2
    np.multiply(g, g, out=buf2)
    buf2 *= 1.0 - beta2
    state.v += buf2
    # theta -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
    np.sqrt(state.v, out=buf2)
    buf2 /= np.sqrt(1.0 - beta2 ** t)
    buf2 += eps
    np.divide(state.m, buf2, out=buf1)
    buf1 *= lr / (1.0 - beta1 ** t)
    theta -= buf1


def adam_step(params: MlpParams, grad: tuple, state: AdamState, config) -> tuple:
    """Functional Adam step at the parameter-structure level.

    ``grad`` is the (grad_weights, grad_biases) pair from gradient().
    Returns new params and a new state; inputs are left untouched.
    """
    gw, gb = grad
    g = np.concatenate([a.ravel() for w, b in zip(gw, gb) for a in (w, b)])
    theta = pack_params(params)
    new_state = AdamState(m=state.m.copy(), v=state.v.copy(), step=state.step)
    adam_update(theta, g, new_state, config.adam_learning_rate,
                config.adam_betas[0], config.adam_betas[1], config.adam_epsilon)
    return unpack_params(theta, params), new_state


def _two_loop(g, s_list, y_list, rho_list, d):
    """L-BFGS direction d = -H g via the two-loop recursion, into buffer d."""
    np.negative(g, out=d)
    k = len(s_list)
    if k == 0:
        return d
    alphas = np.empty(k)
    for i in range(k - 1, -1, -1):
        alphas[i] = rho_list[i] * np.dot(s_list[i], d)
        d -= alphas[i] * y_list[i]
    gamma = np.dot(s_list[-1], y_list[-1]) / np.dot(y_list[-1], y_list[-1])
    d *= gamma
    for i in range(k):
        beta = rho_list[i] * np.dot(y_list[i], d)
        d += (alphas[i] - beta) * s_list[i]
    return d


def lbfgs_minimize(engine: MlpEngine, theta: np.ndarray, max_iterations: int,
                   tolerance: float, memory: int = 10,
                   record=None, iteration_offset: int = 0) -> tuple:
    """Run L-BFGS from theta (modified in place); returns (theta, info).

    One iteration is one accepted parameter update. The line search is
    backtracking Armijo; a failed search ends the phase gracefully. The
    first trial step evaluates loss and gradient together since a full
    step is usually accepted; shorter trials probe the loss only.

    info carries iterations, function_evaluations, final_loss,
    gradient_norm, and stop_reason in {iteration_cap, gradient_tolerance,
    line_search_failure}.
    """
    s_list: deque = deque(maxlen=memory)
    y_list: deque = deque(maxlen=memory)
    rho_list: deque = deque(maxlen=memory)
    d = np.empty_like(theta)
    trial = np.empty_like(theta)

    f, g = engine.value_and_grad(theta)
    evals = 1
    stop_reason = "iteration_cap"
    it = 0
    while it < max_iterations:
        gnorm = float(np.linalg.norm(g))
        if gnorm < tolerance:
            stop_reason = "gradient_tolerance"
            break
        _two_loop(g, s_list, y_list, rho_list, d)
        gd = float(np.dot(g, d))
        if gd >= 0.0:
            # stale curvature produced a non-descent direction
            np.negative(g, out=d)
            gd = -gnorm * gnorm

        alpha = _LS_INIT_STEP
        np.multiply(d, alpha, out=trial)
        trial += theta
        f_new, g_new = engine.value_and_grad(trial)
        evals += 1
        it_evals = 1
        # f_new == f means the decrease term underflowed; demand strict
        # progress so a fully converged run stops instead of spinning
        accepted = (f_new <= f + _LS_SUFFICIENT_DECREASE * alpha * gd
                    and f_new < f)
        have_grad = True
        while not accepted and it_evals < _LS_MAX_EVALS - 1:
            alpha *= _LS_CONTRACTION
            np.multiply(d, alpha, out=trial)
            trial += theta
            f_new = engine.value(trial)
            evals += 1
            it_evals += 1
            have_grad = False
            accepted = (f_new <= f + _LS_SUFFICIENT_DECREASE * alpha * gd
                        and f_new < f)
        if not accepted:
            stop_reason = "line_search_failure"
            break
        if not have_grad:
            f_new, g_new = engine.value_and_grad(trial)
            evals += 1

        s = trial - theta
        y = g_new - g
        ys = float(np.dot(y, s))
        if ys > _CURVATURE_MIN:
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / ys)
        theta[:] = trial
        f, g = f_new, g_new
        it += 1
        if record is not None and (it % 100 == 0 or it == max_iterations):
            record(iteration_offset + it, f)

    info = {
        "iterations": it,
        "function_evaluations": evals,
        "final_loss": f,
        "gradient_norm": float(np.linalg.norm(g)),
        "stop_reason": stop_reason,
    }
    return theta, info


def lbfgs_optimize(params: MlpParams, samples, config) -> tuple:
    """L-BFGS phase at the parameter-structure level; see lbfgs_minimize."""
    pts = np.asarray(samples.points, dtype=float)
    engine = MlpEngine(params.layer_sizes,
                       params.normalization.apply(pts[:, :2]), pts[:, 2])
    theta = pack_params(params)
    theta, info = lbfgs_minimize(engine, theta, config.lbfgs_iterations,
                                 config.lbfgs_tolerance, config.lbfgs_memory)
    return unpack_params(theta, params), info
