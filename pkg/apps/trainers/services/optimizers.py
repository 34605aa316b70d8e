"""
First-order optimizers over dictionaries of numpy parameter arrays.

Each step is a pure function (params, grads, state, lr) -> (params, state);
inputs are never modified in place.
"""
from typing import Any, Callable

import numpy as np

Params = dict[str, np.ndarray]
OptimizerState = dict[str, Any]
StepFn = Callable[[Params, Params, OptimizerState, float], tuple[Params, OptimizerState]]

MOMENTUM = 0.9
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def sgd_step(params: Params, grads: Params, state: OptimizerState, lr: float):
    """w <- w - lr * g"""
    return {name: params[name] - lr * grads[name] for name in params}, state


def momentum_step(params: Params, grads: Params, state: OptimizerState, lr: float):
    """Heavy-ball: v <- mu * v + g, w <- w - lr * v"""
    velocity = state.get("velocity", {})
    new_velocity = {
        name: MOMENTUM * velocity.get(name, np.zeros_like(params[name])) + grads[name]
        for name in params
    }
    new_params = {name: params[name] - lr * new_velocity[name] for name in params}
    return new_params, {"velocity": new_velocity}


def adam_step(params: Params, grads: Params, state: OptimizerState, lr: float):
    """Adam with bias-corrected first and second moments."""
    t = state.get("t", 0) + 1
    m_prev = state.get("m", {})
    v_prev = state.get("v", {})
    m, v, new_params = {}, {}, {}
    for name in params:
        g = grads[name]
        m[name] = ADAM_BETA1 * m_prev.get(name, np.zeros_like(g)) + (1 - ADAM_BETA1) * g
        v[name] = ADAM_BETA2 * v_prev.get(name, np.zeros_like(g)) + (1 - ADAM_BETA2) * g * g
        m_hat = m[name] / (1 - ADAM_BETA1**t)
        v_hat = v[name] / (1 - ADAM_BETA2**t)
        new_params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return new_params, {"t": t, "m": m, "v": v}


OPTIMIZERS: dict[str, StepFn] = {
    "sgd": sgd_step,
    "momentum": momentum_step,
    "adam": adam_step,
}
