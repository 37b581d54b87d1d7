"""
Adam optimizer over named parameter arrays.

    m = β1 m + (1 - β1) g
    v = β2 v + (1 - β2) g²
    p -= lr · (m / (1 - β1^t)) / (sqrt(v / (1 - β2^t)) + ε)

Parameters are updated in place; the state is exclusively owned by the
training loop.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from .constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON
from .validation import ContractViolation

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Mapping[str, np.ndarray], **kwargs) -> "OptimizerState":
        state = cls(**kwargs)
        for name, value in params.items():
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        return state


def adam_step(params: Dict[str, np.ndarray], grads: Mapping[str, np.ndarray], state: OptimizerState,
              lr: float) -> Tuple[Dict[str, np.ndarray], OptimizerState]:
    """
    One bias-corrected Adam update of every named parameter.

    A parameter without a gradient entry is treated as having zero gradient.

    Example:
        >>> p = {"w": np.array([1.0])}
        >>> adam_step(p, {"w": np.array([0.5])}, OptimizerState.for_params(p), lr=0.1)
        >>> p["w"]  # 1 - 0.1 * 0.5 / (0.5 + 1e-8)
    """
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step

    for name, value in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(value)
        if g.shape != value.shape:
            raise ContractViolation(f"gradient shape {g.shape} does not match parameter {value.shape}",
                                    field=name)
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        value -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)

    return params, state
