"""Adam with decoupled weight decay, plus the finite-difference gradcheck."""

from __future__ import annotations

import numpy as np

from .engine import Tensor, backward, no_grad
from .errors import DimensionError


class Adam:
    """Standard Adam moments with decay applied directly to the weights
    (decoupled from the moment estimates). Gradients are left untouched by
    ``step``; the caller zeroes them."""

    def __init__(
        self,
        params: list[tuple[str, Tensor]],
        lr: float = 0.001,
        weight_decay: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {name: np.zeros_like(t.data) for name, t in self.params}
        self.v = {name: np.zeros_like(t.data) for name, t in self.params}

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, p in self.params:
            if p.grad is None:
                continue
            if p.grad.shape != p.data.shape:
                raise DimensionError(f"gradient shape mismatch for '{name}'")
            m = self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * p.grad
            v = self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * (p.grad * p.grad)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.data = p.data - self.lr * update
            if self.weight_decay:
                p.data = p.data - self.lr * self.weight_decay * p.data


def gradcheck(build_loss, params: list[tuple[str, Tensor]], h: float = 1e-5,
              tol: float = 1e-4) -> tuple[bool, float]:
    """Compare backward() gradients against central finite differences.

    ``build_loss`` must rebuild the loss from the current parameter values on
    every call. The error measure per element is
    |analytic - fd| / max(1, |analytic|, |fd|), i.e. relative for large
    gradients and absolute below 1. Returns (all_ok, worst_error).
    """
    for _, p in params:
        p.zero_grad()
    loss = build_loss()
    backward(loss)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params}

    worst = 0.0
    with no_grad():
        for name, p in params:
            flat = p.data.ravel()
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + h
                up = build_loss().item()
                flat[k] = orig - h
                down = build_loss().item()
                flat[k] = orig
                fd = (up - down) / (2.0 * h)
                a = analytic[name].ravel()[k]
                err = abs(a - fd) / max(1.0, abs(a), abs(fd))
                worst = max(worst, err)
    for _, p in params:
        p.zero_grad()
    return worst < tol, worst
