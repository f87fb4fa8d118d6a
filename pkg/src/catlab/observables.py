"""
The fixed observable battery with the closed-form data the checks need:
Lebesgue mean m(phi), diagonal mean int_0^1 phi(s, s) ds and the C^1 norm
||phi||_{C^1} = sup|phi| + sup|d_x phi| + sup|d_y phi| on the closed square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Observable:
    name: str
    f: Callable
    mean: float
    diag: float
    c1: float
    periodic: bool = False

    def __call__(self, x, y):
        return self.f(x, y)

    @property
    def nu_tilde(self) -> float:
        return self.mean - self.diag


def _const(x, y):
    return np.ones_like(x) if isinstance(x, np.ndarray) else 1.0


BATTERY = {
    "1": Observable("1", _const, 1.0, 1.0, 1.0, True),
    "x": Observable("x", lambda x, y: x + 0 * y, 0.5, 0.5, 2.0),
    "y": Observable("y", lambda x, y: y + 0 * x, 0.5, 0.5, 2.0),
    "xy": Observable("xy", lambda x, y: x * y, 0.25, 1 / 3, 3.0),
    "cos2pix": Observable("cos2pix", lambda x, y: np.cos(TWO_PI * x) + 0 * y, 0.0, 0.0, 1 + TWO_PI, True),
    "sin2piy": Observable("sin2piy", lambda x, y: np.sin(TWO_PI * y) + 0 * x, 0.0, 0.0, 1 + TWO_PI, True),
    "cos2pix_sin2piy": Observable(
        "cos2pix_sin2piy", lambda x, y: np.cos(TWO_PI * x) * np.sin(TWO_PI * y), 0.0, 0.0, 1 + 2 * TWO_PI, True
    ),
}


def get(name: str) -> Observable:
    try:
        return BATTERY[name]
    except KeyError:
        raise KeyError(f"unknown observable {name!r}; choose from {sorted(BATTERY)}") from None


def bump_off_diagonal(x, y):
    """C^1 bump vanishing within distance 0.15 of the diagonal y = x (and near the corners)."""
    d = np.abs(y - x) / math.sqrt(2)
    r = np.clip((d - 0.15) / 0.2, 0, 1)
    return r * r * (3 - 2 * r) * np.sin(math.pi * x) ** 2 * np.sin(math.pi * y) ** 2
