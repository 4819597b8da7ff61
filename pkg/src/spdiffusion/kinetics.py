"""Intracellular reaction kinetics for compartments with active chemistry.

A kinetics object maps a state ``w`` of shape ``(..., K)`` to rates of the
same shape, and provides the Jacobian of shape ``(..., K, K)``.  Species
``0`` is the one exchanged with the bulk.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Kinetics:
    name: str
    K: int
    f: Callable
    jac: Callable

    def __call__(self, w):
        return self.f(np.asarray(w, dtype=float))


def linear_kinetics(lam=1.0, b=0.0) -> Kinetics:
    """Single species ``f(w) = -lam w + b``."""

    def f(w):
        return -lam * w + b

    def jac(w):
        return np.full(np.shape(w) + (1,), -lam, dtype=float)

    return Kinetics("linear", 1, f, jac)


def selkov_kinetics(a=0.1, b=0.5, scale=1.0) -> Kinetics:
    """Sel'kov glycolysis model.

    ``dx = -x + a y + x^2 y``, ``dy = b - a y - x^2 y``; the unique fixed
    point is ``x = b``, ``y = b/(a + b^2)``.  ``scale`` multiplies both rates
    (for instance a compartment volume).
    """

    def f(w):
        x, y = w[..., 0], w[..., 1]
        x2y = x * x * y
        return scale * np.stack([-x + a * y + x2y, b - a * y - x2y], axis=-1)

    def jac(w):
        x, y = w[..., 0], w[..., 1]
        J = np.empty(np.shape(w)[:-1] + (2, 2))
        J[..., 0, 0] = -1.0 + 2.0 * x * y
        J[..., 0, 1] = a + x * x
        J[..., 1, 0] = -2.0 * x * y
        J[..., 1, 1] = -a - x * x
        return scale * J

    return Kinetics("selkov", 2, f, jac)


def selkov_fixed_point(a, b):
    return np.array([b, b / (a + b * b)])


REGISTRY = {
    "linear": linear_kinetics,
    "selkov": selkov_kinetics,
}


def make_kinetics(name: str, **params) -> Kinetics:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown kinetics {name!r}; known: {sorted(REGISTRY)}") from None
    return factory(**params)
