"""Small analytic test models."""

from __future__ import annotations

import numpy as np

from ..engine import Model
from ..phase import MassMetric, PhasePoint


class Harmonic(Model):
    """``V(q) = k q^T q / 2`` with an optional mass metric."""

    has_fg_term = True

    def __init__(self, k: float = 1.0, metric: MassMetric | None = None):
        self.k = float(k)
        self.metric = metric

    def potential(self, q):
        return 0.5 * self.k * float(np.sum(q * q))

    def force(self, q):
        return self.k * q

    def fg_term(self, q):
        g = self.force(q)
        u = g if self.metric is None else self.metric.apply_inverse(g)
        return 2.0 * self.k * u


class Quartic(Model):
    """``V(q) = lam * sum(q**4) / 4``, separable per coordinate."""

    has_fg_term = True

    def __init__(self, lam: float = 1.0, metric: MassMetric | None = None):
        self.lam = float(lam)
        self.metric = metric

    def potential(self, q):
        return 0.25 * self.lam * float(np.sum(q**4))

    def force(self, q):
        return self.lam * q**3

    def fg_term(self, q):
        g = self.force(q)
        u = g if self.metric is None else self.metric.apply_inverse(g)
        return 2.0 * 3.0 * self.lam * q**2 * u


class Pendulum(Model):
    """``V(q) = -cos q`` summed over coordinates."""

    has_fg_term = True
    metric = None

    def potential(self, q):
        return -float(np.sum(np.cos(q)))

    def force(self, q):
        return np.sin(q)

    def fg_term(self, q):
        return 2.0 * np.cos(q) * np.sin(q)


def point(q, p) -> PhasePoint:
    return PhasePoint(np.atleast_1d(np.asarray(q, float)), np.atleast_1d(np.asarray(p, float)))
