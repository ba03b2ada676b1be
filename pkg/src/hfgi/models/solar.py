"""Outer solar system: sun, four outer planets and Pluto under Newtonian gravity.

Units are astronomical units, days and solar masses.  The sun's mass is
augmented by the inner planets.  Initial data correspond to 1994-09-05
00:00 as tabulated in Hairer, Lubich & Wanner, *Geometric Numerical
Integration*, section I.2.4.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..engine import Model
from ..phase import MassMetric, PhasePoint

G_SOLAR = 2.95912208286e-4

BODIES = ("sun", "jupiter", "saturn", "uranus", "neptune", "pluto")

MASSES = np.array([
    1.00000597682,
    0.000954786104043,
    0.000285583733151,
    0.0000437273164546,
    0.0000517759138449,
    1.0 / 1.3e8,
])

POSITIONS = np.array([
    [0.0, 0.0, 0.0],
    [-3.5023653, -3.8169847, -1.5507963],
    [9.0755314, -3.0458353, -1.6483708],
    [8.3101420, -16.2901086, -7.2521278],
    [11.4707666, -25.7294829, -10.8169456],
    [-15.5387357, -25.2225594, -3.1902382],
])

VELOCITIES = np.array([
    [0.0, 0.0, 0.0],
    [0.00565429, -0.00412490, -0.00190589],
    [0.00168318, 0.00483525, 0.00192462],
    [0.00354178, 0.00137102, 0.00055029],
    [0.00288930, 0.00114527, 0.00039677],
    [0.00276725, -0.00170702, -0.00136504],
])


class NBody(Model):
    """Point masses with pairwise potential ``-G m_i m_j / |q_i - q_j|``.

    Configurations and momenta are ``(n, 3)`` arrays.
    """

    has_fg_term = True

    def __init__(self, masses, G: float = G_SOLAR, names=None):
        self.masses = np.asarray(masses, float)
        if np.any(self.masses <= 0):
            raise ValueError("masses must be positive")
        self.G = float(G)
        self.n = len(self.masses)
        self.names = tuple(names) if names is not None else tuple(f"body{i}" for i in range(self.n))
        self.metric = MassMetric.diagonal(np.repeat(self.masses, 3))
        self._mm = self.G * np.outer(self.masses, self.masses)
        self._iu = np.triu_indices(self.n, 1)

    def _pairs(self, q):
        d = q[:, None, :] - q[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", d, d)
        off = ~np.eye(self.n, dtype=bool)
        if np.any(r2[off] == 0.0):
            raise ValueError("coincident bodies: potential is singular")
        np.fill_diagonal(r2, np.inf)
        return d, r2

    def potential(self, q):
        q = np.asarray(q, float).reshape(self.n, 3)
        _, r2 = self._pairs(q)
        inv_r = 1.0 / np.sqrt(r2)
        return -float(np.sum((self._mm * inv_r)[self._iu]))

    def force(self, q):
        q = np.asarray(q, float).reshape(self.n, 3)
        d, r2 = self._pairs(q)
        w = self._mm / (r2 * np.sqrt(r2))
        return np.einsum("ij,ijk->ik", w, d)

    def fg_term(self, q):
        q = np.asarray(q, float).reshape(self.n, 3)
        d, r2 = self._pairs(q)
        u = self.force(q) / self.masses[:, None]
        inv_r3 = 1.0 / (r2 * np.sqrt(r2))
        du = u[:, None, :] - u[None, :, :]
        proj = np.einsum("ijk,ijk->ij", d, du)
        hu = self._mm[:, :, None] * (du * inv_r3[:, :, None]
                                     - 3.0 * d * (proj * inv_r3 / r2)[:, :, None])
        return 2.0 * hu.sum(axis=1)

    def total_momentum(self, state: PhasePoint) -> np.ndarray:
        return np.asarray(state.p).reshape(self.n, 3).sum(axis=0)

    def state(self, positions, velocities) -> PhasePoint:
        q = np.array(positions, float).reshape(self.n, 3)
        p = self.masses[:, None] * np.array(velocities, float).reshape(self.n, 3)
        return PhasePoint(q, p)


def default_initial_data():
    """``(model, state)`` for the outer solar system at the reference epoch."""
    model = NBody(MASSES, G_SOLAR, BODIES)
    return model, model.state(POSITIONS, VELOCITIES)


def load_csv(path, G: float = G_SOLAR):
    """Read initial data with columns ``body, mass, x, y, z, vx, vy, vz``."""
    names, masses, pos, vel = [], [], [], []
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            names.append(row["body"])
            masses.append(float(row["mass"]))
            pos.append([float(row[k]) for k in ("x", "y", "z")])
            vel.append([float(row[k]) for k in ("vx", "vy", "vz")])
    model = NBody(masses, G, names)
    return model, model.state(pos, vel)


def save_csv(path, model: NBody, state: PhasePoint) -> None:
    q = np.asarray(state.q).reshape(model.n, 3)
    v = np.asarray(state.p).reshape(model.n, 3) / model.masses[:, None]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["body", "mass", "x", "y", "z", "vx", "vy", "vz"])
        for i in range(model.n):
            w.writerow([model.names[i], repr(float(model.masses[i]))]
                       + [repr(float(x)) for x in q[i]] + [repr(float(x)) for x in v[i]])
