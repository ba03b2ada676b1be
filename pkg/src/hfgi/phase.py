"""Phase spaces and the primitive flows every splitting stage is built from.

Two phase spaces are supported:

* Euclidean ``(q, p)`` with kinetic energy ``T(p) = p^T M^{-1} p / 2`` for a
  constant symmetric positive definite mass matrix ``M``.
* Periodic U(1) lattice links ``Q = exp(i theta)`` with unit metric.

Both use the canonical sign convention ``dq/dt = M^{-1} p``,
``dp/dt = -grad V(q)``.  The right-invariant convention ``e_i(Q) = -T_i Q``
negates both velocity and force; it is conjugate to the canonical one under
momentum flip, so symmetric schemes yield identical trajectories.  For U(1)
the canonical form is just the Euclidean one with ``M = Id``, which is what
lets a single drift/kick pair serve both spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MassMetric",
    "PhasePoint",
    "U1LatticeState",
    "kinetic_energy",
    "drift",
    "kick",
    "flip",
    "velocity",
]


class MassMetric:
    """Constant SPD mass matrix, stored as a diagonal or a dense matrix.

    The diagonal kind broadcasts over the trailing shape of the momentum, so
    ``MassMetric.diagonal(np.repeat(m, 3))`` works for ``(n, 3)`` N-body
    arrays flattened or not, as long as sizes agree.
    """

    def __init__(self, entries, kind: str = "diagonal"):
        entries = np.asarray(entries, dtype=float)
        if kind == "diagonal":
            entries = entries.reshape(-1)
            if not np.all(entries > 0) or not np.all(np.isfinite(entries)):
                raise ValueError("diagonal mass entries must be positive and finite")
            self._inv = 1.0 / entries
        elif kind == "dense":
            if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
                raise ValueError("dense mass matrix must be square")
            if not np.allclose(entries, entries.T):
                raise ValueError("mass matrix must be symmetric")
            try:
                np.linalg.cholesky(entries)
            except np.linalg.LinAlgError as exc:
                raise ValueError("mass matrix must be positive definite") from exc
            self._inv = np.linalg.inv(entries)
        else:
            raise ValueError(f"unknown metric kind {kind!r}")
        self.kind = kind
        self.entries = entries

    @classmethod
    def diagonal(cls, masses) -> "MassMetric":
        return cls(masses, "diagonal")

    @classmethod
    def dense(cls, matrix) -> "MassMetric":
        return cls(matrix, "dense")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def apply_inverse(self, p: np.ndarray) -> np.ndarray:
        flat = p.reshape(-1)
        if flat.shape[0] != self.dim:
            raise ValueError(
                f"dimension mismatch: metric has {self.dim}, vector has {flat.shape[0]}"
            )
        if self.kind == "diagonal":
            return (self._inv * flat).reshape(p.shape)
        return (self._inv @ flat).reshape(p.shape)

    def __repr__(self) -> str:
        return f"MassMetric(kind={self.kind!r}, dim={self.dim})"


def velocity(p: np.ndarray, metric: MassMetric | None) -> np.ndarray:
    """``M^{-1} p``; ``metric=None`` means the unit metric."""
    if metric is None:
        return p
    return metric.apply_inverse(p)


@dataclass(frozen=True)
class PhasePoint:
    """Configuration ``q`` and conjugate momentum ``p`` of equal shape.

    Arrays are treated as immutable: every flow returns a new point and
    leaves untouched components as the *same* array object.  The splitting
    engine relies on that identity to reuse forces between stages.
    """

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if np.shape(self.q) != np.shape(self.p):
            raise ValueError(
                f"q and p shapes differ: {np.shape(self.q)} vs {np.shape(self.p)}"
            )

    def replace(self, q=None, p=None) -> "PhasePoint":
        return type(self)(self.q if q is None else q, self.p if p is None else p)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.p), np.ravel(self.q)])


@dataclass(frozen=True)
class U1LatticeState(PhasePoint):
    """Link angles ``theta[x, t, mu]`` and momenta ``pi[x, t, mu]`` on an L x T torus.

    Angles accumulate without rewrapping during integration; use
    :meth:`wrapped_theta` for reporting only.
    """

    dims: tuple = field(default=None, compare=False)

    def __post_init__(self):
        super().__post_init__()
        shape = np.shape(self.q)
        if len(shape) != 3 or shape[2] != 2:
            raise ValueError(f"U(1) lattice arrays must have shape (L, T, 2), got {shape}")
        object.__setattr__(self, "dims", (shape[0], shape[1]))

    @property
    def theta(self) -> np.ndarray:
        return self.q

    @property
    def pi(self) -> np.ndarray:
        return self.p

    def replace(self, q=None, p=None) -> "U1LatticeState":
        return U1LatticeState(self.q if q is None else q, self.p if p is None else p)

    def links(self) -> np.ndarray:
        return np.exp(1j * self.q)

    def wrapped_theta(self) -> np.ndarray:
        return (self.q + np.pi) % (2 * np.pi) - np.pi


def kinetic_energy(state: PhasePoint, metric: MassMetric | None = None) -> float:
    p = state.p
    return 0.5 * float(np.vdot(np.ravel(p), np.ravel(velocity(p, metric))).real)


def drift(state: PhasePoint, metric: MassMetric | None, s: float) -> PhasePoint:
    """Exact kinetic flow for time ``s``: ``q <- q + s M^{-1} p``."""
    if s == 0:
        return state
    return state.replace(q=state.q + s * velocity(state.p, metric))


def kick(state: PhasePoint, grad: np.ndarray, s: float) -> PhasePoint:
    """Exact potential flow for time ``s`` given ``grad = grad V(q)``: ``p <- p - s grad``."""
    if np.shape(grad) != np.shape(state.p):
        raise ValueError(f"gradient shape {np.shape(grad)} does not match p {np.shape(state.p)}")
    if s == 0:
        return state
    return state.replace(p=state.p - s * grad)


def flip(state: PhasePoint) -> PhasePoint:
    """Momentum reversal ``(p, q) -> (-p, q)``."""
    return state.replace(p=-state.p)
