"""Two-flavour-free, single pseudofermion Schwinger model: compact U(1) gauge
field on an L x T torus with Wilson fermions.

Conventions
-----------
* Link angles ``theta[x, t, mu]``, ``mu = 0`` (space) and ``mu = 1`` (time);
  links ``U = exp(i theta)``.  Flattened storage is site-major (x, then t)
  and direction-minor.
* Plaquette phase
  ``P(n) = theta_0(n) + theta_1(n+0) - theta_0(n+1) - theta_1(n)``,
  gauge action ``S_G = beta * sum(1 - cos P)``.
* Wilson-Dirac operator with Pauli matrices as the 2D gamma matrices,

  ``(D psi)(n) = (2 + m0) psi(n)
  - 1/2 sum_mu [(1 - s_mu) U_mu(n) psi(n+mu) + (1 + s_mu) U_mu(n-mu)^* psi(n-mu)]``.

  Fermions are antiperiodic in time, periodic in space; gauge links are
  periodic in both directions.
* Pseudofermion action ``S_F = eta^H (D^H D)^{-1} eta``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..engine import Model
from ..phase import U1LatticeState

SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

M0_CRITICALISH = 0.352443


class CGError(RuntimeError):
    def __init__(self, msg, residual, iterations):
        super().__init__(f"{msg} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    ritz_min: float | None = None


# ---------------------------------------------------------------------------
# gauge part

def plaquette_phase(theta: np.ndarray) -> np.ndarray:
    """Phase of every plaquette, shape ``(L, T)``."""
    t0, t1 = theta[..., 0], theta[..., 1]
    return t0 + np.roll(t1, -1, axis=0) - np.roll(t0, -1, axis=1) - t1


def plaquette(theta: np.ndarray, n=None):
    """Complex plaquette ``exp(i P)`` at site ``n`` (or the full field)."""
    P = np.exp(1j * plaquette_phase(theta))
    return P if n is None else P[tuple(n)]


def mean_plaquette(theta: np.ndarray) -> float:
    return float(np.mean(np.cos(plaquette_phase(theta))))


def gauge_action(theta: np.ndarray, beta: float) -> float:
    return float(beta * np.sum(1.0 - np.cos(plaquette_phase(theta))))


def gauge_force(theta: np.ndarray, beta: float) -> np.ndarray:
    """``dS_G/dtheta`` per link."""
    s = np.sin(plaquette_phase(theta))
    g = np.empty_like(theta)
    g[..., 0] = beta * (s - np.roll(s, 1, axis=1))
    g[..., 1] = beta * (np.roll(s, 1, axis=0) - s)
    return g


def gauge_transform(theta: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """``theta_mu(n) -> theta_mu(n) + alpha(n) - alpha(n+mu)``."""
    out = theta.copy()
    out[..., 0] += alpha - np.roll(alpha, -1, axis=0)
    out[..., 1] += alpha - np.roll(alpha, -1, axis=1)
    return out


# ---------------------------------------------------------------------------
# fermion part

def boundary_phases(L: int, T: int, antiperiodic_time: bool = True) -> np.ndarray:
    bc = np.ones((L, T, 2))
    if antiperiodic_time:
        bc[:, T - 1, 1] = -1.0
    return bc


def _sigma_apply(mu: int, v: np.ndarray) -> np.ndarray:
    return np.einsum("ab,...b->...a", SIGMA[mu], v)


def dirac_apply(theta: np.ndarray, psi: np.ndarray, m0: float, bc=None, dagger: bool = False) -> np.ndarray:
    """Matrix-free ``D psi`` (or ``D^H psi``) for spinor fields of shape ``(L, T, 2)``."""
    L, T, _ = theta.shape
    bc = boundary_phases(L, T) if bc is None else bc
    U = np.exp(1j * theta) * bc
    out = (2.0 + m0) * psi
    sgn = -1.0 if dagger else 1.0
    for mu in range(2):
        Um = U[..., mu][..., None]
        fwd = Um * np.roll(psi, -1, axis=mu)
        bwd = np.roll(np.conj(Um) * psi, 1, axis=mu)
        s_fwd = _sigma_apply(mu, fwd)
        s_bwd = _sigma_apply(mu, bwd)
        out = out - 0.5 * ((fwd - sgn * s_fwd) + (bwd + sgn * s_bwd))
    return out


@lru_cache(maxsize=16)
def _dirac_pattern(L: int, T: int):
    """Index structure of D: per nonzero its row, column, constant
    coefficient, the flat link index feeding it (-1 for the diagonal) and
    whether the link enters conjugated."""
    V = L * T
    site = np.arange(V).reshape(L, T)
    n = np.arange(V)
    rows, cols, coef, link, conj = [np.arange(2 * V)], [np.arange(2 * V)], [np.ones(2 * V, complex)], \
        [np.full(2 * V, -1)], [np.zeros(2 * V, bool)]
    eye = np.eye(2)
    for mu in range(2):
        nb = np.roll(site, -1, axis=mu).ravel()
        for proj, is_bwd in ((eye - SIGMA[mu], False), (eye + SIGMA[mu], True)):
            for a in range(2):
                for b in range(2):
                    if proj[a, b] == 0:
                        continue
                    if is_bwd:
                        rows.append(2 * nb + a)
                        cols.append(2 * n + b)
                    else:
                        rows.append(2 * n + a)
                        cols.append(2 * nb + b)
                    coef.append(np.full(V, -0.5 * proj[a, b]))
                    link.append(2 * n + mu)
                    conj.append(np.full(V, is_bwd))
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(coef),
            np.concatenate(link), np.concatenate(conj))


def _dirac_values(theta, m0, bc):
    L, T, _ = theta.shape
    rows, cols, coef, link, conj = _dirac_pattern(L, T)
    U = (np.exp(1j * theta) * bc).ravel()
    Ul = U[np.maximum(link, 0)]
    Ul = np.where(conj, np.conj(Ul), Ul)
    vals = np.where(link < 0, 2.0 + m0, coef * Ul)
    return rows, cols, vals


def dirac_matrix(theta: np.ndarray, m0: float, bc=None) -> sp.csr_matrix:
    """Sparse ``D`` acting on flattened spinors (index ``2 * (x T + t) + spin``)."""
    L, T, _ = theta.shape
    bc = boundary_phases(L, T) if bc is None else bc
    rows, cols, vals = _dirac_values(theta, m0, bc)
    return sp.coo_matrix((vals, (rows, cols)), shape=(2 * L * T, 2 * L * T)).tocsr()


def dirac_dense(theta: np.ndarray, m0: float, bc=None) -> np.ndarray:
    L, T, _ = theta.shape
    bc = boundary_phases(L, T) if bc is None else bc
    rows, cols, vals = _dirac_values(theta, m0, bc)
    n = 2 * L * T
    flat = rows * n + cols
    re = np.bincount(flat, vals.real, n * n)
    im = np.bincount(flat, vals.imag, n * n)
    return (re + 1j * im).reshape(n, n)


def cg_solve(apply_op, rhs: np.ndarray, tol: float = 1e-10, maxiter: int = 10000,
             x0=None, track_ritz: bool = False) -> CGResult:
    """Conjugate gradients for a Hermitian positive definite operator.

    Converged when ``|A x - b| / |b| < tol``; the final residual is
    recomputed from one extra application of the operator.
    """
    b = np.asarray(rhs)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0, None)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=b.dtype)
    r = b - apply_op(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = np.vdot(r, r).real
    alphas, betas = [], []
    it = 0
    target = (tol * bnorm) ** 2
    while rr > target and it < maxiter:
        Ap = apply_op(p)
        pAp = np.vdot(p, Ap).real
        if pAp <= 0:
            raise CGError("operator is not positive definite", np.sqrt(rr) / bnorm, it)
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = np.vdot(r, r).real
        beta = rr_new / rr
        alphas.append(alpha)
        betas.append(beta)
        p = r + beta * p
        rr = rr_new
        it += 1
    true_res = np.linalg.norm(b - apply_op(x)) / bnorm
    if true_res >= tol:
        raise CGError("CG did not converge", true_res, it)
    ritz = None
    if track_ritz and alphas:
        k = len(alphas)
        diag = np.empty(k)
        off = np.empty(max(k - 1, 0))
        diag[0] = 1.0 / alphas[0]
        for j in range(1, k):
            diag[j] = 1.0 / alphas[j] + betas[j - 1] / alphas[j - 1]
            off[j - 1] = np.sqrt(betas[j - 1]) / alphas[j - 1]
        from scipy.linalg import eigvalsh_tridiagonal
        ritz = float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])
    return CGResult(x, it, float(true_res), ritz)


@dataclass
class FermionSolve:
    phi: np.ndarray   # (D^H D)^{-1} eta
    psi: np.ndarray   # D phi
    action: float


class SchwingerModel(Model):
    """Gauge + pseudofermion potential for HMC on the link angles.

    ``eta`` is the pseudofermion field (shape ``(L, T, 2)`` complex) held
    fixed during molecular dynamics; ``None`` gives the pure gauge theory.
    ``solver`` is ``"cg"`` (conjugate gradients on the sparse normal
    operator) or ``"lu"`` (LU factorisation of D, exact to rounding; dense
    up to ``DENSE_LIMIT`` unknowns, sparse beyond).
    """

    metric = None
    has_fg_term = False
    DENSE_LIMIT = 2048

    def __init__(self, L: int, T: int, beta: float = 1.0, m0: float = M0_CRITICALISH,
                 cg_tol: float = 1e-10, action_tol: float = 1e-12, cg_maxiter: int = 10000,
                 solver: str = "cg", fermions: bool = True):
        if cg_tol <= 0 or action_tol <= 0:
            raise ValueError("CG tolerances must be positive")
        if solver not in ("cg", "lu"):
            raise ValueError(f"unknown solver {solver!r}")
        self.L, self.T = int(L), int(T)
        self.beta, self.m0 = float(beta), float(m0)
        self.cg_tol, self.action_tol, self.cg_maxiter = cg_tol, action_tol, cg_maxiter
        self.solver = solver
        self.fermions = fermions
        self.bc = boundary_phases(self.L, self.T)
        self.eta = None
        self.last_cg_iterations = 0

    @property
    def volume(self) -> int:
        return self.L * self.T

    @property
    def shape(self) -> tuple:
        return (self.L, self.T, 2)

    def cold_start(self) -> np.ndarray:
        return np.zeros(self.shape)

    def hot_start(self, rng) -> np.ndarray:
        return rng.uniform(-np.pi, np.pi, self.shape)

    def state(self, theta, pi=None) -> U1LatticeState:
        theta = np.asarray(theta, float)
        return U1LatticeState(theta, np.zeros_like(theta) if pi is None else np.asarray(pi, float))

    # fermion linear algebra ------------------------------------------------
    def D(self, theta) -> sp.csr_matrix:
        return dirac_matrix(theta, self.m0, self.bc)

    def dirac(self, theta, psi, dagger=False):
        return dirac_apply(theta, psi, self.m0, self.bc, dagger)

    def solve_normal(self, theta, rhs, tol=None) -> FermionSolve:
        """``phi = (D^H D)^{-1} rhs``, ``psi = D phi`` and ``rhs^H phi``."""
        b = np.asarray(rhs, complex).ravel()
        if self.solver == "lu":
            if b.size <= self.DENSE_LIMIT:
                lu = sla.lu_factor(dirac_dense(theta, self.m0, self.bc), check_finite=False)
                psi = sla.lu_solve(lu, b, trans=2, check_finite=False)
                phi = sla.lu_solve(lu, psi, check_finite=False)
            else:
                lu = splu(self.D(theta).tocsc())
                psi = lu.solve(b, trans="H")
                phi = lu.solve(psi)
            self.last_cg_iterations = 0
        else:
            D = self.D(theta)
            Dh = D.conj().T.tocsr()
            res = cg_solve(lambda v: Dh @ (D @ v), b, tol or self.cg_tol, self.cg_maxiter)
            phi = res.x
            psi = D @ phi
            self.last_cg_iterations = res.iterations
        action = float(np.vdot(b, phi).real)
        return FermionSolve(phi.reshape(self.shape), psi.reshape(self.shape), action)

    def heatbath(self, theta, rng) -> np.ndarray:
        """``eta = D^H xi`` with complex Gaussian ``xi`` (each real part variance 1/2)."""
        xi = (rng.standard_normal(self.shape) + 1j * rng.standard_normal(self.shape)) / np.sqrt(2.0)
        return self.dirac(theta, xi, dagger=True)

    def fermion_action(self, theta, eta=None, tol=None) -> float:
        eta = self.eta if eta is None else eta
        if eta is None:
            return 0.0
        return self.solve_normal(theta, eta, tol or self.action_tol).action

    def fermion_force(self, theta, eta=None, tol=None) -> np.ndarray:
        """``dS_F/dtheta = -2 Re[psi^H (dD/dtheta) phi]`` per link."""
        eta = self.eta if eta is None else eta
        if eta is None:
            return np.zeros(self.shape)
        sol = self.solve_normal(theta, eta, tol or self.cg_tol)
        phi, psi = sol.phi, sol.psi
        U = np.exp(1j * theta) * self.bc
        out = np.empty(self.shape)
        for mu in range(2):
            phi_f = np.roll(phi, -1, axis=mu)
            psi_f = np.roll(psi, -1, axis=mu)
            # psi(n)^H (1 - s) phi(n+mu) and psi(n+mu)^H (1 + s) phi(n)
            a = np.sum(np.conj(psi) * (phi_f - _sigma_apply(mu, phi_f)), axis=-1)
            b = np.sum(np.conj(psi_f) * (phi + _sigma_apply(mu, phi)), axis=-1)
            Um = U[..., mu]
            out[..., mu] = np.real(1j * Um * a - 1j * np.conj(Um) * b)
        return out

    # model contract --------------------------------------------------------
    def potential(self, q) -> float:
        s = gauge_action(q, self.beta)
        if self.fermions and self.eta is not None:
            s += self.fermion_action(q)
        return s

    def force(self, q) -> np.ndarray:
        g = gauge_force(q, self.beta)
        if self.fermions and self.eta is not None:
            g = g + self.fermion_force(q)
        return g


# ---------------------------------------------------------------------------
# gauge-field I/O

_HEADER_KEYS = ("L", "T", "beta", "m0", "seed", "traj")


def save_gauge_csv(path, theta, beta, m0, seed, traj) -> None:
    """Plain-text dump: one header row of metadata, then ``x, t, mu, theta`` rows."""
    L, T, _ = theta.shape
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{k}={v!r}" for k, v in zip(_HEADER_KEYS, (L, T, float(beta), float(m0), seed, traj))])
        w.writerow(["x", "t", "mu", "theta"])
        for x in range(L):
            for t in range(T):
                for mu in range(2):
                    w.writerow([x, t, mu, repr(float(theta[x, t, mu]))])


def _parse_meta(cells):
    meta = {}
    for cell in cells:
        k, _, v = cell.partition("=")
        meta[k] = v
    out = {"L": int(meta["L"]), "T": int(meta["T"]), "beta": float(meta["beta"]),
           "m0": float(meta["m0"]), "traj": int(meta["traj"])}
    out["seed"] = None if meta["seed"] == "None" else int(meta["seed"])
    return out


def load_gauge_csv(path):
    """Returns ``(theta, meta)``."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    meta = _parse_meta(rows[0])
    theta = np.empty((meta["L"], meta["T"], 2))
    for x, t, mu, val in rows[2:]:
        theta[int(x), int(t), int(mu)] = float(val)
    return theta, meta


def save_gauge_npz(path, theta, beta, m0, seed, traj) -> None:
    np.savez(Path(path), theta=theta, L=theta.shape[0], T=theta.shape[1], beta=beta, m0=m0,
             seed=-1 if seed is None else seed, traj=traj)


def load_gauge_npz(path):
    with np.load(Path(path)) as z:
        seed = int(z["seed"])
        meta = {"L": int(z["L"]), "T": int(z["T"]), "beta": float(z["beta"]), "m0": float(z["m0"]),
                "seed": None if seed == -1 else seed, "traj": int(z["traj"])}
        return z["theta"].copy(), meta
