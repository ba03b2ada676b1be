"""Hybrid Monte Carlo on top of the splitting engine, and the acceptance/cost
statistics used to compare integrators."""

from __future__ import annotations

import csv
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc, erfcinv

from .engine import EvalCounter, StepMode, integrate
from .phase import PhasePoint, U1LatticeState, kinetic_energy
from .schemes import count_forces, get_scheme

__all__ = [
    "HmcConfig",
    "TrajectoryStats",
    "derive_rng",
    "draw_momenta",
    "run_trajectory",
    "run_chain",
    "acceptance_erfc",
    "optimal_acceptance",
    "sigma2_for_acceptance",
    "nf_per_unit_at_target",
    "ScanFit",
    "cost_metric",
    "jackknife_blocks",
    "write_chain_log",
    "equilibrium_samples",
    "delta_h_scan",
    "scaling_exponent",
]


@dataclass(frozen=True)
class HmcConfig:
    tau: float = 1.0
    n_steps: int = 20
    scheme: str = "BAB"
    mode: str = "hessian_free"
    n_traj: int = 100
    n_therm: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        StepMode(self.mode)

    @property
    def h(self) -> float:
        return self.tau / self.n_steps

    @property
    def therm(self) -> int:
        return self.n_traj // 10 if self.n_therm is None else self.n_therm


def derive_rng(master_seed: int, scheme: str, n_steps: int) -> np.random.Generator:
    """Independent, reproducible stream per (seed, scheme, N) grid point."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, zlib.crc32(scheme.encode()), int(n_steps)])
    return np.random.Generator(np.random.Philox(ss))


def draw_momenta(model, shape, rng) -> np.ndarray:
    """Gaussian momenta with covariance ``M``."""
    z = rng.standard_normal(shape)
    metric = getattr(model, "metric", None)
    if metric is None:
        return z
    if metric.kind == "diagonal":
        return (np.sqrt(metric.entries) * z.reshape(-1)).reshape(shape)
    return (np.linalg.cholesky(metric.entries) @ z.reshape(-1)).reshape(shape)


def _refresh_auxiliary(model, q, rng) -> None:
    if getattr(model, "fermions", False) and hasattr(model, "heatbath"):
        model.eta = model.heatbath(q, rng)


def run_trajectory(model, config: HmcConfig, state: PhasePoint, rng, scheme=None):
    """One HMC update.

    Returns ``(state, dH, accepted, counter)``; on rejection the returned
    configuration is the input one (momenta are discarded either way).
    """
    scheme = get_scheme(config.scheme) if scheme is None else scheme
    q0 = state.q
    p0 = draw_momenta(model, np.shape(q0), rng)
    _refresh_auxiliary(model, q0, rng)
    start = state.replace(p=p0)
    H0 = kinetic_energy(start, model.metric) + model.potential(q0)
    counter = EvalCounter()
    end, counter = integrate(scheme, model, start, config.h, config.n_steps, config.mode, counter)
    H1 = kinetic_energy(end, model.metric) + model.potential(end.q)
    dH = float(H1 - H0)
    if not np.isfinite(dH):
        accepted = False
    else:
        accepted = bool(rng.uniform() < np.exp(min(0.0, -dH)))
    new = end if accepted else start
    return new.replace(p=np.zeros_like(p0)), dH, accepted, counter


@dataclass
class TrajectoryStats:
    scheme: str
    n_steps: int
    tau: float
    delta_H: np.ndarray
    accepted: np.ndarray
    force_evals: np.ndarray
    plaquette: np.ndarray
    seconds: np.ndarray
    n_therm: int = 0
    final_state: PhasePoint | None = field(default=None, repr=False)

    def _measured(self, x):
        return np.asarray(x)[self.n_therm:]

    @property
    def sigma2(self) -> float:
        return float(np.var(self._measured(self.delta_H), ddof=1))

    @property
    def mean_dH(self) -> float:
        return float(np.mean(self._measured(self.delta_H)))

    @property
    def acceptance(self) -> float:
        return float(np.mean(self._measured(self.accepted)))

    def errors(self, block: int = 10) -> dict:
        """Blocked-jackknife errors of acceptance, sigma2, <exp(-dH)> and plaquette."""
        dH = self._measured(self.delta_H)
        acc = self._measured(self.accepted).astype(float)
        plaq = self._measured(self.plaquette)
        ex = np.exp(-dH)
        return {
            "acceptance": jackknife_blocks(acc, np.mean, block),
            "sigma2": jackknife_blocks(dH, lambda x: np.var(x, ddof=1), block),
            "exp_minus_dH": jackknife_blocks(ex, np.mean, block),
            "plaquette": jackknife_blocks(plaq, np.mean, block),
            "mean_dH": jackknife_blocks(dH, np.mean, block),
        }

    @property
    def acceptance_model(self) -> float:
        return acceptance_erfc(self.sigma2)

    def summary(self, block: int = 10) -> dict:
        err = self.errors(block)
        return {
            "scheme": self.scheme,
            "N": self.n_steps,
            "tau": self.tau,
            "n_meas": len(self.delta_H) - self.n_therm,
            "sigma2": err["sigma2"][0],
            "sigma2_err": err["sigma2"][1],
            "acc": err["acceptance"][0],
            "acc_err": err["acceptance"][1],
            "acc_erfc": self.acceptance_model,
            "exp_minus_dH": err["exp_minus_dH"][0],
            "exp_minus_dH_err": err["exp_minus_dH"][1],
            "plaquette": err["plaquette"][0],
            "plaquette_err": err["plaquette"][1],
            "force_evals_per_traj": float(np.mean(self.force_evals)),
        }


def jackknife_blocks(x, estimator, block: int = 10):
    """Estimate and jackknife error of ``estimator(x)`` over blocks of at least
    ``block`` consecutive samples (tail samples that do not fill a block are
    dropped from the resampling)."""
    x = np.asarray(x, float)
    block = max(int(block), 10)
    n_blocks = len(x) // block
    full = float(estimator(x))
    if n_blocks < 2:
        return full, float("nan")
    xs = x[: n_blocks * block].reshape(n_blocks, block)
    est = np.array([estimator(np.delete(xs, i, axis=0).ravel()) for i in range(n_blocks)])
    err = np.sqrt((n_blocks - 1) / n_blocks * np.sum((est - est.mean()) ** 2))
    return full, float(err)


def _observable(model, q) -> float:
    if hasattr(model, "L") and np.ndim(q) == 3:
        from .models.schwinger import mean_plaquette
        return mean_plaquette(q)
    return float("nan")


def run_chain(model, config: HmcConfig, state: PhasePoint, rng=None, progress=None) -> TrajectoryStats:
    """``config.n_traj`` trajectories from ``state``; the first ``config.therm``
    are kept in the log but excluded from the statistics."""
    scheme = get_scheme(config.scheme)
    rng = derive_rng(config.seed, config.scheme, config.n_steps) if rng is None else rng
    n = config.n_traj
    dH = np.empty(n)
    acc = np.empty(n, bool)
    fe = np.empty(n, int)
    plaq = np.empty(n)
    secs = np.empty(n)
    for k in range(n):
        t0 = time.perf_counter()
        state, dH[k], acc[k], counter = run_trajectory(model, config, state, rng, scheme)
        secs[k] = time.perf_counter() - t0
        fe[k] = counter.work
        plaq[k] = _observable(model, state.q)
        if progress is not None:
            progress(k, dH[k], acc[k])
    return TrajectoryStats(config.scheme, config.n_steps, config.tau, dH, acc, fe, plaq, secs,
                           min(config.therm, n - 2), state)


def write_chain_log(path, stats: TrajectoryStats, include_timing: bool = True) -> None:
    cols = ["traj", "dH", "accepted", "plaquette", "force_evals"] + (["seconds"] if include_timing else [])
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for k in range(len(stats.delta_H)):
            row = [k, f"{stats.delta_H[k]:.17g}", int(stats.accepted[k]), f"{stats.plaquette[k]:.17g}",
                   int(stats.force_evals[k])]
            if include_timing:
                row.append(f"{stats.seconds[k]:.6f}")
            w.writerow(row)


def acceptance_erfc(sigma2) -> float:
    """Mean acceptance ``erfc(sqrt(sigma2/8))`` for log-normal dH with variance sigma2."""
    sigma2 = np.asarray(sigma2, float)
    if np.any(sigma2 < 0):
        raise ValueError("variance must be non-negative")
    out = erfc(np.sqrt(sigma2 / 8.0))
    return float(out) if out.ndim == 0 else out


def optimal_acceptance(p: int) -> float:
    """Cost-optimal acceptance ``exp(-1/p)`` for an order-p integrator."""
    return float(np.exp(-1.0 / p))


def sigma2_for_acceptance(target: float) -> float:
    """Variance of dH at which the erfc model gives acceptance ``target``."""
    if not 0 < target <= 1:
        raise ValueError("target acceptance must be in (0, 1]")
    return float(8.0 * erfcinv(target) ** 2)


@dataclass
class ScanFit:
    a: float
    b: float
    n_star: float
    nf_per_unit: float
    sigma2_target: float


def nf_per_unit_at_target(scan, n_f: int, tau: float = 1.0, target: float = 0.9) -> ScanFit:
    """Fit ``log sigma2 = a - b log N`` over ``(N, sigma2)`` pairs and return the
    force evaluations per unit time ``n_f N*/tau`` at the N* where the erfc
    model reaches ``target`` acceptance."""
    scan = sorted((float(N), float(s2)) for N, s2 in scan)
    if len(scan) < 3:
        raise ValueError("need at least three scan points")
    Ns = np.array([s[0] for s in scan])
    s2 = np.array([s[1] for s in scan])
    if np.any(s2 <= 0) or np.any(np.diff(s2) >= 0):
        raise ValueError("sigma2 must be positive and strictly decreasing in N")
    slope, a = np.polyfit(np.log(Ns), np.log(s2), 1)
    b = -slope
    target_s2 = sigma2_for_acceptance(target)
    n_star = float(np.exp((a - np.log(target_s2)) / b))
    return ScanFit(float(a), float(b), n_star, n_f * n_star / tau, target_s2)


def cost_metric(nf_times_N: float, p_acc: float, tau: float) -> float:
    """``n_f N / (P_acc tau)``: force evaluations per accepted unit of MD time."""
    if not 0 < p_acc <= 1:
        raise ValueError("acceptance must be in (0, 1]")
    if not tau > 0:
        raise ValueError("tau must be positive")
    return nf_times_N / (p_acc * tau)


def scheme_nf(name: str) -> int:
    return count_forces(get_scheme(name))


def equilibrium_samples(model, config: HmcConfig, state: PhasePoint, n_samples: int, spacing: int = 5, rng=None):
    """Configurations taken every ``spacing`` trajectories from a chain started
    at ``state`` (assumed thermalized)."""
    rng = derive_rng(config.seed, config.scheme, config.n_steps) if rng is None else rng
    scheme = get_scheme(config.scheme)
    out = []
    for k in range(n_samples * spacing):
        state, *_ = run_trajectory(model, config, state, rng, scheme)
        if (k + 1) % spacing == 0:
            out.append(np.array(state.q, copy=True))
    return out


def delta_h_scan(model, scheme_name: str, n_list, configs, tau: float = 1.0,
                 mode: str = "hessian_free", seed: int = 0) -> dict:
    """dH for every (configuration, N) with common random numbers.

    Each configuration gets one momentum and one auxiliary-field draw, reused
    for every N, so ratios of variances between step counts carry much less
    noise than independent chains.  Returns ``{N: dH array}``.
    """
    scheme = get_scheme(scheme_name)
    out = {int(N): np.empty(len(configs)) for N in n_list}
    rng = derive_rng(seed, scheme_name, 0)
    for i, q in enumerate(configs):
        p0 = draw_momenta(model, np.shape(q), rng)
        _refresh_auxiliary(model, q, rng)
        state = U1LatticeState(q, p0) if np.ndim(q) == 3 else PhasePoint(q, p0)
        H0 = kinetic_energy(state, model.metric) + model.potential(q)
        for N in out:
            end, _ = integrate(scheme, model, state, tau / N, N, mode)
            out[N][i] = kinetic_energy(end, model.metric) + model.potential(end.q) - H0
    return out


def scaling_exponent(scan: dict) -> tuple[float, float]:
    """Least-squares slope of log sigma2 against log h (h = tau/N), with a
    jackknife error over the sampled configurations."""
    Ns = np.array(sorted(scan))
    dH = np.array([scan[N] for N in Ns])
    x = -np.log(Ns)

    def slope(cols):
        s2 = np.var(dH[:, cols], axis=1, ddof=1)
        return np.polyfit(x, np.log(s2), 1)[0]

    n = dH.shape[1]
    full = float(slope(np.arange(n)))
    jk = np.array([slope(np.delete(np.arange(n), i)) for i in range(n)])
    return full, float(np.sqrt((n - 1) / n * np.sum((jk - jk.mean()) ** 2)))
