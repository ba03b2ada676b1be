"""Executes splitting schemes against models.

Three ways to realise a D stage (kick ``b h`` with force-gradient weight
``c``):

``hessian_free``
    evaluate the force at the temporarily shifted configuration
    ``q' = q - (2 c h^2 / b) M^{-1} grad V(q)`` and kick with it.  Taylor
    expanding ``grad V(q')`` reproduces the exact force-gradient kick up to
    ``O(h^5)``; the first neglected term is ``-(2 c^2 / b) h^5 D^3V[u, u]``.
``exact_fg``
    ``p <- p - b h grad V(q) + c h^3 G(q)`` with the analytic
    ``G = 2 Hess V(q) M^{-1} grad V(q)`` supplied by the model.
``exact_fg_fd``
    as ``exact_fg`` with ``G`` from a central difference of the force along
    ``M^{-1} grad V``.

Forces are cached per configuration *object*: drifts create new arrays,
kicks keep ``q`` untouched, so an unchanged array identity means an
unchanged configuration.  This is what makes the last D/B stage of one
velocity-version step and the first of the next share their evaluations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.integrate import solve_ivp

from .phase import MassMetric, PhasePoint, drift, flip, kick, kinetic_energy, velocity

__all__ = [
    "Model",
    "StepMode",
    "EvalCounter",
    "d_stage",
    "step",
    "integrate",
    "hamiltonian",
    "reversibility_defect",
    "jacobian_det",
    "measure_order",
    "OrderFit",
    "energy_drift",
    "fit_drift",
    "DriftFit",
    "global_error",
    "fd_fg_term",
    "check_model",
    "reference_solution",
    "error_ratio_at_equal_work",
]


class Model:
    """Contract for a separable Hamiltonian ``H = p^T M^{-1} p / 2 + V(q)``.

    Subclasses implement :meth:`potential` and :meth:`force` (the gradient of
    the potential; a kick subtracts it) and may implement :meth:`fg_term`.
    """

    metric: MassMetric | None = None
    has_fg_term: bool = False

    def potential(self, q) -> float:
        raise NotImplementedError

    def force(self, q) -> np.ndarray:
        raise NotImplementedError

    def fg_term(self, q) -> np.ndarray:
        """``2 Hess V(q) M^{-1} grad V(q)``."""
        raise NotImplementedError(f"{type(self).__name__} has no analytic force-gradient term")

    def energy(self, state: PhasePoint) -> float:
        return kinetic_energy(state, self.metric) + self.potential(state.q)


class StepMode(str, enum.Enum):
    HESSIAN_FREE = "hessian_free"
    EXACT_FG = "exact_fg"
    EXACT_FG_FD = "exact_fg_fd"


@dataclass
class EvalCounter:
    """Per-trajectory evaluation counts plus the small force cache.

    ``work`` charges an FG-term as two force evaluations.
    """

    force_evals: int = 0
    fg_evals: int = 0
    cache_hits: int = 0
    _cache: list = field(default_factory=list, repr=False)
    cache_size: int = 4

    @property
    def work(self) -> int:
        return self.force_evals + 2 * self.fg_evals

    def lookup(self, q, tag, compute):
        for entry in self._cache:
            if entry[0] is q and entry[1] == tag:
                self.cache_hits += 1
                return entry[2]
        val = compute()
        self._cache.insert(0, (q, tag, val))
        del self._cache[self.cache_size:]
        return val

    def clear_cache(self) -> None:
        self._cache.clear()


def _mode(mode) -> StepMode:
    return mode if isinstance(mode, StepMode) else StepMode(mode)


def _force(model, q, counter: EvalCounter, tag=0.0):
    def compute():
        counter.force_evals += 1
        return model.force(q)
    return counter.lookup(q, ("f", tag), compute)


def fd_fg_term(model, q, grad=None) -> np.ndarray:
    """``2 Hess V(q) u`` with ``u = M^{-1} grad V(q)`` by central differences.

    Step ``eps = machine_eps^(1/3) (1 + |q|_inf)`` along the unit direction.
    """
    if grad is None:
        grad = model.force(q)
    u = velocity(grad, model.metric)
    norm = float(np.max(np.abs(u)))
    if norm == 0.0:
        return np.zeros_like(grad)
    eps = np.finfo(float).eps ** (1.0 / 3.0) * (1.0 + float(np.max(np.abs(q))))
    d = u / norm
    diff = (model.force(q + eps * d) - model.force(q - eps * d)) / (2 * eps)
    return 2.0 * norm * diff


def d_stage(state: PhasePoint, b: float, c: float, h: float, model: Model,
            mode=StepMode.HESSIAN_FREE, counter: EvalCounter | None = None) -> PhasePoint:
    """Force-gradient kick of size ``b h`` with weight ``c``."""
    if b == 0:
        raise ValueError("d_stage requires b != 0")
    counter = EvalCounter() if counter is None else counter
    mode = _mode(mode)
    q = state.q
    grad = _force(model, q, counter)
    if c == 0:
        return kick(state, grad, b * h)
    if mode is StepMode.HESSIAN_FREE:
        shift = -2.0 * c * h * h / b

        def shifted():
            counter.force_evals += 1
            return model.force(q + shift * velocity(grad, model.metric))

        g2 = counter.lookup(q, ("f", shift), shifted)
        return kick(state, g2, b * h)
    if mode is StepMode.EXACT_FG:
        if not model.has_fg_term:
            raise ValueError(f"exact_fg mode needs an analytic fg_term; {type(model).__name__} has none")

        def fg():
            counter.fg_evals += 1
            return model.fg_term(q)
    else:
        def fg():
            counter.fg_evals += 1
            return fd_fg_term(model, q, grad)
    G = counter.lookup(q, ("fg",), fg)
    return state.replace(p=state.p - (b * h) * grad + (c * h**3) * G)


def step(scheme, model: Model, state: PhasePoint, h: float, mode=StepMode.HESSIAN_FREE,
         counter: EvalCounter | None = None) -> PhasePoint:
    """One application of the scheme with step ``h``."""
    counter = EvalCounter() if counter is None else counter
    if h == 0:
        return state
    mode = _mode(mode)
    metric = model.metric
    stages = scheme.float_stages() if hasattr(scheme, "float_stages") else scheme
    for kind, a, b, c in stages:
        if kind == "A":
            state = drift(state, metric, a * h)
        elif kind == "B":
            state = kick(state, _force(model, state.q, counter), b * h)
        else:
            state = d_stage(state, b, c, h, model, mode, counter)
    return state


def integrate(scheme, model: Model, state: PhasePoint, h: float, n_steps: int,
              mode=StepMode.HESSIAN_FREE, counter: EvalCounter | None = None,
              observer=None):
    """``n_steps`` steps of size ``h``; returns ``(state, counter)``.

    ``observer(k, state)`` is called after every step when given.
    """
    counter = EvalCounter() if counter is None else counter
    stages = scheme.float_stages() if hasattr(scheme, "float_stages") else scheme
    for k in range(n_steps):
        state = step(stages, model, state, h, mode, counter)
        if observer is not None:
            observer(k + 1, state)
    return state, counter


def hamiltonian(model: Model, state: PhasePoint) -> float:
    return model.energy(state)


def _inf_norm(x) -> float:
    return float(np.max(np.abs(np.ravel(x)))) if np.size(x) else 0.0


def global_error(a: PhasePoint, b: PhasePoint) -> float:
    """Infinity norm over positions and momenta jointly."""
    return max(_inf_norm(a.q - b.q), _inf_norm(a.p - b.p))


def reversibility_defect(scheme, model, state, h, mode=StepMode.HESSIAN_FREE, n_steps: int = 1) -> float:
    """``|rho Phi rho Phi (x) - x|_inf`` for ``n_steps`` steps forward and back."""
    fwd, _ = integrate(scheme, model, state, h, n_steps, mode)
    back, _ = integrate(scheme, model, flip(fwd), h, n_steps, mode)
    return global_error(flip(back), state)


def jacobian_det(scheme, model, state, h, mode=StepMode.HESSIAN_FREE, rel_step: float = 1e-5) -> float:
    """``|det d Phi_h / d(p, q)|`` from central differences (phase dim <= 8)."""
    q0, p0 = np.asarray(state.q, float), np.asarray(state.p, float)
    d = q0.size
    if 2 * d > 8:
        raise ValueError(f"phase-space dimension {2 * d} too large for a finite-difference Jacobian")
    x0 = np.concatenate([p0.ravel(), q0.ravel()])

    def phi(x):
        s = state.replace(q=x[d:].reshape(q0.shape), p=x[:d].reshape(p0.shape))
        out = step(scheme, model, s, h, mode)
        return np.concatenate([np.ravel(out.p), np.ravel(out.q)])

    J = np.empty((2 * d, 2 * d))
    for j in range(2 * d):
        e = rel_step * (1.0 + abs(x0[j]))
        xp, xm = x0.copy(), x0.copy()
        xp[j] += e
        xm[j] -= e
        J[:, j] = (phi(xp) - phi(xm)) / (2 * e)
    return abs(float(np.linalg.det(J)))


def reference_solution(model: Model, state: PhasePoint, t_end: float,
                       rtol: float = 2.5e-14, atol: float = 1e-16) -> PhasePoint:
    """High-accuracy solution at ``t_end`` from an eighth-order Runge-Kutta
    (DOP853) integration of Hamilton's equations, for order measurements."""
    q0, p0 = np.asarray(state.q, float), np.asarray(state.p, float)
    d = q0.size

    def rhs(_t, y):
        q, p = y[:d].reshape(q0.shape), y[d:].reshape(p0.shape)
        return np.concatenate([np.ravel(velocity(p, model.metric)), -np.ravel(model.force(q))])

    sol = solve_ivp(rhs, (0.0, t_end), np.concatenate([q0.ravel(), p0.ravel()]),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")
    y = sol.y[:, -1]
    return state.replace(q=y[:d].reshape(q0.shape), p=y[d:].reshape(p0.shape))


@dataclass
class OrderFit:
    slope: float
    h: np.ndarray
    errors: np.ndarray
    monotone: bool
    intercept: float = 0.0

    def __str__(self) -> str:
        return f"order {self.slope:.3f} over h={list(self.h)}"


def _fit_loglog(h, err):
    x, y = np.log(np.asarray(h, float)), np.log(np.asarray(err, float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def measure_order(scheme, model, state0, t_end, h_list, mode=StepMode.HESSIAN_FREE,
                  reference: PhasePoint | None = None) -> OrderFit:
    """Least-squares slope of log(global error at ``t_end``) against log h.

    Without ``reference`` the exact solution is replaced by a Richardson
    extrapolation of the same scheme at ``h_min/4`` and ``h_min/8``, using
    the scheme's nominal order.
    """
    h_list = sorted((float(h) for h in h_list), reverse=True)
    if len(h_list) < 3:
        raise ValueError("need at least three step sizes")

    def run(h):
        n = int(round(t_end / h))
        if not np.isclose(n * h, t_end, rtol=1e-12):
            raise ValueError(f"h={h} does not divide t_end={t_end}")
        return integrate(scheme, model, state0, h, n, mode)[0]

    if reference is None:
        p = getattr(scheme, "order_p", 2)
        hm = h_list[-1]
        y4, y8 = run(hm / 4), run(hm / 8)
        w = 2.0**p
        reference = y8.replace(q=(w * y8.q - y4.q) / (w - 1), p=(w * y8.p - y4.p) / (w - 1))
    errs = np.array([global_error(run(h), reference) for h in h_list])
    slope, icpt = _fit_loglog(h_list, errs)
    monotone = bool(np.all(np.diff(errs) < 0))
    return OrderFit(slope, np.array(h_list), errs, monotone, icpt)


@dataclass
class DriftFit:
    t: np.ndarray
    rel_error: np.ndarray
    slope: float
    slope_low: float
    slope_high: float
    amplitude: float

    @property
    def consistent_with_zero(self) -> bool:
        return self.slope_low <= 0.0 <= self.slope_high

    @property
    def drift_over_span(self) -> float:
        return abs(self.slope) * float(self.t[-1] - self.t[0])


def fit_drift(t, rel_error, alpha: float = 0.95, max_points: int = 2000) -> DriftFit:
    """Theil-Sen slope of an energy-error series with its confidence interval.

    ``amplitude`` is the peak-to-peak size of the detrended series.
    """
    t = np.asarray(t, float)
    y = np.asarray(rel_error, float)
    stride = max(1, len(t) // max_points)
    ts, ys = t[::stride], y[::stride]
    slope, icpt, lo, hi = stats.theilslopes(ys, ts, alpha)
    resid = y - (icpt + slope * t)
    return DriftFit(t, y, float(slope), float(lo), float(hi), float(np.ptp(resid)))


def error_ratio_at_equal_work(curve_a, curve_b, max_error: float = 1e-4, n_grid: int = 50) -> float:
    """Smallest ratio err_a / err_b over the work range where both curves are
    at or below ``max_error``.

    Curves are ``(work, error)`` sequences, interpolated linearly in log-log.
    Returns nan when the curves share no work range in that regime.
    """
    def regime(curve):
        w, e = (np.asarray(x, float) for x in curve)
        order = np.argsort(w)
        w, e = w[order], e[order]
        keep = e <= max_error
        return np.log(w[keep]), np.log(e[keep])

    wa, ea = regime(curve_a)
    wb, eb = regime(curve_b)
    if len(wa) == 0 or len(wb) == 0:
        return float("nan")
    lo, hi = max(wa[0], wb[0]), min(wa[-1], wb[-1])
    if lo > hi:
        return float("nan")
    grid = np.linspace(lo, hi, n_grid)
    return float(np.min(np.exp(np.interp(grid, wa, ea) - np.interp(grid, wb, eb))))


def energy_drift(scheme, model, state0, h, t_end, mode=StepMode.HESSIAN_FREE, every: int = 1) -> DriftFit:
    """Relative energy error ``(H(t) - H0)/|H0|`` sampled every ``every`` steps and its fit."""
    n = int(round(t_end / h))
    H0 = model.energy(state0)
    ts, es = [0.0], [0.0]

    def obs(k, s):
        if k % every == 0:
            ts.append(k * h)
            es.append((model.energy(s) - H0) / abs(H0))

    integrate(scheme, model, state0, h, n, mode, observer=obs)
    return fit_drift(ts, es)


def check_model(model, q, rng=None, rel_step=1e-6):
    """Relative errors of force vs. potential and fg_term vs. force differences.

    Returns ``(force_rel_err, fg_rel_err)``; the latter is ``None`` without
    an analytic FG-term.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    g = model.force(q)
    d = rng.standard_normal(np.shape(q))
    e = rel_step * (1.0 + float(np.max(np.abs(q))))
    num = (model.potential(q + e * d) - model.potential(q - e * d)) / (2 * e)
    ana = float(np.vdot(g, d).real)
    f_err = abs(num - ana) / max(abs(ana), 1e-300)
    fg_err = None
    if model.has_fg_term:
        ana_fg = model.fg_term(q)
        num_fg = fd_fg_term(model, q, g)
        fg_err = float(np.max(np.abs(ana_fg - num_fg)) / max(np.max(np.abs(ana_fg)), 1e-300))
    return f_err, fg_err
