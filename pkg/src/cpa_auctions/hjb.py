"""Dynamic CPA-constrained bidder.

The state is the CPA slack ``X_t = T * (value won) - (cost)``, driven by the
bid multiplier ``alpha``::

    dX = (T R(alpha) - C(alpha)) dt + s T sqrt(R(alpha)) dW

with ``R``, ``C`` the expected value and cost rates for values uniform on
[0, 1] against a price to beat with cdf ``G(b) = b**a`` on [0, 1].  The
bidder maximizes ``E[int R dt + K(X_tau)]`` with the linear terminal penalty
``K(x) = -penalty_slope * max(0, -x)``.

:func:`solve` integrates the HJB equation backward with an explicit monotone
scheme (upwind drift, centred diffusion); :func:`deterministic_plan` gives the
constant multiplier optimal without noise; :func:`simulate_trajectory` runs
Euler-Maruyama paths under either controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import rng_stream
from .errors import CFLError, ConfigError, NumericalError


def rates(a: float, alpha):
    """Closed-form value rate R(alpha) and cost rate C(alpha); vectorized in alpha."""
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ValueError("alpha must be >= 0")
    low = np.minimum(alpha, 1.0)
    big = np.maximum(alpha, 1.0)
    R = np.where(alpha < 1.0, low ** a / (a + 2.0),
                 1.0 / ((a + 2.0) * big ** 2) + 0.5 * (1.0 - 1.0 / big ** 2))
    C = np.where(alpha <= 1.0, a * low ** (a + 1.0) / ((a + 1.0) * (a + 2.0)),
                 a / ((a + 1.0) * (a + 2.0) * big) * ((a + 2.0) * big - a - 1.0))
    if R.ndim == 0:
        return float(R), float(C)
    return R, C


@dataclass(frozen=True)
class HjbConfig:
    target_cpa: float = 0.8
    tau: float = 1.0
    a: float = 1.0
    x_min: float = -2.0
    x_max: float = 2.0
    x_steps: int = 400
    t_steps: int = 4000
    alpha_min: float = 0.0
    alpha_max: float = 5.0
    alpha_steps: int = 100
    penalty_slope: float = 2.0
    noise_on: bool = True
    noise_scale: float = 1.0

    def __post_init__(self):
        checks = [
            ("target_cpa", self.target_cpa > 0, "must be > 0"),
            ("tau", self.tau >= 0, "must be >= 0"),
            ("a", self.a > 0, "must be > 0"),
            ("x_max", self.x_min < 0 < self.x_max, "x range must bracket 0"),
            ("x_steps", int(self.x_steps) == self.x_steps and self.x_steps >= 2, "must be an integer >= 2"),
            ("t_steps", int(self.t_steps) == self.t_steps and self.t_steps >= 1, "must be an integer >= 1"),
            ("alpha_min", self.alpha_min >= 0, "must be >= 0"),
            ("alpha_max", self.alpha_max > self.alpha_min, "must exceed alpha_min"),
            ("alpha_steps", int(self.alpha_steps) == self.alpha_steps and self.alpha_steps >= 1,
             "must be an integer >= 1"),
            ("penalty_slope", self.penalty_slope >= 0, "must be >= 0"),
            ("noise_scale", self.noise_scale >= 0, "must be >= 0"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(f"hjb config: {key} {msg}", key=key)

    @property
    def x_grid(self):
        return np.linspace(self.x_min, self.x_max, int(self.x_steps) + 1)

    @property
    def alpha_grid(self):
        return np.linspace(self.alpha_min, self.alpha_max, int(self.alpha_steps) + 1)

    @property
    def alpha_step(self):
        return (self.alpha_max - self.alpha_min) / self.alpha_steps

    @property
    def dt(self):
        return self.tau / self.t_steps

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.x_steps

    @property
    def diffusion_scale(self):
        """Multiplier s**2 of T**2 R in the generator; zero when noise is off."""
        return self.noise_scale ** 2 if self.noise_on else 0.0

    def terminal(self, x):
        return -self.penalty_slope * np.maximum(0.0, -np.asarray(x, dtype=float))


def min_stable_t_steps(config: HjbConfig) -> int:
    """Smallest t_steps satisfying dt * max(|drift|/dx + diffusion/dx^2) <= 1."""
    R, C = rates(config.a, config.alpha_grid)
    drift = config.target_cpa * R - C
    diff = config.diffusion_scale * config.target_cpa ** 2 * R
    rate = np.max(np.abs(drift) / config.dx + diff / config.dx ** 2)
    if rate == 0:
        return 1
    return max(1, math.ceil(config.tau * rate * (1 + 1e-12)))


@dataclass
class HjbSolution:
    config: HjbConfig
    t: np.ndarray
    x: np.ndarray
    alphas: np.ndarray
    value: np.ndarray       # (t_steps + 1, nx)
    policy_index: np.ndarray  # (t_steps, nx), index into alphas

    @property
    def policy(self) -> np.ndarray:
        return self.alphas[self.policy_index]

    def x_index(self, x):
        i = np.rint((np.asarray(x, dtype=float) - self.x[0]) / self.config.dx).astype(int)
        return np.clip(i, 0, len(self.x) - 1)

    def alpha_at(self, t_index: int, x):
        """Policy at time node ``t_index`` (clamped to the last decision) and nearest x node."""
        k = min(int(t_index), len(self.t) - 2)
        return self.alphas[self.policy_index[k, self.x_index(x)]]

    def value_at(self, t_index: int, x: float) -> float:
        return float(np.interp(x, self.x, self.value[t_index]))

    def derivatives(self, t_index: int, x: float):
        """(V_x, V_xx) by centred differences at the nearest interior node."""
        i = int(np.clip(self.x_index(x), 1, len(self.x) - 2))
        v = self.value[t_index]
        dx = self.config.dx
        return (v[i + 1] - v[i - 1]) / (2 * dx), (v[i + 1] - 2 * v[i] + v[i - 1]) / dx ** 2


def _hamiltonian(v, dx, drift, diff, R):
    """Upwinded Hamiltonian for every (alpha, x); returns shape (n_alpha, nx)."""
    d_fwd = np.empty_like(v)
    d_bwd = np.empty_like(v)
    d_fwd[:-1] = (v[1:] - v[:-1]) / dx
    d_bwd[1:] = d_fwd[:-1]
    # boundaries: one-sided interior slope, zero curvature
    d_fwd[-1] = d_bwd[-1] = d_fwd[-2]
    d_bwd[0] = d_fwd[0]
    d2 = np.zeros_like(v)
    d2[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / dx ** 2
    up = np.where(drift[:, None] >= 0, d_fwd[None, :], d_bwd[None, :])
    return drift[:, None] * up + 0.5 * diff[:, None] * d2[None, :] + R[:, None]


def solve(config: HjbConfig) -> HjbSolution:
    """Backward explicit sweep of the HJB equation on the (t, x) grid."""
    needed = min_stable_t_steps(config)
    if config.t_steps < needed and config.tau > 0:
        raise CFLError(f"explicit scheme unstable: t_steps={config.t_steps} < {needed} required "
                       f"for dx={config.dx:.4g}; use t_steps >= {needed}", needed)
    x = config.x_grid
    alphas = config.alpha_grid
    R, C = rates(config.a, alphas)
    T = config.target_cpa
    drift = T * R - C
    diff = config.diffusion_scale * T ** 2 * R
    nt = int(config.t_steps)
    dt = config.dt
    V = np.empty((nt + 1, len(x)))
    pol = np.empty((nt, len(x)), dtype=np.intp)
    V[nt] = config.terminal(x)
    for k in range(nt - 1, -1, -1):
        H = _hamiltonian(V[k + 1], config.dx, drift, diff, R)
        j = np.argmax(H, axis=0)
        pol[k] = j
        V[k] = V[k + 1] + dt * H[j, np.arange(len(x))]
        if not np.all(np.isfinite(V[k])):
            bad = np.flatnonzero(~np.isfinite(V[k]))
            raise NumericalError(f"non-finite value at t={k * dt:.4g}, x in "
                                 f"[{x[bad[0]]:.4g}, {x[bad[-1]]:.4g}] ({bad.size} nodes)")
    t = np.linspace(0.0, config.tau, nt + 1)
    return HjbSolution(config, t, x, alphas, V, pol)


@dataclass(frozen=True)
class DeterministicPlan:
    alpha: float | None
    feasible: bool
    terminal_state: float
    objective: float


def deterministic_plan(config: HjbConfig, x0: float) -> DeterministicPlan:
    """Constant multiplier maximizing tau R(alpha) s.t. x0 + tau (T R - C) >= 0.

    T R - C peaks at alpha = T and decreases beyond it, so the answer is the
    cap when slack, a bisection root on [T, cap] when binding, and alpha = T
    (least violation) when even the peak is infeasible.
    """
    tau, T, a = config.tau, config.target_cpa, config.a
    if tau == 0:
        return DeterministicPlan(None, x0 >= 0, float(x0), 0.0)
    cap = config.alpha_max

    def slack(alpha):
        r, c = rates(a, alpha)
        return x0 + tau * (T * r - c)

    peak = min(T, cap)
    if slack(peak) < 0:
        alpha = peak
    elif slack(cap) >= 0:
        alpha = cap
    else:
        lo, hi = peak, cap
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if slack(mid) >= 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-14 * hi:
                break
        alpha = lo
    end = slack(alpha)
    return DeterministicPlan(float(alpha), end >= -1e-12, float(end), tau * rates(a, alpha)[0])


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    x: np.ndarray
    alpha: np.ndarray
    value: np.ndarray
    cost: np.ndarray
    empirical_cpa: np.ndarray
    noise_qv: float
    exits: int
    target_cpa: float
    penalty_slope: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def terminal_feasible(self) -> bool:
        return bool(self.x[-1] >= 0)

    @property
    def terminal_penalty(self) -> float:
        return self.penalty_slope * max(0.0, -float(self.x[-1]))


def simulate_trajectory(controller, config: HjbConfig, x0: float = 0.0, seed: int = 0,
                        n_paths: int = 1000, noise_scale=None):
    """Euler-Maruyama paths of the slack under an HJB policy or a constant multiplier.

    ``controller`` is an :class:`HjbSolution` (policy read at the nearest x
    node, exact time node) or a float.  Paths sharing ``seed`` share their
    Brownian increments, so two controllers can be compared path by path.
    Value and cost accrue at their expected rates; the noise only moves the
    state, and ``empirical_cpa`` divides cost by realized actions
    ``value + noise / T``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    T = config.target_cpa
    scale = config.noise_scale if noise_scale is None else noise_scale
    if not config.noise_on:
        scale = 0.0
    nt = int(config.t_steps)
    dt = config.dt
    t = np.linspace(0.0, config.tau, nt + 1)
    rng = rng_stream(seed, 0)
    dW = rng.standard_normal((n_paths, nt)) * math.sqrt(dt)
    X = np.empty((n_paths, nt + 1))
    A = np.empty((n_paths, nt))
    val = np.zeros((n_paths, nt + 1))
    cost = np.zeros((n_paths, nt + 1))
    noise_cum = np.zeros((n_paths, nt + 1))
    X[:, 0] = x0
    exits = np.zeros(n_paths, dtype=int)
    qv = np.zeros(n_paths)
    constant = not isinstance(controller, HjbSolution)
    if not constant and controller.policy_index.shape[0] != nt:
        raise ConfigError("controller grid and config t_steps differ", key="t_steps")
    for k in range(nt):
        if constant:
            alpha = np.full(n_paths, float(controller))
        else:
            alpha = controller.alpha_at(k, X[:, k])
        R, C = rates(config.a, alpha)
        noise = scale * T * np.sqrt(R) * dW[:, k]
        qv += noise * noise
        nxt = X[:, k] + (T * R - C) * dt + noise
        out = (nxt < config.x_min) | (nxt > config.x_max)
        exits += out
        X[:, k + 1] = np.clip(nxt, config.x_min, config.x_max)
        A[:, k] = alpha
        val[:, k + 1] = val[:, k] + R * dt
        cost[:, k + 1] = cost[:, k] + C * dt
        noise_cum[:, k + 1] = noise_cum[:, k] + noise
    actions = val + noise_cum / T
    with np.errstate(divide="ignore", invalid="ignore"):
        cpa = np.where(actions > 0, cost / actions, 0.0)
    records = []
    for p in range(n_paths):
        rec = TrajectoryRecord(t, X[p], A[p], val[p], cost[p], cpa[p], float(qv[p]), int(exits[p]),
                               T, config.penalty_slope)
        if exits[p]:
            rec.notes.append(f"state clamped to the x grid {exits[p]} times")
        records.append(rec)
    return records
