"""Fixed-step RK4 integration of disturbance-driven dynamics.

State vectors are plain 1-D numpy arrays. A system is described by its
right-hand side f(t, x, d) plus an optional scalar observable; systems
that carry a discrete companion mode (e.g. a load-shedding flag) declare
a mode_update hook, which is applied once per full step so the RK4
substeps always see a frozen mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import ConfigurationError, IntegrationDivergedError, ParameterError
from .trajectory import TimeGrid, Trajectory


@dataclass(frozen=True)
class DisturbanceSignal:
    """Exogenous disturbance d(t): a rectangular pulse or nothing.

    The pulse is active on the half-open window [onset, onset + duration).
    Outside the window (and always for kind="none") evaluation returns the
    neutral value declared by the consuming system: 0 for additive
    coupling, 1 for multiplicative coupling.
    """

    kind: str = "none"  # "none" | "pulse"
    onset: float = 0.0
    duration: float = 0.0
    magnitude: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "pulse"):
            raise ParameterError(f"unknown disturbance kind {self.kind!r}")
        if self.kind == "pulse" and self.duration < 0:
            raise ParameterError(f"pulse duration must be >= 0, got {self.duration}")


def evaluate_disturbance(signal: DisturbanceSignal, t: float, neutral: float) -> float:
    if signal.kind == "none":
        return neutral
    if signal.onset <= t < signal.onset + signal.duration:
        return signal.magnitude
    return neutral


@dataclass(frozen=True)
class DynamicalSystem:
    """Right-hand side bundle handed to integrate().

    rhs(t, x, d) must be a pure function returning a derivative array of
    the declared dimension. When mode_update is set, rhs receives the
    current mode as a fourth argument and mode_update(t, x, mode) is
    called once at the start of every step (never inside substeps).
    project, when set, is applied to the state after every step (state
    constraints such as storage saturation).
    """

    dimension: int
    rhs: Callable[..., np.ndarray]
    output_map: Callable[[float, np.ndarray], float] | None = None
    mode_update: Callable[[float, np.ndarray, Any], Any] | None = None
    mode_init: Any = None
    project: Callable[[np.ndarray], np.ndarray] | None = None
    disturbance_neutral: float = 0.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.dimension}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration window. method is pinned to classical RK4."""

    dt: float
    t_start: float
    t_end: float
    method: str = "rk4"
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method != "rk4":
            raise ConfigurationError(f"unsupported method {self.method!r}")
        span = self.t_end - self.t_start
        if not (self.dt > 0 and self.dt <= span):
            raise ConfigurationError(
                f"need 0 < dt <= t_end - t_start, got dt={self.dt}, span={span}"
            )
        if span / self.dt > self.max_steps:
            raise ConfigurationError(
                f"{span / self.dt:.3g} steps exceed the configured limit {self.max_steps}"
            )

    def n_steps(self) -> int:
        ratio = (self.t_end - self.t_start) / self.dt
        n = round(ratio)
        if abs(ratio - n) > 1e-6:
            raise ConfigurationError(
                f"(t_end - t_start)/dt = {ratio} is not a whole number of steps"
            )
        return n


@dataclass(frozen=True)
class IntegrationResult:
    """Recorded state components, optional observable, optional mode track."""

    grid: TimeGrid
    states: tuple[Trajectory, ...]
    observable: Trajectory | None
    modes: tuple | None


def integrate(
    system: DynamicalSystem,
    x0: np.ndarray,
    disturbance: DisturbanceSignal,
    config: IntegratorConfig,
) -> IntegrationResult:
    """Classical RK4 with the disturbance sampled at the substep times.

    The disturbance is evaluated at (t, t+dt/2, t+dt/2, t+dt) and held
    fixed within each substep; pulse edges are not located sub-step, so
    keep dt small relative to the pulse duration.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (system.dimension,):
        raise ParameterError(
            f"x0 shape {x.shape} does not match system dimension {system.dimension}"
        )
    if not np.all(np.isfinite(x)):
        raise ParameterError("x0 must be finite")
    if (
        disturbance.kind == "pulse"
        and disturbance.duration < 10 * config.dt
    ):
        warnings.warn(
            f"pulse duration {disturbance.duration} is below 10*dt={10 * config.dt}; "
            "edge errors may dominate",
            stacklevel=2,
        )

    n_steps = config.n_steps()
    grid = TimeGrid(config.t_start, config.dt, n_steps + 1)
    dt = config.dt
    half = 0.5 * dt
    sixth = dt / 6.0

    neutral = system.disturbance_neutral
    if disturbance.kind == "none":
        def dist(_t: float) -> float:
            return neutral
    else:
        onset = disturbance.onset
        offset = disturbance.onset + disturbance.duration
        magnitude = disturbance.magnitude

        def dist(t: float) -> float:
            return magnitude if onset <= t < offset else neutral

    rhs = system.rhs
    has_mode = system.mode_update is not None
    mode = system.mode_init
    modes: list[Any] = [] if has_mode else None
    if system.project is not None:
        x = np.asarray(system.project(x), dtype=float)

    states = np.empty((n_steps + 1, system.dimension))
    states[0] = x

    for k in range(n_steps):
        t = grid.time_at(k)
        tm = t + half
        t1 = grid.time_at(k + 1)
        if has_mode:
            mode = system.mode_update(t, x, mode)
            modes.append(mode)
            d0 = dist(t)
            dm = dist(tm)
            d1 = dist(t1)
            k1 = rhs(t, x, d0, mode)
            k2 = rhs(tm, x + half * k1, dm, mode)
            k3 = rhs(tm, x + half * k2, dm, mode)
            k4 = rhs(t1, x + dt * k3, d1, mode)
        else:
            d0 = dist(t)
            dm = dist(tm)
            d1 = dist(t1)
            k1 = rhs(t, x, d0)
            k2 = rhs(tm, x + half * k1, dm)
            k3 = rhs(tm, x + half * k2, dm)
            k4 = rhs(t1, x + dt * k3, d1)
        x = x + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if system.project is not None:
            x = np.asarray(system.project(x), dtype=float)
        if not np.all(np.isfinite(x)):
            raise IntegrationDivergedError(
                f"non-finite state at t={t1}", time=t1
            )
        states[k + 1] = x

    if has_mode:
        mode = system.mode_update(grid.t_end, x, mode)
        modes.append(mode)

    state_trajs = tuple(
        Trajectory(grid, states[:, i]) for i in range(system.dimension)
    )
    observable = None
    if system.output_map is not None:
        times = grid.times()
        obs = np.empty(n_steps + 1)
        for k in range(n_steps + 1):
            obs[k] = system.output_map(times[k], states[k])
        observable = Trajectory(grid, obs)

    return IntegrationResult(
        grid=grid,
        states=state_trajs,
        observable=observable,
        modes=tuple(modes) if has_mode else None,
    )


def linear_decay_system(lam: float) -> DynamicalSystem:
    """One-dimensional dr/dt = -lam*r with identity observable.

    The canonical exponential-recovery test system; the disturbance input
    is ignored. lam must be strictly positive (it is the local stability
    rate of a stable equilibrium).
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ParameterError(f"decay rate must be > 0, got {lam}")

    def rhs(_t: float, x: np.ndarray, _d: float) -> np.ndarray:
        return -lam * x

    return DynamicalSystem(
        dimension=1,
        rhs=rhs,
        output_map=lambda _t, x: float(x[0]),
    )
