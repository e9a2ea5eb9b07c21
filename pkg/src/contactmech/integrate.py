"""Explicit Runge-Kutta integration of vector fields into trajectories.

Two methods:

* ``rk4-fixed``: classical fourth-order Runge-Kutta with a fixed step; the
  last step is shortened to land exactly on ``t_max``.
* ``rk45-adaptive``: Dormand-Prince 5(4) embedded pair (fifth order
  propagated) with a PI step-size controller.  A step is accepted when
  ``max|x5 - x4| <= atol + rtol * max|x|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from .expr import ExprError, as_expr, evaluate_many

__all__ = [
    "IntegratorConfig", "Trajectory", "IntegrationError", "StepUnderflowError", "MaxStepsExceeded",
    "BlowUpError", "integrate", "observe", "cumulative_quadrature",
]

BLOWUP = 1e12

# Dormand-Prince 5(4)
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


class IntegrationError(RuntimeError):
    def __init__(self, message: str, step: int | None = None, t: float | None = None, state=None):
        self.step, self.t = step, t
        self.state = None if state is None else np.asarray(state, dtype=float)
        where = "" if step is None else f" at step {step} (t = {t:.6g})"
        super().__init__(message + where)


class StepUnderflowError(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class BlowUpError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4-fixed"
    dt: float = 1e-3
    t_max: float = 1.0
    atol: float = 1e-10
    rtol: float = 1e-10
    max_steps: int = 10_000_000
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 5.0

    def __post_init__(self):
        if self.method not in ("rk4-fixed", "rk45-adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("atol and rtol must be positive")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    coords: tuple[str, ...] = ()
    meta: dict[str, Any] = field(default_factory=dict)
    step_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    error_estimates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.coords.index(name)]

    def bindings(self, k: int, params: Mapping[str, float] | None = None) -> dict[str, float]:
        out = dict(params or self.meta.get("params", {}))
        out.update(zip(self.coords, self.states[k].tolist()))
        return out


def _check_state(x, k, t):
    if not np.all(np.isfinite(x)):
        raise BlowUpError("non-finite state", k, t, x)
    if np.max(np.abs(x)) > BLOWUP:
        raise BlowUpError(f"state exceeded {BLOWUP:g}", k, t, x)


def _rk4(f, x0, cfg: IntegratorConfig, coords):
    n_full = int(np.floor(cfg.t_max / cfg.dt + 1e-9))
    times = [k * cfg.dt for k in range(n_full + 1)]
    if cfg.t_max - times[-1] > 1e-12 * max(1.0, cfg.t_max):
        times.append(cfg.t_max)
    else:
        times[-1] = cfg.t_max
    if len(times) - 1 > cfg.max_steps:
        raise MaxStepsExceeded(f"{len(times) - 1} steps needed, max_steps = {cfg.max_steps}")
    states = np.empty((len(times), len(x0)))
    states[0] = x0
    x = np.array(x0, dtype=float)
    for k in range(1, len(times)):
        t = times[k - 1]
        h = times[k] - t
        try:
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
        except (ExprError, ArithmeticError) as exc:
            raise IntegrationError(f"field evaluation failed: {exc}", k - 1, t, x) from exc
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_state(x, k, times[k])
        states[k] = x
    times = np.array(times)
    return times, states, np.diff(times), np.zeros(len(times) - 1)


def _rk45(f, x0, cfg: IntegratorConfig, coords):
    t, x = 0.0, np.array(x0, dtype=float)
    times, states, hs, errs = [0.0], [x.copy()], [], []
    if cfg.t_max == 0:
        return np.array(times), np.array(states), np.zeros(0), np.zeros(0)
    h = min(cfg.dt, cfg.t_max)
    err_prev = 1.0
    alpha, beta = 0.7 / 5, 0.4 / 5
    K = np.empty((7, len(x)))
    try:
        K[0] = f(x)
    except (ExprError, ArithmeticError) as exc:
        raise IntegrationError(f"field evaluation failed: {exc}", 0, t, x) from exc
    steps = 0
    while t < cfg.t_max:
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded(f"max_steps = {cfg.max_steps} exceeded", steps, t, x)
        last = t + h >= cfg.t_max
        if last:
            h = cfg.t_max - t
        if h <= 1e-14 * max(1.0, abs(t)):
            raise StepUnderflowError("step size underflow", steps, t, x)
        try:
            for i in range(1, 7):
                K[i] = f(x + h * (_DP_A[i] @ K[:i]))
        except (ExprError, ArithmeticError) as exc:
            raise IntegrationError(f"field evaluation failed: {exc}", steps, t, x) from exc
        x_new = x + h * (_DP_B5 @ K)
        err = float(np.max(np.abs(h * (_DP_E @ K))))
        tol = cfg.atol + cfg.rtol * max(float(np.max(np.abs(x))), float(np.max(np.abs(x_new))))
        ratio = err / tol if np.isfinite(err) else np.inf
        steps += 1
        if ratio <= 1.0:
            t = cfg.t_max if last else t + h
            x = x_new
            _check_state(x, len(times), t)
            times.append(t)
            states.append(x.copy())
            hs.append(h)
            errs.append(err)
            K[0] = K[6]  # first-same-as-last
            factor = cfg.safety * max(ratio, 1e-10) ** -alpha * err_prev ** beta
            err_prev = max(ratio, 1e-4)
        else:
            factor = cfg.safety * ratio ** -(1 / 5) if np.isfinite(ratio) else cfg.min_factor
        h *= min(cfg.max_factor, max(cfg.min_factor, factor))
    return np.array(times), np.array(states), np.array(hs), np.array(errs)


def integrate(field, x0: Sequence[float], cfg: IntegratorConfig, label: str = "") -> Trajectory:
    """Integrate the flow of ``field`` from ``x0`` over ``[0, cfg.t_max]``.

    ``field`` is a ``VectorField`` or ``PointwiseVectorField``; its parameter
    values are used as bound.  Deterministic for a given config.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (field.dim,):
        raise ValueError(f"initial state has length {x0.size}, field has dimension {field.dim}")
    _check_state(x0, 0, 0.0)
    f = field.compile()
    run = _rk4 if cfg.method == "rk4-fixed" else _rk45
    times, states, hs, errs = run(f, x0, cfg, field.coords)
    meta = {"label": label, "method": cfg.method, "dt": cfg.dt, "atol": cfg.atol, "rtol": cfg.rtol,
            "t_max": cfg.t_max, "params": dict(field.params)}
    return Trajectory(times, states, tuple(field.coords), meta, hs, errs)


def observe(traj: Trajectory, F, params: Mapping[str, float] | None = None) -> np.ndarray:
    """Values of the expression ``F`` at every state of ``traj``."""
    F = as_expr(F)
    params = dict(traj.meta.get("params", {})) if params is None else dict(params)
    out = np.empty(len(traj))
    for k in range(len(traj)):
        b = dict(params)
        b.update(zip(traj.coords, traj.states[k].tolist()))
        try:
            out[k] = evaluate_many((F,), b)[0]
        except ExprError as exc:
            raise IntegrationError(f"observable evaluation failed: {exc}", k, traj.times[k]) from exc
    return out


def cumulative_quadrature(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Running integral from ``times[0]`` by composite Simpson, starting at 0."""
    if len(times) < 2:
        return np.zeros(len(times))
    if len(times) == 2:
        return np.array([0.0, 0.5 * (times[1] - times[0]) * (values[0] + values[1])])
    return cumulative_simpson(values, x=times, initial=0.0)
