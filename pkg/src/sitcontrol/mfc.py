"""Ultra-local model machinery: sliding-window estimation and iP feedback.

The controlled output y (egg population) is modelled over a short horizon
as ydot = F + alpha*u, where F lumps every unmodelled effect.  F is
re-estimated continuously from a trailing window of (y, u) samples by an
algebraic integral filter; the intelligent proportional (iP) law then
cancels the estimate and shapes the tracking error with gain k_p:

    u = (-F_est + ydot_ref + error_sign * k_p * (y - y_ref)) / alpha

With error_sign = -1 (the default) substituting into the plant gives
edot = -k_p*e + (F - F_est): the error contracts whenever the estimate
is good.  The +k_p variant is kept behind the switch because both sign
conventions circulate in the literature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

REFERENCE_KINDS = ("exponential-decay", "constant-hold")

#: Residual fraction of the initial gap left when an exponential-decay
#: reference reaches t_settle.
SETTLE_RESIDUAL = 0.01


class WindowTooShortError(ValueError):
    """Sample window does not yet span the estimation horizon (warm-up)."""


class InvalidWindowError(ValueError):
    """Sample window violates the uniform-spacing requirement."""


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and horizon of the ultra-local controller.

    Attributes:
        alpha: input gain of the ultra-local model ((eggs/day) per sterile
            male); negative for this plant, must be nonzero.
        k_p: proportional gain (1/day), > 0.
        tau: estimation-window length (day), > 0.
        nu_order: derivation order of the ultra-local model; only 1 is
            implemented.
        error_sign: -1 applies -k_p*e (contracting loop), +1 the opposite
            convention.
    """

    alpha: float
    k_p: float = 0.12
    tau: float = 2.0
    nu_order: int = 1
    error_sign: float = -1.0

    def __post_init__(self):
        if self.alpha == 0.0 or not math.isfinite(self.alpha):
            raise ValueError("ControllerConfig.alpha must be finite and nonzero")
        if self.k_p <= 0.0:
            raise ValueError("ControllerConfig.k_p must be positive")
        if self.tau <= 0.0:
            raise ValueError("ControllerConfig.tau must be positive")
        if self.nu_order != 1:
            raise ValueError("only derivation order 1 is implemented")
        if self.error_sign not in (-1.0, 1.0):
            raise ValueError("ControllerConfig.error_sign must be -1 or +1")


@dataclass(frozen=True)
class SampleWindow:
    """Trailing (time, output, control) samples on a uniform grid."""

    times: np.ndarray
    ys: np.ndarray
    us: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.ys) == len(self.us)):
            raise InvalidWindowError("times, ys, us must have equal length")
        if len(self.times) >= 2 and np.any(np.diff(self.times) <= 0.0):
            raise InvalidWindowError("window times must be strictly increasing")

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Target output trajectory y_ref(t).

    kind "exponential-decay": y_ref relaxes from y_start to y_target with
    rate chosen so that only SETTLE_RESIDUAL of the initial gap remains at
    t_settle.  kind "constant-hold": y_ref stays at y_start.
    """

    kind: Literal["exponential-decay", "constant-hold"]
    y_start: float
    y_target: float = 0.0
    t_settle: float = 1000.0

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.y_target < 0.0:
            raise ValueError("ReferenceTrajectory.y_target must be >= 0")
        if self.t_settle <= 0.0:
            raise ValueError("ReferenceTrajectory.t_settle must be positive")

    @property
    def decay_rate(self) -> float:
        return math.log(1.0 / SETTLE_RESIDUAL) / self.t_settle

    @property
    def span(self) -> float:
        return self.y_start - self.y_target


def reference(t: float, ref: ReferenceTrajectory) -> tuple[float, float]:
    """Evaluate (y_ref, dy_ref/dt) at time t >= 0."""
    if ref.kind == "constant-hold":
        return ref.y_start, 0.0
    lam = ref.decay_rate
    gap = ref.span * math.exp(-lam * t)
    return ref.y_target + gap, -lam * gap


def estimator_weights(n_panels: int, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature weight vectors of the integral estimator.

    Composite trapezoid over the window-local variable sigma in [0, tau]
    with n_panels uniform panels, folded together with the kernel weights
    (tau - 2*sigma) for y and sigma*(tau - sigma) for u and the leading
    -6/tau^3 factor.  F_est = wy @ ys + alpha * (wu @ us).
    """
    if n_panels < 2:
        raise InvalidWindowError("estimator needs at least 2 panels")
    sigma = np.linspace(0.0, tau, n_panels + 1)
    trap = np.full(n_panels + 1, tau / n_panels)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    scale = -6.0 / tau**3
    wy = scale * (tau - 2.0 * sigma) * trap
    wu = scale * sigma * (tau - sigma) * trap
    return wy, wu


def f_estimate(window: SampleWindow, alpha: float, tau: float) -> float:
    """Algebraic estimate of the lumped dynamics term F.

    Evaluates -6/tau^3 * integral of [(tau-2*sigma)*y + alpha*sigma*
    (tau-sigma)*u] over the trailing tau of the window, sigma measured
    from the window start.  Exact (up to quadrature error) for affine y
    and constant u; a constant offset in y is annihilated.

    Args:
        window: uniformly spaced samples spanning at least tau.
        alpha: ultra-local input gain.
        tau: estimation horizon (day).

    Returns:
        F_est in the units of dy/dt.

    Raises:
        WindowTooShortError: window spans less than tau (warm-up).
        InvalidWindowError: spacing is non-uniform or does not tile tau.
    """
    times = np.asarray(window.times, dtype=float)
    if window.span < tau * (1.0 - 1e-9):
        raise WindowTooShortError(
            f"window spans {window.span:.6g} < tau={tau:.6g}")
    steps = np.diff(times)
    dt = float(steps[0])
    if np.any(np.abs(steps - dt) > 1e-9 * dt):
        raise InvalidWindowError("window samples are not uniformly spaced")
    n_panels = int(round(tau / dt))
    if abs(n_panels * dt - tau) > 1e-9 * tau:
        raise InvalidWindowError("window spacing does not tile tau")
    wy, wu = estimator_weights(n_panels, tau)
    ys = np.asarray(window.ys, dtype=float)[-(n_panels + 1):]
    us = np.asarray(window.us, dtype=float)[-(n_panels + 1):]
    return float(wy @ ys) + alpha * float(wu @ us)


def ip_control(f_est: float, y: float, y_star: float, y_star_dot: float,
               cfg: ControllerConfig) -> float:
    """Intelligent proportional law; returns the raw stock command V.

    No clamping happens here; actuator limits live with the pulse planner.
    """
    e = y - y_star
    return (-f_est + y_star_dot + cfg.error_sign * cfg.k_p * e) / cfg.alpha


@dataclass(frozen=True)
class IdealLoopResult:
    """Trace of the estimator-in-the-loop run on the ideal plant."""

    times: np.ndarray
    ys: np.ndarray
    us: np.ndarray
    f_ests: np.ndarray
    warmup_end: float


def simulate_ideal_loop(f_const: float, cfg: ControllerConfig,
                        y0: float, y_ref: float, t_end: float,
                        h: float = 0.002) -> IdealLoopResult:
    """Close the loop on the exact ultra-local plant ydot = F + alpha*u.

    The plant is integrated with RK4 at step h; the control is evaluated
    continuously inside the integration stages while F_est is refreshed
    once per step from the trailing window (F_est = 0 until the window
    spans tau).  With a constant F the tracking error should contract as
    exp(-k_p * t) once the warm-up transient has left the window, which
    is the validation this harness exists for.

    Args:
        f_const: the constant F of the ideal plant.
        cfg: controller gains; cfg.tau sets the estimation window.
        y0: initial output.
        y_ref: constant-hold reference value.
        t_end: simulated horizon (day).
        h: step size (day); must tile cfg.tau.

    Returns:
        IdealLoopResult with per-step samples; warmup_end marks the first
        instant the estimator is live.
    """
    n = int(round(t_end / h))
    m = int(round(cfg.tau / h))
    if abs(m * h - cfg.tau) > 1e-9 * cfg.tau:
        raise ValueError("h must tile cfg.tau")
    wy, wu = estimator_weights(m, cfg.tau)
    alpha, k_p, sign = cfg.alpha, cfg.k_p, cfg.error_sign
    ys = np.empty(n + 1)
    us = np.empty(n + 1)
    f_ests = np.zeros(n + 1)
    ys[0] = y0
    u_prev = 0.0
    for k in range(n + 1):
        if k >= m:
            u_win = us[k - m:k + 1].copy()
            u_win[-1] = u_prev  # newest sample carries zero weight anyway
            fest = float(wy @ ys[k - m:k + 1]) + alpha * float(wu @ u_win)
        else:
            fest = 0.0
        f_ests[k] = fest
        us[k] = (-fest + sign * k_p * (ys[k] - y_ref)) / alpha
        u_prev = us[k]
        if k == n:
            break

        def ydot(y):
            u = (-fest + sign * k_p * (y - y_ref)) / alpha
            return f_const + alpha * u

        y = ys[k]
        k1 = ydot(y)
        k2 = ydot(y + 0.5 * h * k1)
        k3 = ydot(y + 0.5 * h * k2)
        k4 = ydot(y + h * k3)
        ys[k + 1] = y + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
    times = np.arange(n + 1) * h
    return IdealLoopResult(times, ys, us, f_ests, warmup_end=m * h)
