"""Four-compartment mosquito population model and its fixed-step integrator.

State variables:
    x1 — viable eggs / aquatic phase (pupae and larvae lumped in)
    x2 — wild males
    x3 — females fertilized by wild males
    x4 — sterile males

Sterile males enter through the release rate u (continuous) or through
instantaneous pulses (apply_pulse).  The wild steady state with no
releases (wild_equilibrium) is the standard initial condition for all
suppression experiments.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

logger = logging.getLogger(__name__)

UFunc = Optional[Callable[[float], float]]


class InvalidStateError(ValueError):
    """State handed to the dynamics contains non-finite components."""


class IntegrationBlowupError(RuntimeError):
    """Integration produced a non-finite state; carries the failure time."""

    def __init__(self, t: float):
        super().__init__(f"integration blew up at t={t:.6g}")
        self.t = t


class SystemState(NamedTuple):
    """Population sizes of the four compartments (individuals)."""

    x1: float
    x2: float
    x3: float
    x4: float


@dataclass(frozen=True)
class ModelParams:
    """Biological rate constants of the population model.

    Attributes:
        beta_E: egg-laying rate (1/day).
        cap_K: egg carrying capacity (individuals).
        nu_E: aquatic-to-adult transition rate (1/day).
        delta_E: aquatic-phase death rate (1/day).
        nu: probability that an emerging adult is female, in (0, 1).
        delta_M: wild-male death rate (1/day).
        gamma_S: mating preference factor for sterile males (>= 0).
        delta_F: fertilized-female death rate (1/day).
        delta_S: sterile-male death rate (1/day).
    """

    beta_E: float
    cap_K: float
    nu_E: float
    delta_E: float
    nu: float
    delta_M: float
    gamma_S: float
    delta_F: float
    delta_S: float

    def __post_init__(self):
        for name in ("beta_E", "cap_K", "nu_E", "delta_E", "delta_M",
                     "delta_F", "delta_S"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"ModelParams.{name} must be positive, got {value!r}")
        if not (0.0 < self.nu < 1.0):
            raise ValueError(f"ModelParams.nu must lie in (0, 1), got {self.nu!r}")
        if not (math.isfinite(self.gamma_S) and self.gamma_S >= 0.0):
            raise ValueError(f"ModelParams.gamma_S must be >= 0, got {self.gamma_S!r}")


#: Nominal parameter set used throughout the suppression experiments.
NOMINAL_PARAMS = ModelParams(
    beta_E=10.0,
    cap_K=22200.0,
    nu_E=0.05,
    delta_E=0.03,
    nu=0.49,
    delta_M=0.1,
    gamma_S=1.0,
    delta_F=0.04,
    delta_S=0.12,
)


@dataclass(frozen=True)
class SimGrid:
    """Integration grid: [t0, t_end] at step h, sampled every sample_every days."""

    t0: float = 0.0
    t_end: float = 400.0
    h: float = 0.01
    sample_every: float = 1.0

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError(f"SimGrid.h must be positive, got {self.h!r}")
        if self.t_end <= self.t0:
            raise ValueError("SimGrid.t_end must exceed t0")
        ratio = self.sample_every / self.h
        if abs(ratio - round(ratio)) > 1e-12 * max(1.0, abs(ratio)):
            raise ValueError("SimGrid.sample_every must be an integer multiple of h")
        spans = (self.t_end - self.t0) / self.sample_every
        if abs(spans - round(spans)) > 1e-12 * max(1.0, abs(spans)):
            raise ValueError("SimGrid horizon must be an integer number of samples")

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.sample_every / self.h))

    @property
    def n_samples(self) -> int:
        """Number of sampling intervals (samples = n_samples + 1)."""
        return int(round((self.t_end - self.t0) / self.sample_every))


def derivatives(state: SystemState, params: ModelParams, u: float = 0.0) -> SystemState:
    """Time derivative of the four compartments.

    The fertilization term is declared zero when x1 + gamma_S*x4 == 0; the
    production numerator vanishes there as well, so this is the removable
    limit, not a model change.

    Args:
        state: current compartment sizes.
        params: model rate constants.
        u: sterile-male release rate (individuals/day).

    Returns:
        SystemState holding (dx1/dt, dx2/dt, dx3/dt, dx4/dt).

    Raises:
        InvalidStateError: any component of state or u is non-finite.
    """
    x1, x2, x3, x4 = state
    if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(x3)
            and math.isfinite(x4) and math.isfinite(u)):
        raise InvalidStateError(f"non-finite input: state={state}, u={u!r}")
    p = params
    denom = x1 + p.gamma_S * x4
    fertilization = p.nu * p.nu_E * x1 * x2 / denom if denom > 0.0 else 0.0
    return SystemState(
        p.beta_E * x3 * (1.0 - x1 / p.cap_K) - (p.nu_E + p.delta_E) * x1,
        (1.0 - p.nu) * p.nu_E * x1 - p.delta_M * x2,
        fertilization - p.delta_F * x3,
        u - p.delta_S * x4,
    )


def step_rk4(state: SystemState, params: ModelParams, u_fn: UFunc,
             t: float, h: float) -> SystemState:
    """One classical 4th-order Runge-Kutta step from t to t+h.

    Negative components, which can appear from truncation error very close
    to zero, are clamped to 0 after the step.

    Args:
        state: state at time t.
        params: model rate constants.
        u_fn: release rate as a function of time, or None for u == 0.
        t: current time (day).
        h: step size (day), > 0.

    Returns:
        State at t + h.

    Raises:
        IntegrationBlowupError: the step produced a non-finite state.
    """
    if h <= 0.0:
        raise ValueError("step size h must be positive")
    if u_fn is None:
        u1 = u2 = u4 = 0.0
    else:
        u1 = u_fn(t)
        u2 = u_fn(t + 0.5 * h)
        u4 = u_fn(t + h)
    k1 = derivatives(state, params, u1)
    mid1 = SystemState(*(s + 0.5 * h * k for s, k in zip(state, k1)))
    k2 = derivatives(mid1, params, u2)
    mid2 = SystemState(*(s + 0.5 * h * k for s, k in zip(state, k2)))
    k3 = derivatives(mid2, params, u2)
    end = SystemState(*(s + h * k for s, k in zip(state, k3)))
    k4 = derivatives(end, params, u4)
    sixth = h / 6.0
    new = [s + sixth * (a + 2.0 * (b + c) + d)
           for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
    if not math.isfinite(new[0] + new[1] + new[2] + new[3]):
        raise IntegrationBlowupError(t + h)
    return SystemState(*(x if x >= 0.0 else 0.0 for x in new))


def integrate(state: SystemState, params: ModelParams, u_fn: UFunc,
              t0: float, t1: float, h: float) -> SystemState:
    """Integrate the model from t0 to t1 with fixed step h.

    (t1 - t0) must be an integer number of steps.  With u_fn=None the
    stepping is inlined on scalar floats; this path carries the Monte
    Carlo load and is roughly 10x faster than chained step_rk4 calls.
    """
    n = int(round((t1 - t0) / h))
    if abs(n * h - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValueError("(t1 - t0) is not an integer number of steps")
    if u_fn is not None:
        for i in range(n):
            state = step_rk4(state, params, u_fn, t0 + i * h, h)
        return state

    bE, K, nE, dE, v, dM, gS, dF, dS = (
        params.beta_E, params.cap_K, params.nu_E, params.delta_E, params.nu,
        params.delta_M, params.gamma_S, params.delta_F, params.delta_S)
    ne_de = nE + dE
    vnE = v * nE
    wE = (1.0 - v) * nE
    x1, x2, x3, x4 = state
    half = 0.5 * h
    sixth = h / 6.0
    clamped = 0
    for i in range(n):
        den = x1 + gS * x4
        a1 = bE * x3 * (1.0 - x1 / K) - ne_de * x1
        a2 = wE * x1 - dM * x2
        a3 = (vnE * x1 * x2 / den if den > 0.0 else 0.0) - dF * x3
        a4 = -dS * x4
        y1 = x1 + half * a1; y2 = x2 + half * a2; y3 = x3 + half * a3; y4 = x4 + half * a4
        den = y1 + gS * y4
        b1 = bE * y3 * (1.0 - y1 / K) - ne_de * y1
        b2 = wE * y1 - dM * y2
        b3 = (vnE * y1 * y2 / den if den > 0.0 else 0.0) - dF * y3
        b4 = -dS * y4
        y1 = x1 + half * b1; y2 = x2 + half * b2; y3 = x3 + half * b3; y4 = x4 + half * b4
        den = y1 + gS * y4
        c1 = bE * y3 * (1.0 - y1 / K) - ne_de * y1
        c2 = wE * y1 - dM * y2
        c3 = (vnE * y1 * y2 / den if den > 0.0 else 0.0) - dF * y3
        c4 = -dS * y4
        y1 = x1 + h * c1; y2 = x2 + h * c2; y3 = x3 + h * c3; y4 = x4 + h * c4
        den = y1 + gS * y4
        d1 = bE * y3 * (1.0 - y1 / K) - ne_de * y1
        d2 = wE * y1 - dM * y2
        d3 = (vnE * y1 * y2 / den if den > 0.0 else 0.0) - dF * y3
        d4 = -dS * y4
        x1 += sixth * (a1 + 2.0 * (b1 + c1) + d1)
        x2 += sixth * (a2 + 2.0 * (b2 + c2) + d2)
        x3 += sixth * (a3 + 2.0 * (b3 + c3) + d3)
        x4 += sixth * (a4 + 2.0 * (b4 + c4) + d4)
        if not math.isfinite(x1 + x2 + x3 + x4):
            raise IntegrationBlowupError(t0 + (i + 1) * h)
        if x1 < 0.0: x1 = 0.0; clamped += 1
        if x2 < 0.0: x2 = 0.0; clamped += 1
        if x3 < 0.0: x3 = 0.0; clamped += 1
        if x4 < 0.0: x4 = 0.0; clamped += 1
    if clamped:
        logger.debug("clamped %d negative components on [%g, %g]", clamped, t0, t1)
    return SystemState(x1, x2, x3, x4)


def apply_pulse(state: SystemState, amplitude: float) -> SystemState:
    """Instantaneous release: x4 jumps by amplitude, nothing else moves.

    Raises:
        ValueError: amplitude is negative or non-finite.
    """
    if not (math.isfinite(amplitude) and amplitude >= 0.0):
        raise ValueError(f"pulse amplitude must be >= 0, got {amplitude!r}")
    return SystemState(state.x1, state.x2, state.x3, state.x4 + amplitude)


def persistence_number(params: ModelParams) -> float:
    """Ratio whose value < 1 makes the positive wild equilibrium exist."""
    p = params
    return ((p.nu_E + p.delta_E) * p.delta_M * p.delta_F
            / (p.beta_E * p.nu * (1.0 - p.nu) * p.nu_E ** 2))


def wild_equilibrium(params: ModelParams) -> tuple[SystemState, bool]:
    """Steady state of the model with no sterile males.

    Closed form: x1* = K * (1 - r) with r = persistence_number(params),
    then x2* = (1-nu)*nu_E*x1*/delta_M and x3* = nu*nu_E*x2*/delta_F.

    Returns:
        (state, extinct).  When the persistence condition fails (r >= 1)
        the only equilibrium is extinction: the zero state is returned
        with extinct=True.
    """
    r = persistence_number(params)
    if r >= 1.0:
        return SystemState(0.0, 0.0, 0.0, 0.0), True
    x1 = params.cap_K * (1.0 - r)
    x2 = (1.0 - params.nu) * params.nu_E * x1 / params.delta_M
    x3 = params.nu * params.nu_E * x2 / params.delta_F
    return SystemState(x1, x2, x3, 0.0), False
