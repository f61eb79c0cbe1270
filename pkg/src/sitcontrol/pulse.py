"""Impulsive release planning from first-order impulse-response superposition.

A pulse of amplitude d released on day k adds d*exp(-delta_S*(t-k)) to the
sterile stock for t > k.  Sampling daily, the planner sizes each pulse so
that the predicted mean stock across the coming inter-release window of J
days equals the continuous command V(k), crediting the tails of all past
pulses, and clamps the result to [0, u_max].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class SchedulingError(ValueError):
    """Release requested on a non-release day or out of order."""


@dataclass(frozen=True)
class PulseConfig:
    """Release cadence, assumed stock decay, and actuator bound.

    delta_S_nominal is the planner's belief about the sterile-male death
    rate; the simulated plant may use a different value (robustness
    experiments do exactly that).
    """

    period_J: int = 3
    delta_S_nominal: float = 0.12
    u_max: float = 1e6
    sampling: float = 1.0  # day; the planner's formulas assume daily samples

    def __post_init__(self):
        if self.period_J < 1 or self.period_J != int(self.period_J):
            raise ValueError("PulseConfig.period_J must be an integer >= 1")
        if self.delta_S_nominal <= 0.0:
            raise ValueError("PulseConfig.delta_S_nominal must be positive")
        if self.u_max < 0.0:
            raise ValueError("PulseConfig.u_max must be >= 0")
        if self.sampling != 1.0:
            raise ValueError("only daily sampling is implemented")


@dataclass(frozen=True)
class PulseTrain:
    """Ordered (day, amplitude) release schedule, days congruent mod period."""

    period_J: int
    entries: tuple[tuple[int, float], ...] = field(default=())

    def append(self, day: int, amplitude: float) -> "PulseTrain":
        if day % self.period_J != 0:
            raise SchedulingError(f"day {day} is not a multiple of {self.period_J}")
        if self.entries and day <= self.entries[-1][0]:
            raise SchedulingError(f"day {day} does not follow {self.entries[-1][0]}")
        if amplitude < 0.0:
            raise ValueError("pulse amplitude must be >= 0")
        return PulseTrain(self.period_J, self.entries + ((day, float(amplitude)),))

    @property
    def total_released(self) -> float:
        return sum(a for _, a in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def unit_pulse_means(delta_S: float, J: int) -> float:
    """Mean of the unit impulse response over the J days after release.

    The stock response to a unit pulse, sampled m = 1..J days later, is
    exp(-delta_S*m); the planner divides by the mean of those samples.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    if delta_S <= 0.0:
        raise ValueError("delta_S must be positive")
    return sum(math.exp(-delta_S * m) for m in range(1, J + 1)) / J


def predict_tail_mean(history: PulseTrain, delta_S: float, k: int, J: int) -> float:
    """Mean free stock over days k+1..k+J contributed by past pulses.

    Superposition of the decayed responses of every pulse in history,
    sampled at the J days following day k.

    Raises:
        SchedulingError: history contains a pulse later than day k.
    """
    if history.entries and history.entries[-1][0] > k:
        raise SchedulingError("history contains pulses after day k")
    acc = 0.0
    for day, amplitude in history.entries:
        if amplitude == 0.0:
            continue
        acc += amplitude * sum(math.exp(-delta_S * (k + m - day))
                               for m in range(1, J + 1))
    return acc / J


def pulse_amplitude(v_k: float, tail_mean: float, unit_mean: float,
                    u_max: float) -> float:
    """Pulse size making the predicted window-mean stock equal v_k.

    Solves tail_mean + d*unit_mean = v_k for d, then clamps to [0, u_max]:
    males already in the field cannot be recalled, and a single release
    cannot exceed the actuator bound.
    """
    if unit_mean <= 0.0:
        raise ValueError("unit_mean must be positive")
    raw = (v_k - tail_mean) / unit_mean
    return min(max(raw, 0.0), u_max)


def plan_step(day: int, v_k: float, history: PulseTrain,
              cfg: PulseConfig) -> PulseTrain:
    """Plan the release for one release day and append it to the train."""
    if day % cfg.period_J != 0:
        raise SchedulingError(f"day {day} is not a release day (J={cfg.period_J})")
    unit = unit_pulse_means(cfg.delta_S_nominal, cfg.period_J)
    tail = predict_tail_mean(history, cfg.delta_S_nominal, day, cfg.period_J)
    return history.append(day, pulse_amplitude(v_k, tail, unit, cfg.u_max))


def sustainable_stock_bound(cfg: PulseConfig) -> float:
    """Largest window-mean stock an endlessly saturated train can hold.

    With every pulse at u_max the responses form a geometric series; the
    achieved window mean is u_max * unit_mean / (1 - exp(-delta_S*J)).
    Commands above this level are unrealizable and the planner saturates.
    """
    unit = unit_pulse_means(cfg.delta_S_nominal, cfg.period_J)
    return cfg.u_max * unit / (1.0 - math.exp(-cfg.delta_S_nominal * cfg.period_J))


def predicted_stock(history: PulseTrain, delta_S: float, day: int) -> float:
    """Planner-predicted stock on an integer day.

    Daily samples are taken before that day's release, so only pulses on
    strictly earlier days contribute.
    """
    acc = 0.0
    for d, amplitude in history.entries:
        if d < day:
            acc += amplitude * math.exp(-delta_S * (day - d))
    return acc
