"""Ross-MacDonald reproduction number and the critical vector population.

Suppressing vectors below V_c = recovery*vector_death*host_pop /
(bite_rate^2 * p_v2h * p_h2v) drives the basic reproduction number under 1,
so no epidemic can start; that threshold is what the release campaign aims
the population at.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .plant import ModelParams


class NoTransmissionError(ValueError):
    """Transmission chain is broken; the critical population is unbounded."""


@dataclass(frozen=True)
class EpiParams:
    """Ross-MacDonald transmission parameters.

    recovery is the human recovery rate (inverse infectious period) and
    vector_death the adult vector death rate; both 1/day.  These are
    epidemiological constants, unrelated to the controller gain or the
    population model rates despite the traditional greek letters.
    """

    bite_rate: float
    p_v2h: float
    p_h2v: float
    host_pop: float
    recovery: float
    vector_death: float

    def __post_init__(self):
        for name in ("p_v2h", "p_h2v"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"EpiParams.{name} must lie in [0, 1], got {value!r}")
        for name in ("bite_rate", "host_pop", "recovery", "vector_death"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"EpiParams.{name} must be positive, got {value!r}")


def r0(params: EpiParams, vector_pop: float) -> float:
    """Basic reproduction number for a given vector population (linear in it)."""
    if vector_pop < 0.0:
        raise ValueError("vector_pop must be >= 0")
    return (params.bite_rate**2 * params.p_v2h * params.p_h2v * vector_pop
            / (params.recovery * params.vector_death * params.host_pop))


def critical_vector_pop(params: EpiParams) -> float:
    """Vector population V_c at which r0 equals exactly 1.

    Raises:
        NoTransmissionError: a transmission probability is zero, so r0 is
            identically zero and no finite threshold exists.
    """
    denom = params.bite_rate**2 * params.p_v2h * params.p_h2v
    if denom == 0.0:
        raise NoTransmissionError("p_v2h or p_h2v is zero; r0 is always 0")
    return params.recovery * params.vector_death * params.host_pop / denom


def epidemic_possible(params: EpiParams, vector_pop: float) -> bool:
    """True when the vector population sustains r0 > 1."""
    return r0(params, vector_pop) > 1.0


def egg_target_for_female_threshold(v_c: float, model: ModelParams) -> float:
    """Egg-population target whose steady state holds females at v_c.

    The disease-relevant class is the fertilized females x3.  Along the
    no-release steady-state relations x2 = (1-nu)*nu_E*x1/delta_M and
    x3 = nu*nu_E*x2/delta_F, a female threshold translates into an egg
    threshold by the inverse product of those factors.
    """
    factor = (model.nu * model.nu_E * (1.0 - model.nu) * model.nu_E
              / (model.delta_M * model.delta_F))
    return v_c / factor
