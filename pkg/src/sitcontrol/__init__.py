"""Simulation and control engine for impulsive sterile-mosquito releases.

Couples a four-compartment mosquito population model with a model-free
(ultra-local) controller and a pulse planner that turns the continuous
stock command into saturated releases every few days.
"""

from .epi import EpiParams, critical_vector_pop, r0
from .experiments import (
    MonteCarloConfig,
    RunMetrics,
    RunResult,
    Scenario,
    calibrate_alpha,
    j6_scenario,
    mismatch_scenario,
    nominal_scenario,
    run_monte_carlo,
    run_scenario,
)
from .mfc import (
    ControllerConfig,
    ReferenceTrajectory,
    SampleWindow,
    f_estimate,
    ip_control,
    reference,
)
from .plant import (
    ModelParams,
    NOMINAL_PARAMS,
    SimGrid,
    SystemState,
    apply_pulse,
    derivatives,
    integrate,
    step_rk4,
    wild_equilibrium,
)
from .pulse import (
    PulseConfig,
    PulseTrain,
    plan_step,
    predict_tail_mean,
    pulse_amplitude,
    unit_pulse_means,
)

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig", "EpiParams", "ModelParams", "MonteCarloConfig",
    "NOMINAL_PARAMS", "PulseConfig", "PulseTrain", "ReferenceTrajectory",
    "RunMetrics", "RunResult", "SampleWindow", "Scenario", "SimGrid",
    "SystemState", "apply_pulse", "calibrate_alpha", "critical_vector_pop",
    "derivatives", "f_estimate", "integrate", "ip_control", "j6_scenario",
    "mismatch_scenario", "nominal_scenario", "plan_step", "predict_tail_mean",
    "pulse_amplitude", "r0", "reference", "run_monte_carlo", "run_scenario",
    "step_rk4", "unit_pulse_means", "wild_equilibrium",
]
