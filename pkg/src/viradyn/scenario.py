"""End-to-end simulation scenarios, clinical metrics, and preset suites.

A scenario bundles a model variant, its parameters, a treatment
schedule, a uniform mesh, and an initial state.  Running one yields the
RK4 trajectory plus a :class:`MetricSet` summarising it: the final
state, the viral-load peak, the treatment-window minimum, total days
spent under the 50 copies/mm^3 suppression threshold, and the first
post-treatment day at which the viral load rebounds to twice its
end-of-treatment value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .analysis import (
    EquilibriumKind,
    eigen3,
    equilibria,
    evaluate_linearized,
    fit_linearized,
    jacobian,
)
from .errors import IntegrationBlowupError
from .integrator import MeshSpec, Trajectory, integrate
from .model import (
    EfficacySchedule,
    ModelKind,
    ModelParams,
    SystemState,
    vector_field,
)

__all__ = [
    "SUPPRESSION_THRESHOLD",
    "ScenarioConfig",
    "MetricSet",
    "ScenarioResult",
    "LinearizationComparison",
    "compute_metrics",
    "run",
    "run_matrix",
    "compare_linearization",
    "reference_scenarios",
    "DEFAULT_INITIAL",
    "SURVEY_INITIALS",
    "TWO_CONTROL_DOSAGES",
    "COMBINED_DOSAGES",
    "TREATMENT_START",
    "TREATMENT_END",
]

#: therapy aims to push the viral load below this (copies/mm^3)
SUPPRESSION_THRESHOLD = 50.0

#: default initial state used by the CLI and the treated presets
DEFAULT_INITIAL = SystemState(1200.0, 0.0, 100.0)

#: spread of initial conditions exercised by the untreated preset suite
SURVEY_INITIALS = (
    SystemState(500.0, 1e-6, 60.0),
    SystemState(800.0, 10.0, 70.0),
    SystemState(1000.0, 50.0, 30.0),
    SystemState(1200.0, 0.0, 100.0),
)

TWO_CONTROL_DOSAGES = (0.0, 0.2, 0.3, 0.5)
COMBINED_DOSAGES = (0.0, 0.4, 0.6, 0.7)
TREATMENT_START = 150.0
TREATMENT_END = 400.0


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ModelKind
    params: ModelParams
    mesh: MeshSpec
    initial: SystemState
    schedule: EfficacySchedule
    label: str = ""

    def __post_init__(self):
        for name, value in (("T", self.initial.T), ("T_star", self.initial.T_star),
                            ("V", self.initial.V)):
            if value < 0.0:
                raise ValueError(f"initial {name} must be non-negative, got {value!r}")
        for seg in self.schedule.segments:
            if seg.t_start < self.mesh.a or seg.t_end > self.mesh.b:
                raise ValueError(
                    f"treatment window [{seg.t_start}, {seg.t_end}) falls outside "
                    f"the mesh [{self.mesh.a}, {self.mesh.b}]"
                )


@dataclass(frozen=True)
class MetricSet:
    final_state: SystemState
    peak_viral_load: float
    peak_viral_load_day: float
    min_viral_load_during_treatment: float | None
    min_viral_load_during_treatment_day: float | None
    suppression_days: float
    rebound_day: float | None


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    trajectory: Trajectory
    metrics: MetricSet


def compute_metrics(trajectory: Trajectory, schedule: EfficacySchedule) -> MetricSet:
    """Derive the metric set from a trajectory; recomputable at any time."""
    times = trajectory.times
    viral = trajectory.states[:, 2]
    h = trajectory.h

    i_peak = int(np.argmax(viral))

    min_treat = min_treat_day = None
    if schedule.segments:
        mask = np.zeros(len(times), dtype=bool)
        for seg in schedule.segments:
            mask |= (times >= seg.t_start) & (times < seg.t_end)
        if mask.any():
            idx = np.flatnonzero(mask)
            i_min = idx[int(np.argmin(viral[idx]))]
            min_treat = float(viral[i_min])
            min_treat_day = float(times[i_min])

    # left-endpoint rule so the total never exceeds the simulated span
    suppression = h * int(np.count_nonzero(viral[:-1] < SUPPRESSION_THRESHOLD))

    rebound = None
    if schedule.segments:
        t_end = max(seg.t_end for seg in schedule.segments)
        if t_end < times[-1]:
            i_end = int(np.searchsorted(times, t_end, side="left"))
            v_end = viral[i_end]
            after = np.flatnonzero((times > t_end) & (viral >= 2.0 * v_end))
            if after.size:
                rebound = float(times[after[0]])

    return MetricSet(
        final_state=SystemState.from_array(trajectory.states[-1]),
        peak_viral_load=float(viral[i_peak]),
        peak_viral_load_day=float(times[i_peak]),
        min_viral_load_during_treatment=min_treat,
        min_viral_load_during_treatment_day=min_treat_day,
        suppression_days=float(suppression),
        rebound_day=rebound,
    )


def run(config: ScenarioConfig) -> ScenarioResult:
    """Integrate the configured model and attach metrics."""
    f = vector_field(config.kind, config.params, config.schedule)
    try:
        trajectory = integrate(f, config.mesh, config.initial.as_array())
    except IntegrationBlowupError as err:
        raise IntegrationBlowupError(err.t, err.stage, step=err.step,
                                     label=config.label or None) from None
    return ScenarioResult(config, trajectory, compute_metrics(trajectory, config.schedule))


def run_matrix(base: ScenarioConfig,
               efficacy_levels: list[tuple[float, float]]) -> list[ScenarioResult]:
    """One run per (u1, u2) level, windows kept, efficacies replaced."""
    if not efficacy_levels:
        raise ValueError("need at least one efficacy level")
    results = []
    for i, (u1, u2) in enumerate(efficacy_levels):
        cfg = replace(
            base,
            schedule=base.schedule.with_efficacies(u1, u2),
            label=f"{base.label or 'matrix'}[{i}:u1={u1:g},u2={u2:g}]",
        )
        results.append(run(cfg))
    return results


@dataclass(frozen=True)
class LinearizationComparison:
    """Nonlinear trajectory vs. modal linearized solution around the
    infected equilibrium, both started from the same perturbation."""

    times: np.ndarray
    nonlinear: np.ndarray          # states of the full model, rows per time
    linearized: np.ndarray         # equilibrium + modal solution, same shape
    perturbation: np.ndarray
    component_max: np.ndarray      # per-component max |nonlinear - linearized|

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.component_max))


def compare_linearization(config: ScenarioConfig, perturbation) -> LinearizationComparison:
    """Run the nonlinear model and its linearization from equilibrium + perturbation.

    Requires the BASIC model, an existing infected equilibrium, and a
    perturbation no larger than 10 in any component (the linearization
    is local).  The configured initial state is ignored; integration
    starts from the perturbed equilibrium over the configured mesh.
    """
    if config.kind is not ModelKind.BASIC:
        raise ValueError("linearization comparison is defined for the basic model")
    perturbation = np.asarray(perturbation, dtype=float)
    if perturbation.shape != (3,):
        raise ValueError("perturbation must be a 3-vector")
    if np.any(np.abs(perturbation) > 10.0):
        raise ValueError("perturbation components must not exceed 10 in magnitude")

    infected = [eq for eq in equilibria(config.params, 0.0, 0.0, config.kind)
                if eq.kind is EquilibriumKind.INFECTED]
    if not infected:
        raise ValueError("no infected equilibrium exists for these parameters")
    eq_point = infected[0].point
    eq = eq_point.as_array()

    nonlinear_cfg = replace(config, initial=SystemState.from_array(eq + perturbation),
                            label=config.label or "linearization-check")
    trajectory = run(nonlinear_cfg).trajectory

    sol = fit_linearized(eigen3(jacobian(config.params, 0.0, 0.0, config.kind, eq_point)),
                         perturbation)
    tau = trajectory.times - trajectory.times[0]
    linearized = eq + np.array([evaluate_linearized(sol, t) for t in tau])

    diff = np.abs(trajectory.states - linearized)
    return LinearizationComparison(
        times=trajectory.times,
        nonlinear=trajectory.states,
        linearized=linearized,
        perturbation=perturbation,
        component_max=diff.max(axis=0),
    )


def reference_scenarios(params: ModelParams | None = None,
                        h: float = 0.1) -> list[ScenarioConfig]:
    """The built-in suite behind the ``reproduce`` command.

    Untreated runs from four initial states over [0, 400]; dosage
    matrices for both treated variants with the therapy window
    [150, 400) inside a 600-day horizon; and continuous-therapy variants
    whose window never closes.
    """
    params = params or ModelParams()
    untreated_mesh = MeshSpec(0.0, 400.0, h)
    treated_mesh = MeshSpec(0.0, 600.0, h)
    window = (TREATMENT_START, TREATMENT_END)

    scenarios = [
        ScenarioConfig(ModelKind.BASIC, params, untreated_mesh, state,
                       EfficacySchedule(), label=f"basic-T0-{state.T:g}")
        for state in SURVEY_INITIALS
    ]
    scenarios += [
        ScenarioConfig(ModelKind.TWO_CONTROL, params, treated_mesh, DEFAULT_INITIAL,
                       EfficacySchedule.window(*window, u, u),
                       label=f"two-control-u{u:g}")
        for u in TWO_CONTROL_DOSAGES
    ]
    scenarios += [
        ScenarioConfig(ModelKind.COMBINED, params, treated_mesh, DEFAULT_INITIAL,
                       EfficacySchedule.window(*window, 0.0, u),
                       label=f"combined-u{u:g}")
        for u in COMBINED_DOSAGES
    ]
    scenarios.append(
        ScenarioConfig(ModelKind.TWO_CONTROL, params, treated_mesh, DEFAULT_INITIAL,
                       EfficacySchedule.window(TREATMENT_START, 600.0, 0.5, 0.5),
                       label="two-control-u0.5-continuous")
    )
    scenarios.append(
        ScenarioConfig(ModelKind.COMBINED, params, treated_mesh, DEFAULT_INITIAL,
                       EfficacySchedule.window(TREATMENT_START, 600.0, 0.0, 0.7),
                       label="combined-u0.7-continuous")
    )
    return scenarios
