"""
Scenario Runner for the distributed average tracking simulator.
Resolves a validated scenario into concrete graph, signals, gains and
integration settings, then drives the simulation.
"""

from dataclasses import dataclass
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

# Local imports
from config.settings import Config
from core.gains import GainReport, GainSet, synthesize_gains_alg1, synthesize_gains_alg2, verify_gains
from core.graph import Graph, Spectrum, spectrum
from core.signals import (InputSignal, SignalBounds, estimate_bounds, make_case1_signal,
                          make_case2_signal, make_signal, profile_from_terms)
from core.simulation import SimConfig, Trajectory, initialize, run
from utils.presets import replication_initial_conditions
from utils.validators import Scenario, scenario_graph

DEFAULT_HORIZONS = {1: 20.0, 2: 30.0}


@dataclass
class RunPlan:
    """Everything needed to execute one scenario."""

    scenario: Scenario
    graph: Graph
    spectrum: Spectrum
    signals: List[InputSignal]
    x0: np.ndarray
    v0: np.ndarray
    sim: SimConfig
    bounds: SignalBounds
    gains: GainSet
    report: GainReport

    @property
    def algorithm(self) -> int:
        return self.scenario.algorithm

    def metadata(self) -> Dict[str, Any]:
        return {
            'scenario': self.scenario.to_document(),
            'graph': self.graph.to_dict(),
            'spectrum': self.spectrum.to_dict(),
            'bounds': self.bounds.to_dict(),
            'gains': self.gains.to_dict(),
            'gain_report': self.report.to_dict(),
            'sim': self.sim.to_dict(),
        }


def apply_overrides(scenario: Scenario, step: Optional[float] = None,
                    horizon: Optional[float] = None, integrator: Optional[str] = None,
                    boundary_layer: Optional[float] = None,
                    margin: Optional[float] = None) -> Scenario:
    """
    Overlay command-line values on a scenario.

    A margin switches the gains to automatic synthesis with that margin.
    """
    sim_updates = {k: v for k, v in (('step', step), ('horizon', horizon),
                                     ('integrator', integrator),
                                     ('boundary_layer', boundary_layer)) if v is not None}
    data = scenario.model_dump()
    data['sim'].update(sim_updates)
    if margin is not None:
        data['gains'] = {'mode': 'auto', 'margin': margin}
    return Scenario.model_validate(data)


class ScenarioRunner:
    """
    Runner that turns scenarios into trajectories.

    This class provides functionality to:
    - Fill unset scenario values from the configuration
    - Build signals and initial conditions, including the replication presets
    - Estimate signal bounds and synthesize or verify gains
    - Execute the simulation
    """

    def __init__(self, config: Config):
        """
        Initialize the runner.

        Args:
            config: Application configuration supplying defaults
        """
        self.config = config
        self.runs_completed = 0
        self.runs_failed = 0

    def resolve(self, scenario: Scenario) -> Scenario:
        """Return a copy of scenario with every sim, bounds and gains default made explicit."""
        data = scenario.model_dump()
        sim = data['sim']
        defaults = {
            'step': self.config.DEFAULT_STEP,
            'horizon': DEFAULT_HORIZONS[scenario.algorithm],
            'integrator': self.config.DEFAULT_INTEGRATOR,
            'record_every': self.config.RECORD_EVERY,
            'match_initialization': False,
            'boundary_layer': 0.0,
            'divergence_cap': self.config.DIVERGENCE_CAP,
        }
        for key, value in defaults.items():
            if sim.get(key) is None:
                sim[key] = value

        bounds = data['bounds']
        for key, value in (('horizon', sim['horizon']),
                           ('grid_step', self.config.BOUND_GRID_STEP),
                           ('safety', self.config.BOUND_SAFETY)):
            if bounds.get(key) is None:
                bounds[key] = value

        if data['gains']['mode'] == 'auto' and data['gains'].get('margin') is None:
            data['gains']['margin'] = self.config.DEFAULT_MARGIN
        return Scenario.model_validate(data)

    def build_signals(self, scenario: Scenario, n: int) -> List[InputSignal]:
        spec = scenario.signals
        if spec.preset is not None:
            factory = make_case1_signal if spec.preset == 'paper_case1' else make_case2_signal
            signals = [factory(i) for i in range(1, n + 1)]
            if spec.scale is not None:
                signals = [make_signal(s.index, s.profile, s.r0, s.v0, spec.scale[k])
                           for k, s in enumerate(signals)]
            for k, signal in enumerate(signals):
                if spec.r0 is not None:
                    signal.r0 = np.asarray(spec.r0[k], dtype=float)
                if spec.v0 is not None:
                    signal.v0 = np.asarray(spec.v0[k], dtype=float)
                signal.reset()
            return signals

        if spec.profile is not None:
            profile = profile_from_terms([[t.model_dump() for t in axis] for axis in spec.profile])
            zeros = [[0.0] * profile.dim] * n
            r0 = spec.r0 if spec.r0 is not None else zeros
            v0 = spec.v0 if spec.v0 is not None else zeros
            scales = spec.scale if spec.scale is not None else [None] * n
            return [make_signal(i + 1, profile, r0[i], v0[i], scales[i]) for i in range(n)]

        signals = []
        for i, agent in enumerate(spec.agents):
            profile = profile_from_terms([[t.model_dump() for t in axis] for axis in agent.profile])
            zeros = [0.0] * profile.dim
            signals.append(make_signal(i + 1, profile, agent.r0 or zeros, agent.v0 or zeros,
                                       agent.scale))
        return signals

    @staticmethod
    def initial_conditions(scenario: Scenario) -> Tuple[np.ndarray, np.ndarray]:
        spec = scenario.initial_conditions
        if spec.preset == 'paper':
            return replication_initial_conditions()
        return np.asarray(spec.x0, dtype=float), np.asarray(spec.v0, dtype=float)

    def prepare(self, scenario: Scenario) -> RunPlan:
        """
        Resolve a scenario into a RunPlan.

        Args:
            scenario: Validated scenario

        Returns:
            RunPlan with gains synthesized (auto mode) or taken verbatim
            (explicit mode), and their verification report

        Raises:
            DatError: From any module while building the plan
        """
        scenario = self.resolve(scenario)
        g = scenario_graph(scenario)
        spec = spectrum(g, tol=self.config.EIGEN_TOL)
        signals = self.build_signals(scenario, g.n)
        x0, v0 = self.initial_conditions(scenario)

        sim_spec = scenario.sim
        sim = SimConfig(step=sim_spec.step, horizon=sim_spec.horizon,
                        integrator=sim_spec.integrator, record_every=sim_spec.record_every,
                        match_initialization=sim_spec.match_initialization,
                        boundary_layer=sim_spec.boundary_layer,
                        divergence_cap=sim_spec.divergence_cap,
                        upsilon0=None if sim_spec.upsilon0 is None else np.asarray(sim_spec.upsilon0))

        if sim.match_initialization:
            for k, signal in enumerate(signals):
                signal.r0, signal.v0 = x0[k].copy(), v0[k].copy()
                signal.reset()
        elif scenario.algorithm == 1:
            logger.warning("Algorithm 1 without matched initialization; the sums of positions "
                           "and references are not conserved")

        b = scenario.bounds
        bounds = estimate_bounds(signals, b.horizon, b.grid_step, b.safety)

        gains_spec = scenario.gains
        if gains_spec.mode == 'auto':
            if scenario.algorithm == 1:
                gains = synthesize_gains_alg1(spec, g.n, bounds.a_bar_d, gains_spec.margin)
            else:
                gains = synthesize_gains_alg2(spec, g.n, bounds, gains_spec.margin)
        else:
            gains = GainSet(algorithm=scenario.algorithm, alpha=gains_spec.alpha,
                            beta=gains_spec.beta, gamma=gains_spec.gamma,
                            kappa=gains_spec.kappa if scenario.algorithm == 2 else None)

        report = verify_gains(gains, spec, g.n, bounds)
        logger.info(f"Prepared scenario '{scenario.name}': n={g.n}, lambda2={spec.lambda2:.4g}, "
                    f"gains {gains.provenance}, verification {'passed' if report.passed else 'failed'}")
        return RunPlan(scenario=scenario, graph=g, spectrum=spec, signals=signals, x0=x0, v0=v0,
                       sim=sim, bounds=bounds, gains=gains, report=report)

    def execute(self, plan: RunPlan) -> Trajectory:
        """Integrate a prepared plan; DivergenceError propagates with its partial trajectory."""
        state = initialize(plan.graph, plan.signals, plan.x0, plan.v0, plan.sim,
                           plan.algorithm, plan.gains)
        try:
            trajectory = run(state, plan.graph, plan.gains, plan.sim, plan.algorithm, plan.signals)
        except Exception:
            self.runs_failed += 1
            raise
        self.runs_completed += 1
        return trajectory

    def get_runner_stats(self) -> Dict[str, Any]:
        return {
            'runs_completed': self.runs_completed,
            'runs_failed': self.runs_failed,
            'config': {
                'step': self.config.DEFAULT_STEP,
                'integrator': self.config.DEFAULT_INTEGRATOR,
                'margin': self.config.DEFAULT_MARGIN,
                'bound_safety': self.config.BOUND_SAFETY,
            },
            'timestamp': datetime.now().isoformat(),
        }
