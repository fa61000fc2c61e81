"""
Simulation Module for the distributed average tracking simulator.
Integrates the closed loop with fixed-step schemes, records trajectories and
evaluates the tracking, conservation and Lyapunov diagnostics.
"""

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

# Local imports
from core.dynamics import SystemState, closed_loop_rhs, default_upsilon, filter_outputs
from core.errors import DivergenceError, ScenarioError
from core.gains import GainSet
from core.graph import Graph, centering_projector, spectrum
from core.signals import InputSignal, SignalBank

INTEGRATORS = ('euler', 'rk4')

# Extent of each scheme's stability region along the negative real axis.
REAL_AXIS_LIMIT = {'euler': 2.0, 'rk4': 2.785}

METRIC_NAMES = ('pos_err', 'vel_err', 's1', 's2', 'lyapunov', 'consensus_err')


@dataclass
class SimConfig:
    """Integration settings of one run."""

    step: float = 1e-3
    horizon: float = 20.0
    integrator: str = 'rk4'
    record_every: int = 10
    match_initialization: bool = False
    boundary_layer: float = 0.0
    divergence_cap: float = 1e6
    upsilon0: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.step > 0:
            raise ScenarioError(f"Step must be positive, got {self.step}", field='sim.step')
        if not self.horizon > 0:
            raise ScenarioError(f"Horizon must be positive, got {self.horizon}", field='sim.horizon')
        if self.step > self.horizon:
            raise ScenarioError("Step must not exceed the horizon", field='sim.step')
        if self.integrator not in INTEGRATORS:
            raise ScenarioError(f"Unknown integrator '{self.integrator}'", field='sim.integrator')
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ScenarioError("record_every must be a positive integer", field='sim.record_every')
        if self.boundary_layer < 0:
            raise ScenarioError("Boundary layer must be non-negative", field='sim.boundary_layer')
        if not self.divergence_cap > 0:
            raise ScenarioError("Divergence cap must be positive", field='sim.divergence_cap')
        self.record_every = int(self.record_every)

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.step))

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        if self.upsilon0 is not None:
            data['upsilon0'] = np.asarray(self.upsilon0).tolist()
        return data


@dataclass(frozen=True)
class MetricSample:
    pos_err: float
    vel_err: float
    s1: float
    s2: float
    lyapunov: float
    consensus_err: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    def as_row(self) -> List[float]:
        return [getattr(self, name) for name in METRIC_NAMES]


@dataclass
class Trajectory:
    """
    Recorded samples of one run.

    times, states and metrics have equal lengths. aborted marks a partial
    trajectory attached to a DivergenceError.
    """

    times: List[float]
    states: List[SystemState]
    metrics: List[MetricSample]
    graph: Graph
    gains: GainSet
    algorithm: int
    aborted: bool = False
    wall_time: float = 0.0

    def __len__(self) -> int:
        return len(self.times)

    def filter_outputs(self) -> np.ndarray:
        """Filter outputs of every sample, shape (samples, n, p)."""
        return np.stack([filter_outputs(s.upsilon, s.x, self.graph, self.gains.alpha)
                         for s in self.states])

    def metric_array(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for m in self.metrics])

    def summary(self) -> Dict[str, object]:
        """Final and peak metrics plus filter-output magnitudes."""
        if not self.metrics:
            return {'samples': 0, 'aborted': self.aborted}
        w_norms = np.linalg.norm(self.filter_outputs(), axis=-1).max(axis=-1)
        return {
            'samples': len(self),
            'final_time': self.times[-1],
            'aborted': self.aborted,
            'wall_time': self.wall_time,
            'final': self.metrics[-1].to_dict(),
            'peak': {name: float(np.nanmax(self.metric_array(name))) for name in METRIC_NAMES},
            'max_w_final': float(w_norms[-1]),
            'max_w': float(w_norms.max()),
        }


def initialize(g: Graph, signals: Sequence[InputSignal], x0, v0, cfg: SimConfig,
               algorithm: int, gains: GainSet) -> SystemState:
    """
    Assemble the initial network state.

    Args:
        g: Interaction graph
        signals: One input signal per agent
        x0: Initial positions, shape (n, p)
        v0: Initial velocities, shape (n, p)
        cfg: Simulation settings (matched initialization, filter override)
        algorithm: 1 or 2
        gains: Gain set; alpha fixes the default filter initialization

    Returns:
        SystemState at t = 0
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    if x0.shape != v0.shape or x0.shape[0] != g.n or len(signals) != g.n:
        raise ScenarioError(f"Initial conditions must have {g.n} rows, one per agent and signal",
                            field='initial_conditions')

    bank = SignalBank(signals)
    if bank.dim != x0.shape[1]:
        raise ScenarioError("Signal and state dimensions differ", field='initial_conditions')
    r0, vr0 = bank.initial_references()

    if cfg.match_initialization:
        if algorithm == 2:
            logger.warning("Matched initialization requested for algorithm 2, which does not need it")
        r0, vr0 = x0.copy(), v0.copy()
        for k, signal in enumerate(signals):
            signal.r0, signal.v0 = r0[k].copy(), vr0[k].copy()
            signal.reset()

    if cfg.upsilon0 is not None:
        upsilon = np.asarray(cfg.upsilon0, dtype=float).reshape(x0.shape)
    else:
        upsilon = default_upsilon(x0, g, gains.alpha)

    return SystemState.from_parts(x0, v0, upsilon, r0, vr0, t=0.0, ar=bank.accelerations(0.0))


def lyapunov1_value(state: SystemState, g: Graph, gains: GainSet) -> float:
    """
    Algorithm-1 Lyapunov function on centered positions, velocities and filter outputs.

    V = 1/2 xi' [[mu L, I, I], [I, I, I], [I, I, alpha I]] xi with mu = 2 alpha - 1.
    """
    m = centering_projector(state.n)
    w = filter_outputs(state.upsilon, state.x, g, gains.alpha)
    xx, vv, ww = m @ state.x, m @ state.v, m @ w
    mu = 2.0 * gains.alpha - 1.0
    quad = (mu * np.sum(xx * (g.laplacian @ xx)) + np.sum(vv * vv) + gains.alpha * np.sum(ww * ww)
            + 2.0 * np.sum(xx * vv) + 2.0 * np.sum(xx * ww) + 2.0 * np.sum(vv * ww))
    return 0.5 * float(quad)


def lyapunov2_value(state: SystemState, g: Graph, gains: GainSet) -> float:
    """Algorithm-2 counterpart: top-left block mu1 L + mu2 I and the raw filter output w."""
    m = centering_projector(state.n)
    w = filter_outputs(state.upsilon, state.x, g, gains.alpha)
    xx, vv = m @ state.x, m @ state.v
    mu1, mu2 = 2.0 * gains.alpha - 1.0, 2.0 * gains.kappa
    quad = (mu1 * np.sum(xx * (g.laplacian @ xx)) + mu2 * np.sum(xx * xx) + np.sum(vv * vv)
            + gains.alpha * np.sum(w * w)
            + 2.0 * np.sum(xx * vv) + 2.0 * np.sum(xx * w) + 2.0 * np.sum(vv * w))
    return 0.5 * float(quad)


def compute_metrics(state: SystemState, g: Graph, gains: Optional[GainSet] = None) -> MetricSample:
    """
    Tracking, conservation and consensus errors of one state.

    lyapunov is evaluated for the algorithm of gains and is NaN without gains.
    """
    avg_r = state.r.mean(axis=0)
    avg_vr = state.vr.mean(axis=0)
    avg_x = state.x.mean(axis=0)
    if gains is None:
        lyapunov = math.nan
    elif gains.algorithm == 1:
        lyapunov = lyapunov1_value(state, g, gains)
    else:
        lyapunov = lyapunov2_value(state, g, gains)
    return MetricSample(
        pos_err=float(np.linalg.norm(state.x - avg_r, axis=1).max()),
        vel_err=float(np.linalg.norm(state.v - avg_vr, axis=1).max()),
        s1=float(np.linalg.norm(state.x.sum(axis=0) - state.r.sum(axis=0))),
        s2=float(np.linalg.norm(state.v.sum(axis=0) - state.vr.sum(axis=0))),
        lyapunov=lyapunov,
        consensus_err=float(np.linalg.norm(state.x - avg_x, axis=1).max()),
    )


def mode_matrix(gains: GainSet, algorithm: int, lam: float, boundary_layer: float = 0.0) -> np.ndarray:
    """
    Linear part of the closed loop on one Laplacian mode, states (x, v, upsilon).

    A boundary layer contributes its saturation slope gamma / epsilon to the
    filter-output feedback; exact signum terms are left out.
    """
    b = gains.beta + (gains.gamma / boundary_layer if boundary_layer > 0 else 0.0)
    a = gains.alpha
    if algorithm == 1:
        return np.array([
            [0.0, 1.0, 0.0],
            [-a * lam - a * b * lam ** 2, 0.0, b * lam],
            [lam + a * b * lam ** 2, 0.0, -b * lam],
        ])
    k = gains.kappa
    return np.array([
        [0.0, 1.0, 0.0],
        [-k - a * lam - a * b * lam, -k, b],
        [lam + a * b * lam, 0.0, -b],
    ])


def stability_estimate(g: Graph, gains: GainSet, algorithm: int,
                       boundary_layer: float = 0.0) -> float:
    """Largest spectral radius of the linearized closed loop over all Laplacian modes."""
    radius = 0.0
    for lam in spectrum(g).eigenvalues:
        eigs = np.linalg.eigvals(mode_matrix(gains, algorithm, float(lam), boundary_layer))
        radius = max(radius, float(np.max(np.abs(eigs))))
    return radius


def _euler(state: SystemState, h: float, rhs: Callable[[SystemState], SystemState]) -> np.ndarray:
    return state.data + h * rhs(state).data


def _rk4(state: SystemState, h: float, rhs: Callable[[SystemState], SystemState]) -> np.ndarray:
    t = state.t
    k1 = rhs(state).data
    k2 = rhs(SystemState(state.data + 0.5 * h * k1, t + 0.5 * h)).data
    k3 = rhs(SystemState(state.data + 0.5 * h * k2, t + 0.5 * h)).data
    k4 = rhs(SystemState(state.data + h * k3, t + h)).data
    return state.data + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run(initial: SystemState, g: Graph, gains: GainSet, cfg: SimConfig, algorithm: int,
        signals: Sequence[InputSignal]) -> Trajectory:
    """
    Integrate the closed loop with a fixed step from t = 0 to the horizon.

    Args:
        initial: State at t = 0 (see initialize)
        g: Interaction graph
        gains: Gain set of the active algorithm
        cfg: Step, horizon, integrator, decimation and divergence cap
        algorithm: 1 or 2
        signals: Input signals providing the accelerations

    Returns:
        Trajectory sampled every cfg.record_every steps plus the final step

    Raises:
        DivergenceError: When a derivative is not finite or a state norm
            exceeds the cap; the partial trajectory is attached
    """
    bank = SignalBank(signals)
    h = cfg.step
    steps = cfg.steps
    advance = _rk4 if cfg.integrator == 'rk4' else _euler

    radius = stability_estimate(g, gains, algorithm, cfg.boundary_layer)
    if h * radius > REAL_AXIS_LIMIT[cfg.integrator]:
        logger.warning(f"Step {h:g} exceeds the linear stability estimate of {cfg.integrator} "
                       f"(h * radius = {h * radius:.3g} > {REAL_AXIS_LIMIT[cfg.integrator]})")

    def rhs(s: SystemState) -> SystemState:
        return closed_loop_rhs(s, g, gains, algorithm, cfg.boundary_layer, bank)

    trajectory = Trajectory(times=[], states=[], metrics=[], graph=g, gains=gains, algorithm=algorithm)

    def record(s: SystemState) -> None:
        snapshot = SystemState(s.data.copy(), s.t, bank.accelerations(s.t))
        trajectory.times.append(s.t)
        trajectory.states.append(snapshot)
        trajectory.metrics.append(compute_metrics(snapshot, g, gains))

    logger.info(f"Starting algorithm-{algorithm} run: n={g.n}, step={h:g}, horizon={cfg.horizon:g}, "
                f"integrator={cfg.integrator}, boundary_layer={cfg.boundary_layer:g}")
    started = time.perf_counter()
    state = SystemState(initial.data.copy(), 0.0)
    record(state)
    progress_every = max(1, steps // 10)

    for k in range(steps):
        try:
            data = advance(state, h, rhs)
        except DivergenceError as e:
            trajectory.aborted = True
            trajectory.wall_time = time.perf_counter() - started
            e.trajectory = trajectory
            logger.error(str(e))
            raise
        state = SystemState(data, (k + 1) * h)

        norms = np.linalg.norm(data, axis=-1)
        if not np.all(np.isfinite(data)) or norms.max() > cfg.divergence_cap:
            agent = int(np.argmax(np.nan_to_num(norms, nan=np.inf).max(axis=0)))
            trajectory.aborted = True
            trajectory.wall_time = time.perf_counter() - started
            logger.error(f"State norm exceeded {cfg.divergence_cap:g} at t={state.t:g}")
            raise DivergenceError(f"State norm exceeded cap {cfg.divergence_cap:g}",
                                  time=state.t, agent=agent, trajectory=trajectory)

        if (k + 1) % cfg.record_every == 0 or k + 1 == steps:
            record(state)
        if (k + 1) % progress_every == 0:
            logger.debug(f"t={state.t:.3f} pos_err={trajectory.metrics[-1].pos_err:.3e}")

    for k, signal in enumerate(signals):
        signal.r, signal.vr = state.r[k].copy(), state.vr[k].copy()

    trajectory.wall_time = time.perf_counter() - started
    logger.info(f"Run finished in {trajectory.wall_time:.2f}s with {len(trajectory)} samples")
    return trajectory
