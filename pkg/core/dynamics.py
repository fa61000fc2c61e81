"""
Closed-loop dynamics for the two distributed average tracking algorithms.

Algorithm 1 is communication based and needs no velocity measurements: agents
exchange filter outputs and the signum acts on their differences. Algorithm 2
is sensing based: every agent uses its own velocity and reference, and the
signum acts on its own filter output.

Agent indices in this module are 0-based, matching Graph.neighbors.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

# Local imports
from core.errors import DivergenceError
from core.graph import Graph
from core.signals import SignalBank

ALGORITHMS = (1, 2)

# Row order of SystemState.data
X, V, UPSILON, R, VR = range(5)


@dataclass(frozen=True)
class AgentState:
    x: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class FilterState:
    """Filter variable and its output; w is always derived from upsilon."""

    upsilon: np.ndarray
    w: np.ndarray


@dataclass
class SystemState:
    """
    State of the whole network at time t.

    data stacks positions, velocities, filter variables, reference positions
    and reference velocities into one array of shape (5, n, p), so integrators
    combine states with plain array arithmetic. ar holds the input
    accelerations at t when known; closed_loop_rhs refreshes it from a
    SignalBank.
    """

    data: np.ndarray
    t: float = 0.0
    ar: Optional[np.ndarray] = None

    @classmethod
    def from_parts(cls, x, v, upsilon, r, vr, t: float = 0.0,
                   ar: Optional[np.ndarray] = None) -> 'SystemState':
        parts = [np.atleast_2d(np.asarray(a, dtype=float)) for a in (x, v, upsilon, r, vr)]
        shape = parts[0].shape
        if any(p.shape != shape for p in parts):
            raise ValueError("State components must share the shape (n, p)")
        ar = None if ar is None else np.atleast_2d(np.asarray(ar, dtype=float))
        return cls(data=np.stack(parts), t=float(t), ar=ar)

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    @property
    def x(self) -> np.ndarray:
        return self.data[X]

    @property
    def v(self) -> np.ndarray:
        return self.data[V]

    @property
    def upsilon(self) -> np.ndarray:
        return self.data[UPSILON]

    @property
    def r(self) -> np.ndarray:
        return self.data[R]

    @property
    def vr(self) -> np.ndarray:
        return self.data[VR]

    @property
    def agents(self) -> List[AgentState]:
        return [AgentState(x=self.x[i], v=self.v[i]) for i in range(self.n)]

    @property
    def refs(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Per-agent reference states (r_i, v_i^r)."""
        return [(self.r[i], self.vr[i]) for i in range(self.n)]

    def filters(self, g: Graph, alpha: float) -> List[FilterState]:
        w = filter_outputs(self.upsilon, self.x, g, alpha)
        return [FilterState(upsilon=self.upsilon[i], w=w[i]) for i in range(self.n)]

    def accel(self, i: int) -> np.ndarray:
        if self.ar is None:
            return np.zeros(self.dim)
        return self.ar[i]

    def copy(self) -> 'SystemState':
        return SystemState(data=self.data.copy(), t=self.t,
                           ar=None if self.ar is None else self.ar.copy())


def signum(z, boundary_layer: float = 0.0):
    """
    Componentwise signum with sgn(0) = 0.

    With boundary_layer > 0 the discontinuity is replaced by the saturation
    clamp(z / boundary_layer, -1, 1).
    """
    z = np.asarray(z, dtype=float)
    if boundary_layer > 0:
        return np.clip(z / boundary_layer, -1.0, 1.0)
    return np.sign(z)


def _relative_sum(i: int, values: np.ndarray, g: Graph) -> np.ndarray:
    """Sum over neighbors j of (values_i - values_j)."""
    total = np.zeros(values.shape[1])
    for j in g.neighbors(i):
        total += values[i] - values[j]
    return total


# --- per-agent operations -------------------------------------------------

def filter1_output(i: int, upsilon_i, positions, g: Graph, alpha: float) -> np.ndarray:
    """w_i = upsilon_i - alpha * sum_j (x_i - x_j)."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    return np.asarray(upsilon_i, dtype=float) - alpha * _relative_sum(i, positions, g)


def filter2_output(i: int, upsilon_i, positions, g: Graph, alpha: float) -> np.ndarray:
    """Algorithm-2 filter output; the expression coincides with algorithm 1."""
    return filter1_output(i, upsilon_i, positions, g, alpha)


def _outputs(state: SystemState, g: Graph, alpha: float) -> np.ndarray:
    return np.stack([filter1_output(k, state.upsilon[k], state.x, g, alpha)
                     for k in range(state.n)])


def filter1_derivative(i: int, state: SystemState, g: Graph, gains,
                       boundary_layer: float = 0.0) -> np.ndarray:
    """
    Algorithm-1 filter dynamics for agent i.

    d(upsilon_i)/dt = sum_j (x_i - x_j) - beta sum_j (w_i - w_j)
                      - gamma sum_j sgn(w_i - w_j) - a_i
    """
    w = _outputs(state, g, gains.alpha)
    sign_sum = np.zeros(state.dim)
    for j in g.neighbors(i):
        sign_sum += signum(w[i] - w[j], boundary_layer)
    return (_relative_sum(i, state.x, g) - gains.beta * _relative_sum(i, w, g)
            - gains.gamma * sign_sum - state.accel(i))


def control1(i: int, state: SystemState, g: Graph, gains,
             boundary_layer: float = 0.0) -> np.ndarray:
    """
    Algorithm-1 control input for agent i.

    u_i = -alpha sum_j (x_i - x_j) + beta sum_j (w_i - w_j)
          + gamma sum_j sgn(w_i - w_j) + a_i
    """
    w = _outputs(state, g, gains.alpha)
    sign_sum = np.zeros(state.dim)
    for j in g.neighbors(i):
        sign_sum += signum(w[i] - w[j], boundary_layer)
    return (-gains.alpha * _relative_sum(i, state.x, g) + gains.beta * _relative_sum(i, w, g)
            + gains.gamma * sign_sum + state.accel(i))


def filter2_derivative(i: int, state: SystemState, g: Graph, gains,
                       boundary_layer: float = 0.0) -> np.ndarray:
    """
    Algorithm-2 filter dynamics for agent i. The signum acts on w_i itself.

    d(upsilon_i)/dt = sum_j (x_i - x_j) - beta w_i - gamma sgn(w_i)
                      - kappa r_i - kappa v_i^r - a_i
    """
    w_i = filter2_output(i, state.upsilon[i], state.x, g, gains.alpha)
    return (_relative_sum(i, state.x, g) - gains.beta * w_i
            - gains.gamma * signum(w_i, boundary_layer)
            - gains.kappa * state.r[i] - gains.kappa * state.vr[i] - state.accel(i))


def control2(i: int, state: SystemState, g: Graph, gains,
             boundary_layer: float = 0.0) -> np.ndarray:
    """
    Algorithm-2 control input for agent i.

    u_i = -kappa (x_i - r_i) - kappa (v_i - v_i^r) - alpha sum_j (x_i - x_j)
          + beta w_i + gamma sgn(w_i) + a_i
    """
    w_i = filter2_output(i, state.upsilon[i], state.x, g, gains.alpha)
    return (-gains.kappa * (state.x[i] - state.r[i]) - gains.kappa * (state.v[i] - state.vr[i])
            - gains.alpha * _relative_sum(i, state.x, g) + gains.beta * w_i
            + gains.gamma * signum(w_i, boundary_layer) + state.accel(i))


# --- vectorized network operations ----------------------------------------

def default_upsilon(x, g: Graph, alpha: float) -> np.ndarray:
    """Filter initialization upsilon_i(0) = alpha * sum_j (x_i(0) - x_j(0)), giving w(0) = 0."""
    return alpha * (g.laplacian @ np.asarray(x, dtype=float))


def filter_outputs(upsilon, x, g: Graph, alpha: float) -> np.ndarray:
    """All filter outputs at once: w = upsilon - alpha L x."""
    return np.asarray(upsilon, dtype=float) - alpha * (g.laplacian @ np.asarray(x, dtype=float))


def _coupling(state: SystemState, g: Graph, gains, algorithm: int,
              boundary_layer: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Shared terms of filter and control.

    Returns (Lx, feedback) where the filter derivative is Lx - feedback - a (plus
    the reference terms of algorithm 2) and the control shares the feedback.
    """
    lx = g.laplacian @ state.x
    w = state.upsilon - gains.alpha * lx
    if algorithm == 1:
        # D sgn(D^T w) sums sgn(w_i - w_j) over the neighbors of each agent.
        d = g.incidence
        feedback = gains.beta * (g.laplacian @ w) + gains.gamma * (d @ signum(d.T @ w, boundary_layer))
    else:
        feedback = gains.beta * w + gains.gamma * signum(w, boundary_layer)
    return lx, feedback


def filter_derivatives(state: SystemState, g: Graph, gains, algorithm: int,
                       boundary_layer: float = 0.0) -> np.ndarray:
    ar = state.ar if state.ar is not None else np.zeros_like(state.x)
    lx, feedback = _coupling(state, g, gains, algorithm, boundary_layer)
    derivative = lx - feedback - ar
    if algorithm == 2:
        derivative -= gains.kappa * (state.r + state.vr)
    return derivative


def control_inputs(state: SystemState, g: Graph, gains, algorithm: int,
                   boundary_layer: float = 0.0) -> np.ndarray:
    ar = state.ar if state.ar is not None else np.zeros_like(state.x)
    lx, feedback = _coupling(state, g, gains, algorithm, boundary_layer)
    control = -gains.alpha * lx + feedback + ar
    if algorithm == 2:
        control -= gains.kappa * (state.x - state.r) + gains.kappa * (state.v - state.vr)
    return control


def closed_loop_rhs(state: SystemState, g: Graph, gains, algorithm: int,
                    boundary_layer: float = 0.0,
                    signals: Optional[SignalBank] = None) -> SystemState:
    """
    Time derivative of the full network state.

    Args:
        state: Current state; its ar is refreshed from signals when given
        g: Interaction graph
        gains: Gain set of the active algorithm
        algorithm: 1 or 2
        boundary_layer: Width of the signum saturation (0 keeps exact sgn)
        signals: Source of input accelerations at state.t

    Returns:
        SystemState whose data holds (dx, dv, d upsilon, dr, dv^r)/dt

    Raises:
        DivergenceError: If any derivative entry is not finite
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"Unknown algorithm {algorithm!r}")
    if signals is not None:
        state.ar = signals.accelerations(state.t)
    ar = state.ar if state.ar is not None else np.zeros_like(state.x)

    derivative = np.empty_like(state.data)
    derivative[X] = state.v
    derivative[V] = control_inputs(state, g, gains, algorithm, boundary_layer)
    derivative[UPSILON] = filter_derivatives(state, g, gains, algorithm, boundary_layer)
    derivative[R] = state.vr
    derivative[VR] = ar

    finite = np.isfinite(derivative)
    if not finite.all():
        agent = int(np.flatnonzero(~finite.all(axis=(0, 2)))[0])
        raise DivergenceError("Non-finite derivative", time=state.t, agent=agent)
    return SystemState(data=derivative, t=state.t, ar=ar)


def per_agent_rhs(state: SystemState, g: Graph, gains, algorithm: int,
                  boundary_layer: float = 0.0) -> np.ndarray:
    """Reference assembly of the derivative from the per-agent operations."""
    control, filt = (control1, filter1_derivative) if algorithm == 1 else (control2, filter2_derivative)
    rows = np.empty_like(state.data)
    for i in range(state.n):
        rows[X, i] = state.v[i]
        rows[V, i] = control(i, state, g, gains, boundary_layer)
        rows[UPSILON, i] = filt(i, state, g, gains, boundary_layer)
        rows[R, i] = state.vr[i]
        rows[VR, i] = state.accel(i)
    return rows


def stack_states(states: Sequence[SystemState]) -> np.ndarray:
    """Stack snapshot data into an array of shape (samples, 5, n, p)."""
    return np.stack([s.data for s in states])
