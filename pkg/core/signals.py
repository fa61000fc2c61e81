"""
Signals Module for the distributed average tracking simulator.
Generates per-agent time-varying input signals (r_i, v_i^r, a_i^r) and
estimates the suprema the gain conditions require.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

# Local imports
from core.errors import SignalError

TERM_KINDS = ('sin', 'cos', 'sawtooth', 'constant')
PRESET_AGENTS = 10

AccelFn = Callable[[float, int], np.ndarray]


def sawtooth(t, period: float = 2.0):
    """Right-continuous sawtooth mod(t, period) = t - period * floor(t / period)."""
    return t - period * np.floor(t / period)


@dataclass(frozen=True)
class SignalTerm:
    """
    One additive term of an acceleration axis.

    kind 'sin'/'cos' evaluate amplitude * f(frequency * t + phase) with an
    angular frequency; 'sawtooth' evaluates amplitude * mod(t + phase, period);
    'constant' evaluates amplitude. With per_agent_scale the term is multiplied
    by the agent's scale (its 1-based index unless overridden).
    """

    kind: str
    amplitude: float = 1.0
    frequency: float = 1.0
    period: float = 2.0
    phase: float = 0.0
    per_agent_scale: bool = False

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise SignalError(f"Unknown signal term kind '{self.kind}'")
        if self.kind == 'sawtooth' and self.period <= 0:
            raise SignalError("Sawtooth period must be positive")

    def evaluate(self, t):
        if self.kind == 'sin':
            return self.amplitude * np.sin(self.frequency * t + self.phase)
        if self.kind == 'cos':
            return self.amplitude * np.cos(self.frequency * t + self.phase)
        if self.kind == 'sawtooth':
            return self.amplitude * sawtooth(t + self.phase, self.period)
        return self.amplitude * np.ones_like(np.asarray(t, dtype=float))

    def to_dict(self) -> Dict[str, object]:
        return {
            'kind': self.kind, 'amplitude': self.amplitude,
            'frequency': self.frequency, 'period': self.period,
            'phase': self.phase, 'per_agent_scale': self.per_agent_scale,
        }


@dataclass(frozen=True)
class SignalProfile:
    """Acceleration profile: one tuple of terms per axis."""

    axes: Tuple[Tuple[SignalTerm, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.axes)

    def split(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """
        Evaluate the unscaled and per-agent-scaled parts separately.

        Works for scalar t (returns two p-vectors) and for arrays of times
        (returns two arrays of shape t.shape + (p,)).
        """
        t = np.asarray(t, dtype=float)
        fixed = np.zeros(t.shape + (self.dim,))
        scaled = np.zeros(t.shape + (self.dim,))
        for k, terms in enumerate(self.axes):
            for term in terms:
                target = scaled if term.per_agent_scale else fixed
                target[..., k] += term.evaluate(t)
        return fixed, scaled

    def evaluate(self, t, scale: float):
        fixed, scaled = self.split(t)
        return fixed + scale * scaled

    def to_dict(self) -> List[List[Dict[str, object]]]:
        return [[term.to_dict() for term in terms] for terms in self.axes]


def profile_from_terms(axes: Sequence[Sequence[Dict[str, object]]]) -> SignalProfile:
    """Build a profile from the scenario grammar: a list (per axis) of term mappings."""
    if not axes:
        raise SignalError("A signal profile needs at least one axis")
    return SignalProfile(axes=tuple(tuple(SignalTerm(**term) for term in terms) for terms in axes))


@dataclass
class InputSignal:
    """
    Input signal of one agent.

    index is the 1-based agent number. The acceleration comes from a
    declarative profile when one is given, otherwise from accel_fn(t, index).
    r and vr hold the current reference state and start at r0 and v0.
    """

    index: int
    r0: np.ndarray
    v0: np.ndarray
    profile: Optional[SignalProfile] = None
    accel_fn: Optional[AccelFn] = None
    scale: Optional[float] = None
    r: np.ndarray = field(init=False)
    vr: np.ndarray = field(init=False)

    def __post_init__(self):
        self.r0 = np.asarray(self.r0, dtype=float)
        self.v0 = np.asarray(self.v0, dtype=float)
        if self.r0.shape != self.v0.shape or self.r0.ndim != 1:
            raise SignalError(f"Agent {self.index}: r0 and v0 must be vectors of equal length")
        if self.profile is None and self.accel_fn is None:
            raise SignalError(f"Agent {self.index}: a profile or an accel_fn is required")
        if self.profile is not None and self.profile.dim != self.r0.size:
            raise SignalError(f"Agent {self.index}: profile has {self.profile.dim} axes, "
                              f"initial conditions have {self.r0.size}")
        if self.scale is None:
            self.scale = float(self.index)
        if self.accel_fn is None:
            profile, scale = self.profile, self.scale
            self.accel_fn = lambda t, i: profile.evaluate(t, scale)
        self.r = self.r0.copy()
        self.vr = self.v0.copy()

    @property
    def dim(self) -> int:
        return self.r0.size

    def accel(self, t: float) -> np.ndarray:
        """Input acceleration a_i^r(t)."""
        return np.asarray(self.accel_fn(t, self.index), dtype=float)

    def reset(self) -> None:
        self.r = self.r0.copy()
        self.vr = self.v0.copy()


@dataclass(frozen=True)
class SignalBounds:
    """Grid-estimated suprema, already inflated by the safety factor."""

    a_bar_d: float
    r_bar: float
    v_bar: float
    a_bar: float
    horizon: float
    grid_step: float
    safety: float = 1.0

    def to_dict(self) -> Dict[str, float]:
        return {
            'a_bar_d': self.a_bar_d, 'r_bar': self.r_bar, 'v_bar': self.v_bar,
            'a_bar': self.a_bar, 'horizon': self.horizon,
            'grid_step': self.grid_step, 'safety': self.safety,
        }


class SignalBank:
    """
    Vectorized acceleration evaluation for a list of signals.

    Signals sharing one profile are evaluated with a single profile call and a
    broadcast over their scales; signals with custom accel_fn fall back to a
    per-agent call.
    """

    def __init__(self, signals: Sequence[InputSignal]):
        if not signals:
            raise SignalError("At least one input signal is required")
        self.signals = list(signals)
        self.n = len(self.signals)
        self.dim = self.signals[0].dim
        if any(s.dim != self.dim for s in self.signals):
            raise SignalError("All input signals must share one dimension")

        groups: Dict[int, Tuple[SignalProfile, List[int]]] = {}
        self._custom: List[int] = []
        for k, s in enumerate(self.signals):
            if s.profile is None:
                self._custom.append(k)
            else:
                groups.setdefault(id(s.profile), (s.profile, []))[1].append(k)
        self._groups = [
            (profile, np.array(rows), np.array([self.signals[k].scale for k in rows])[:, None])
            for profile, rows in groups.values()
        ]

    def accelerations(self, t: float) -> np.ndarray:
        """Stacked accelerations, shape (n, p)."""
        out = np.empty((self.n, self.dim))
        for profile, rows, scales in self._groups:
            fixed, scaled = profile.split(t)
            out[rows] = fixed + scales * scaled
        for k in self._custom:
            out[k] = self.signals[k].accel(t)
        return out

    def accelerations_on_grid(self, times: np.ndarray) -> np.ndarray:
        """Accelerations on a time grid, shape (len(times), n, p)."""
        out = np.empty((len(times), self.n, self.dim))
        for profile, rows, scales in self._groups:
            fixed, scaled = profile.split(times)
            out[:, rows, :] = fixed[:, None, :] + scales[None, :, :] * scaled[:, None, :]
        for k in self._custom:
            out[:, k, :] = np.array([self.signals[k].accel(t) for t in times])
        return out

    def initial_references(self) -> Tuple[np.ndarray, np.ndarray]:
        return (np.stack([s.r0 for s in self.signals]),
                np.stack([s.v0 for s in self.signals]))


def stack_accelerations(signals: Sequence[InputSignal], t: float) -> np.ndarray:
    """Convenience wrapper: accelerations of all agents at time t, shape (n, p)."""
    return SignalBank(signals).accelerations(t)


def make_signal(i: int, profile: SignalProfile, r0: Sequence[float],
                v0: Sequence[float], scale: Optional[float] = None) -> InputSignal:
    """Signal of agent i (1-based) driven by a declarative profile."""
    if i < 1:
        raise SignalError(f"Agent numbers start at 1, got {i}")
    return InputSignal(index=i, r0=r0, v0=v0, profile=profile, scale=scale)


def make_case1_signal(i: int, r0: Optional[Sequence[float]] = None,
                      v0: Optional[Sequence[float]] = None) -> InputSignal:
    """
    First replication signal: a_i = 0.1 i [sin 5t + mod(t,2), cos 5t + mod(t,2)].

    Args:
        i: 1-based agent number (1..10)
        r0: Initial reference position (zeros when omitted; the scenario sets it)
        v0: Initial reference velocity (zeros when omitted)
    """
    _check_preset_index(i)
    r0 = np.zeros(2) if r0 is None else r0
    v0 = np.zeros(2) if v0 is None else v0
    return InputSignal(index=i, r0=r0, v0=v0, profile=CASE1_PROFILE)


def make_case2_signal(i: int) -> InputSignal:
    """
    Second replication signal: a_i = 0.1 i [sin t, cos t] with r_i(0) = 0 and
    v_i^r(0) = (-0.1 i, -0.1 i).
    """
    _check_preset_index(i)
    return InputSignal(index=i, r0=np.zeros(2), v0=np.full(2, -0.1 * i),
                       profile=CASE2_PROFILE)


def _check_preset_index(i: int) -> None:
    if not 1 <= i <= PRESET_AGENTS:
        raise SignalError(f"Preset signals are defined for agents 1..{PRESET_AGENTS}, got {i}")


def integrate_references(signals: Sequence[InputSignal], horizon: float,
                         step: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Integrate r' = v^r, v^r' = a^r on a uniform grid with classical RK4.

    For this input-driven double integrator an RK4 step reduces to
    v <- v + h/6 (a0 + 4 a_mid + a1) and r <- r + h v + h^2/6 (a0 + 2 a_mid),
    so the whole grid is integrated with cumulative sums.

    Returns:
        (times, r, vr, a) with r, vr, a of shape (len(times), n, p)
    """
    if horizon <= 0:
        raise SignalError(f"Horizon must be positive, got {horizon}")
    if step <= 0:
        raise SignalError(f"Grid step must be positive, got {step}")

    bank = SignalBank(signals)
    steps = int(round(horizon / step))
    times = np.arange(steps + 1) * step
    a = bank.accelerations_on_grid(times)
    a_mid = bank.accelerations_on_grid(times[:-1] + 0.5 * step)
    r0, v0 = bank.initial_references()

    dv = step / 6.0 * (a[:-1] + 4.0 * a_mid + a[1:])
    vr = np.concatenate([v0[None], v0[None] + np.cumsum(dv, axis=0)])
    dr = step * vr[:-1] + step ** 2 / 6.0 * (a[:-1] + 2.0 * a_mid)
    r = np.concatenate([r0[None], r0[None] + np.cumsum(dr, axis=0)])
    return times, r, vr, a


def estimate_bounds(signals: Sequence[InputSignal], horizon: float,
                    grid_step: float, safety: float = 1.1) -> SignalBounds:
    """
    Estimate the signal suprema by sampling a grid and inflating the maxima.

    Args:
        signals: Input signals of all agents
        horizon: Time span [0, horizon] to sample, seconds
        grid_step: Sampling step, seconds
        safety: Multiplicative inflation (>= 1) applied to each grid maximum

    Returns:
        SignalBounds with a_bar_d (pairwise acceleration deviation), r_bar,
        v_bar and a_bar

    Raises:
        SignalError: On an empty signal list, non-positive horizon or step,
            or a safety factor below 1
    """
    if not signals:
        raise SignalError("At least one input signal is required")
    if safety < 1:
        raise SignalError(f"Safety factor must be at least 1, got {safety}")

    _, r, vr, a = integrate_references(signals, horizon, grid_step)
    n = a.shape[1]

    deviation = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            deviation = max(deviation, float(np.max(np.linalg.norm(a[:, i] - a[:, j], axis=-1))))

    bounds = SignalBounds(
        a_bar_d=safety * deviation,
        r_bar=safety * float(np.max(np.linalg.norm(r, axis=-1))),
        v_bar=safety * float(np.max(np.linalg.norm(vr, axis=-1))),
        a_bar=safety * float(np.max(np.linalg.norm(a, axis=-1))),
        horizon=float(horizon),
        grid_step=float(grid_step),
        safety=float(safety),
    )
    logger.debug(f"Estimated signal bounds: {bounds.to_dict()}")
    return bounds


CASE1_PROFILE = SignalProfile(axes=(
    (SignalTerm('sin', 0.1, frequency=5.0, per_agent_scale=True),
     SignalTerm('sawtooth', 0.1, period=2.0, per_agent_scale=True)),
    (SignalTerm('cos', 0.1, frequency=5.0, per_agent_scale=True),
     SignalTerm('sawtooth', 0.1, period=2.0, per_agent_scale=True)),
))

CASE2_PROFILE = SignalProfile(axes=(
    (SignalTerm('sin', 0.1, frequency=1.0, per_agent_scale=True),),
    (SignalTerm('cos', 0.1, frequency=1.0, per_agent_scale=True),),
))
