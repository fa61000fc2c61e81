"""
Gains Module for the distributed average tracking simulator.
Synthesizes gain sets that satisfy the sufficient convergence conditions of
both algorithms and verifies arbitrary gain sets against them.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np
from loguru import logger

# Local imports
from core.errors import GainError
from core.graph import DEFAULT_ZERO_TOL, Spectrum
from core.signals import SignalBounds

DEFAULT_MARGIN = 1.1
GAMMA_FLOOR = 1e-3
PROVENANCES = ('synthesized', 'user_supplied')


@dataclass(frozen=True)
class GainSet:
    """
    Control gains for one algorithm.

    kappa is only meaningful for algorithm 2. margin records the inflation used
    by synthesis and is None for user-supplied sets.
    """

    algorithm: int
    alpha: float
    beta: float
    gamma: float
    kappa: Optional[float] = None
    margin: Optional[float] = None
    provenance: str = 'user_supplied'

    def __post_init__(self):
        if self.algorithm not in (1, 2):
            raise GainError(f"Algorithm must be 1 or 2, got {self.algorithm!r}")
        if self.provenance not in PROVENANCES:
            raise GainError(f"Unknown gain provenance '{self.provenance}'")
        if self.algorithm == 2 and self.kappa is None:
            raise GainError("Algorithm 2 needs kappa")
        for name in ('alpha', 'beta', 'gamma', 'kappa'):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or value < 0):
                raise GainError(f"Gain {name} must be finite and non-negative, got {value}")

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        if self.algorithm == 1:
            data.pop('kappa')
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> 'GainSet':
        known = {k: data[k] for k in ('algorithm', 'alpha', 'beta', 'gamma', 'kappa',
                                      'margin', 'provenance') if k in data}
        return cls(**known)


@dataclass(frozen=True)
class InequalityCheck:
    """One gain condition: lhs <relation> rhs."""

    name: str
    lhs: float
    rhs: float
    relation: str = '>'

    @property
    def passed(self) -> bool:
        if self.relation == '>':
            return self.lhs > self.rhs
        return self.lhs >= self.rhs

    def to_dict(self) -> Dict[str, object]:
        return {'name': self.name, 'lhs': self.lhs, 'rhs': _finite_or_none(self.rhs),
                'relation': self.relation, 'passed': self.passed}


@dataclass(frozen=True)
class DefinitenessCheck:
    """Largest eigenvalue of the proof matrix over every nonzero Laplacian eigenvalue."""

    name: str
    max_eigenvalue: float
    worst_lambda: float
    strict: bool = True

    @property
    def passed(self) -> bool:
        return self.max_eigenvalue < 0 if self.strict else self.max_eigenvalue <= 0

    def to_dict(self) -> Dict[str, object]:
        return {'name': self.name, 'max_eigenvalue': self.max_eigenvalue,
                'worst_lambda': self.worst_lambda, 'passed': self.passed}


@dataclass
class GainReport:
    """Outcome of verify_gains; failures are content, not exceptions."""

    gains: GainSet
    checks: List[InequalityCheck]
    definiteness: Optional[DefinitenessCheck]
    bounds: Dict[str, float] = field(default_factory=dict)
    strict: bool = True
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        conditions = all(c.passed for c in self.checks)
        return conditions and (self.definiteness is None or self.definiteness.passed)

    @property
    def failures(self) -> List[str]:
        failed = [c.name for c in self.checks if not c.passed]
        if self.definiteness is not None and not self.definiteness.passed:
            failed.append(self.definiteness.name)
        return failed

    def as_table(self) -> str:
        rows = [f"{'condition':<48} {'lhs':>14} {'':2} {'bound':>14}  result"]
        for c in self.checks:
            rows.append(f"{c.name:<48} {c.lhs:>14.6g} {c.relation:2} {c.rhs:>14.6g}  "
                        f"{'PASS' if c.passed else 'FAIL'}")
        if self.definiteness is not None:
            d = self.definiteness
            rows.append(f"{d.name:<48} {d.max_eigenvalue:>14.6g} {'<':2} {0.0:>14.6g}  "
                        f"{'PASS' if d.passed else 'FAIL'}")
        rows.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        rows.extend(f"note: {note}" for note in self.notes)
        return '\n'.join(rows)

    def to_dict(self) -> Dict[str, object]:
        return {
            'gains': self.gains.to_dict(),
            'passed': self.passed,
            'strict': self.strict,
            'checks': [c.to_dict() for c in self.checks],
            'definiteness': None if self.definiteness is None else self.definiteness.to_dict(),
            'bounds': {k: _finite_or_none(v) for k, v in self.bounds.items()},
            'notes': list(self.notes),
        }


@dataclass(frozen=True)
class ISSReport:
    """Eigenvalues of the per-axis companion matrix [[0, 1], [-kappa, -kappa]]."""

    kappa: float
    eigenvalues: np.ndarray

    @property
    def hurwitz(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))

    def to_dict(self) -> Dict[str, object]:
        return {'kappa': self.kappa, 'hurwitz': self.hurwitz,
                'eigenvalues': [[float(e.real), float(e.imag)] for e in self.eigenvalues]}


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


def _check_margin(margin: float) -> None:
    if not margin > 1:
        raise GainError(f"Margin must exceed 1, got {margin}")


def _check_connected(spec: Spectrum) -> None:
    if not spec.lambda2 > DEFAULT_ZERO_TOL:
        raise GainError("Gain synthesis needs a connected graph (lambda2 > 0)")


# --- lower bounds ----------------------------------------------------------

def alg1_alpha_bound(lambda2: float) -> float:
    if lambda2 <= 0:
        return math.inf
    return max(1.0, 1.0 / lambda2, (lambda2 + 1.0) / (2.0 * lambda2))


def alg1_gamma_bound(n: int, a_bar_d: float) -> float:
    return (n - 1) * a_bar_d


def alg1_beta_bound(alpha: float, lambda2: float, lambdaN: float) -> float:
    denominator = 4.0 * lambda2 * (alpha * lambda2 - 1.0) * (alpha - 1.0)
    if alpha <= 1 or alpha * lambda2 <= 1:
        return math.inf
    return (1.0 + alpha ** 4 * lambdaN ** 2) / denominator


def alg2_gamma_bound(alpha: float, kappa: float, n: int, bounds: SignalBounds) -> float:
    if alpha <= math.sqrt(n):
        return math.inf
    drive = kappa * bounds.r_bar + kappa * bounds.v_bar + bounds.a_bar
    return (alpha + 1.0) / (alpha - math.sqrt(n)) * drive


def alg2_beta_bound(alpha: float, kappa: float, lambda2: float, lambdaN: float) -> float:
    if alpha <= 1 or kappa + (alpha - 1.0) * lambda2 <= 0 or alpha * lambda2 + kappa - 1.0 <= 0:
        return math.inf
    first = kappa ** 2 / (kappa + (alpha - 1.0) * lambda2)
    second = (((kappa - 1.0) ** 2 + 2.0 * alpha ** 2 * (kappa - 1.0) * lambdaN
               + alpha ** 4 * lambdaN ** 2) / (alpha * lambda2 + kappa - 1.0))
    return (first + second) / (4.0 * (alpha - 1.0))


def _floored(margin: float, bound: float) -> float:
    return margin * bound if bound > 0 else GAMMA_FLOOR * margin


# --- synthesis -------------------------------------------------------------

def synthesize_gains_alg1(spec: Spectrum, n: int, a_bar_d: float,
                          margin: float = DEFAULT_MARGIN) -> GainSet:
    """
    Synthesize algorithm-1 gains by inflating each lower bound by margin.

    Args:
        spec: Laplacian spectrum of a connected graph
        n: Number of agents
        a_bar_d: Bound on pairwise input-acceleration deviation
        margin: Multiplicative inflation (> 1)

    Returns:
        GainSet with provenance 'synthesized'

    Raises:
        GainError: On a disconnected graph, margin <= 1 or negative a_bar_d
    """
    _check_margin(margin)
    _check_connected(spec)
    if a_bar_d < 0:
        raise GainError(f"a_bar_d must be non-negative, got {a_bar_d}")

    alpha = margin * alg1_alpha_bound(spec.lambda2)
    gamma = _floored(margin, alg1_gamma_bound(n, a_bar_d))
    beta = margin * alg1_beta_bound(alpha, spec.lambda2, spec.lambdaN)

    gains = GainSet(algorithm=1, alpha=alpha, beta=beta, gamma=gamma,
                    margin=margin, provenance='synthesized')
    logger.info(f"Synthesized algorithm-1 gains: alpha={alpha:.6g}, beta={beta:.6g}, gamma={gamma:.6g}")
    return gains


def synthesize_gains_alg2(spec: Spectrum, n: int, bounds: SignalBounds,
                          margin: float = DEFAULT_MARGIN) -> GainSet:
    """
    Synthesize algorithm-2 gains.

    kappa is fixed at margin * 1 and alpha at margin * sqrt(n); gamma and beta
    follow from their lower bounds evaluated at those values.
    """
    _check_margin(margin)
    _check_connected(spec)

    kappa = margin * 1.0
    alpha = margin * math.sqrt(n)
    gamma = _floored(margin, alg2_gamma_bound(alpha, kappa, n, bounds))
    beta = margin * alg2_beta_bound(alpha, kappa, spec.lambda2, spec.lambdaN)

    gains = GainSet(algorithm=2, alpha=alpha, beta=beta, gamma=gamma, kappa=kappa,
                    margin=margin, provenance='synthesized')
    logger.info(f"Synthesized algorithm-2 gains: kappa={kappa:.6g}, alpha={alpha:.6g}, "
                f"beta={beta:.6g}, gamma={gamma:.6g}")
    return gains


# --- verification ----------------------------------------------------------

def alg1_proof_matrix(gains: GainSet, lambda2: float, lam: float) -> np.ndarray:
    """Scalar-block bound matrix of the algorithm-1 Lyapunov derivative at eigenvalue lam."""
    a, b = gains.alpha, gains.beta
    cross = 0.5 * (1.0 - a ** 2 * lam)
    return np.array([
        [(1.0 - a) * lambda2, 0.0, 0.0],
        [0.0, 1.0 - a * lambda2, cross],
        [0.0, cross, (1.0 - a) * b * lambda2],
    ])


def alg2_proof_matrix(gains: GainSet, lambda2: float, lam: float) -> np.ndarray:
    """Scalar-block bound matrix of the algorithm-2 Lyapunov derivative at eigenvalue lam."""
    a, b, k = gains.alpha, gains.beta, gains.kappa
    cross = 0.5 * ((1.0 - k) - a ** 2 * lam)
    return np.array([
        [-k + (1.0 - a) * lambda2, 0.0, -0.5 * k],
        [0.0, 1.0 - k - a * lambda2, cross],
        [-0.5 * k, cross, b * (1.0 - a)],
    ])


def _definiteness(gains: GainSet, spec: Spectrum, strict: bool) -> Optional[DefinitenessCheck]:
    nonzero = spec.eigenvalues[1:]
    if nonzero.size == 0:
        return None
    build = alg1_proof_matrix if gains.algorithm == 1 else alg2_proof_matrix
    worst, worst_lambda = -math.inf, float(nonzero[0])
    for lam in nonzero:
        top = float(np.linalg.eigvalsh(build(gains, spec.lambda2, float(lam)))[-1])
        if top > worst:
            worst, worst_lambda = top, float(lam)
    name = 'Q negative definite' if gains.algorithm == 1 else 'P negative definite'
    return DefinitenessCheck(name=name, max_eigenvalue=worst, worst_lambda=worst_lambda,
                             strict=strict)


def verify_gains(gains: GainSet, spec: Spectrum, n: int,
                 bounds: Union[SignalBounds, float], strict: bool = True) -> GainReport:
    """
    Check a gain set against the convergence conditions of its algorithm.

    Args:
        gains: Gain set to verify
        spec: Laplacian spectrum of the interaction graph
        n: Number of agents
        bounds: SignalBounds, or the bare a_bar_d for algorithm 1
        strict: Use strict inequalities (the convergence conditions are open)

    Returns:
        GainReport with one entry per inequality and the proof-matrix spot check

    Raises:
        GainError: If algorithm 2 is verified without full SignalBounds
    """
    relation = '>' if strict else '>='
    lambda2 = spec.lambda2 if spec.lambda2 > DEFAULT_ZERO_TOL else 0.0
    lambdaN = spec.lambdaN
    notes: List[str] = []

    if gains.algorithm == 1:
        a_bar_d = bounds.a_bar_d if isinstance(bounds, SignalBounds) else float(bounds)
        beta_bound = alg1_beta_bound(gains.alpha, lambda2, lambdaN)
        gamma_bound = alg1_gamma_bound(n, a_bar_d)
        checks = [
            InequalityCheck('alpha > 1', gains.alpha, 1.0, relation),
            InequalityCheck('alpha > 1/lambda2', gains.alpha,
                            math.inf if lambda2 <= 0 else 1.0 / lambda2, relation),
            InequalityCheck('alpha > (lambda2+1)/(2 lambda2)', gains.alpha,
                            math.inf if lambda2 <= 0 else (lambda2 + 1.0) / (2.0 * lambda2), relation),
            InequalityCheck('gamma > (n-1) a_bar_d', gains.gamma, gamma_bound, relation),
            InequalityCheck('beta > (1+a^4 lN^2)/(4 l2 (a l2-1)(a-1))', gains.beta,
                            beta_bound, relation),
        ]
        used = {'alpha': alg1_alpha_bound(lambda2), 'gamma': gamma_bound, 'beta': beta_bound,
                'a_bar_d': a_bar_d}
    else:
        if not isinstance(bounds, SignalBounds):
            raise GainError("Algorithm-2 verification needs full signal bounds")
        gamma_bound = alg2_gamma_bound(gains.alpha, gains.kappa, n, bounds)
        beta_bound = alg2_beta_bound(gains.alpha, gains.kappa, lambda2, lambdaN)
        checks = [
            InequalityCheck('kappa > 1', gains.kappa, 1.0, relation),
            InequalityCheck('alpha > sqrt(n)', gains.alpha, math.sqrt(n), relation),
            InequalityCheck('gamma > (a+1)/(a-sqrt n)(k r + k v + a_r)', gains.gamma,
                            gamma_bound, relation),
            InequalityCheck('beta > 1/(4(a-1)) [...]', gains.beta, beta_bound, relation),
        ]
        used = {'kappa': 1.0, 'alpha': math.sqrt(n), 'gamma': gamma_bound, 'beta': beta_bound,
                'r_bar': bounds.r_bar, 'v_bar': bounds.v_bar, 'a_bar': bounds.a_bar}

    if not lambda2 > 0:
        notes.append('graph is disconnected (lambda2 = 0); no gain set can pass')
    gamma_check = next(c for c in checks if c.name.startswith('gamma'))
    if not gamma_check.passed and math.isfinite(gamma_check.rhs):
        notes.append(f"gamma = {gains.gamma:.6g} is below the sliding-mode bound "
                     f"{gamma_check.rhs:.6g} for the estimated signal bounds")

    report = GainReport(gains=gains, checks=checks,
                        definiteness=_definiteness(gains, spec, strict),
                        bounds=used, strict=strict, notes=notes)
    if report.passed:
        logger.info(f"Algorithm-{gains.algorithm} gains verified")
    else:
        logger.warning(f"Algorithm-{gains.algorithm} gains fail: {', '.join(report.failures)}")
    return report


def check_iss_subsystem(kappa: float) -> ISSReport:
    """
    Eigenvalues of the summed-error subsystem companion matrix.

    The roots are those of s^2 + kappa s + kappa, Hurwitz for every kappa > 0.

    Raises:
        GainError: If kappa <= 0
    """
    if not kappa > 0:
        raise GainError(f"kappa must be positive, got {kappa}")
    companion = np.array([[0.0, 1.0], [-kappa, -kappa]])
    eigenvalues = np.linalg.eigvals(companion)
    return ISSReport(kappa=float(kappa), eigenvalues=np.sort_complex(eigenvalues))
