"""
Scenario validation for the distributed average tracking simulator.
Parses scenario documents (YAML) into validated pydantic models with
field and line diagnostics.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

# Local imports
from core.errors import GraphError, ScenarioError
from core.graph import Graph, build_graph, is_connected, preset_graph
from utils.presets import merge_documents, preset_document


class StrictModel(BaseModel):
    """Base model: unknown keys are schema violations."""

    model_config = ConfigDict(extra='forbid')


class GraphSpec(StrictModel):
    preset: Optional[Literal['canonical', 'ring', 'path', 'complete']] = None
    n: Optional[int] = Field(default=None, ge=1)
    edges: Optional[List[List[int]]] = None

    @model_validator(mode='after')
    def check_source(self) -> 'GraphSpec':
        if self.preset is None and (self.n is None or self.edges is None):
            raise ValueError("graph needs either a preset or both n and edges")
        if self.preset is not None and self.edges is not None:
            raise ValueError("graph preset and explicit edges are mutually exclusive")
        return self


class TermSpec(StrictModel):
    kind: Literal['sin', 'cos', 'sawtooth', 'constant']
    amplitude: float = 1.0
    frequency: float = 1.0
    period: float = Field(default=2.0, gt=0)
    phase: float = 0.0
    per_agent_scale: bool = False


class AgentSignalSpec(StrictModel):
    profile: List[List[TermSpec]]
    r0: Optional[List[float]] = None
    v0: Optional[List[float]] = None
    scale: Optional[float] = None


class SignalsSpec(StrictModel):
    """
    Either a named preset, one profile shared by all agents (with optional
    per-agent r0, v0 and scale lists), or an explicit per-agent list.
    """

    preset: Optional[Literal['paper_case1', 'paper_case2']] = None
    profile: Optional[List[List[TermSpec]]] = None
    r0: Optional[List[List[float]]] = None
    v0: Optional[List[List[float]]] = None
    scale: Optional[List[float]] = None
    agents: Optional[List[AgentSignalSpec]] = None

    @model_validator(mode='after')
    def check_source(self) -> 'SignalsSpec':
        sources = [self.preset is not None, self.profile is not None, self.agents is not None]
        if sum(sources) != 1:
            raise ValueError("signals need exactly one of preset, profile or agents")
        return self


class InitialSpec(StrictModel):
    preset: Optional[Literal['paper']] = None
    x0: Optional[List[List[float]]] = None
    v0: Optional[List[List[float]]] = None

    @model_validator(mode='after')
    def check_source(self) -> 'InitialSpec':
        if self.preset is None and (self.x0 is None or self.v0 is None):
            raise ValueError("initial_conditions need a preset or both x0 and v0")
        return self


class GainsSpec(StrictModel):
    mode: Literal['auto', 'explicit'] = 'auto'
    margin: Optional[float] = Field(default=None, gt=1)
    alpha: Optional[float] = Field(default=None, ge=0)
    beta: Optional[float] = Field(default=None, ge=0)
    gamma: Optional[float] = Field(default=None, ge=0)
    kappa: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode='after')
    def check_explicit(self) -> 'GainsSpec':
        if self.mode == 'explicit' and None in (self.alpha, self.beta, self.gamma):
            raise ValueError("explicit gains need alpha, beta and gamma")
        return self


class SimSpec(StrictModel):
    step: Optional[float] = Field(default=None, gt=0)
    horizon: Optional[float] = Field(default=None, gt=0)
    integrator: Optional[Literal['euler', 'rk4']] = None
    record_every: Optional[int] = Field(default=None, ge=1)
    match_initialization: Optional[bool] = None
    boundary_layer: Optional[float] = Field(default=None, ge=0)
    divergence_cap: Optional[float] = Field(default=None, gt=0)
    upsilon0: Optional[List[List[float]]] = None


class BoundsSpec(StrictModel):
    horizon: Optional[float] = Field(default=None, gt=0)
    grid_step: Optional[float] = Field(default=None, gt=0)
    safety: Optional[float] = Field(default=None, ge=1)


class Scenario(StrictModel):
    name: str = 'scenario'
    algorithm: Literal[1, 2]
    graph: GraphSpec
    signals: SignalsSpec
    initial_conditions: InitialSpec
    gains: GainsSpec = Field(default_factory=GainsSpec)
    sim: SimSpec = Field(default_factory=SimSpec)
    bounds: BoundsSpec = Field(default_factory=BoundsSpec)

    @model_validator(mode='after')
    def check_algorithm_gains(self) -> 'Scenario':
        if self.algorithm == 2 and self.gains.mode == 'explicit' and self.gains.kappa is None:
            raise ValueError("explicit algorithm-2 gains need kappa")
        return self

    def to_document(self) -> Dict[str, Any]:
        """Plain mapping without unset optionals, suitable for YAML."""
        return self.model_dump(exclude_none=True)


def scenario_graph(scenario: Scenario) -> Graph:
    """Build the graph a scenario describes."""
    spec = scenario.graph
    if spec.preset is not None:
        return preset_graph(spec.preset, spec.n)
    return build_graph(spec.n, spec.edges)


def _line_index(text: str) -> Dict[Tuple[Any, ...], int]:
    """Map key paths of a YAML document to 1-based line numbers."""
    index: Dict[Tuple[Any, ...], int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return index

    def walk(node, path):
        index[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                child = path + (key.value,)
                index[child] = key.start_mark.line + 1
                walk_value(value, child)
        elif isinstance(node, yaml.SequenceNode):
            for k, item in enumerate(node.value):
                walk(item, path + (k,))

    def walk_value(node, path):
        line = index[path]
        walk(node, path)
        index[path] = line

    if root is not None:
        walk(root, ())
    return index


def _locate(index: Dict[Tuple[Any, ...], int], loc: Tuple[Any, ...]) -> Optional[int]:
    path = tuple(str(p) if not isinstance(p, int) else p for p in loc)
    while path:
        if path in index:
            return index[path]
        path = path[:-1]
    return index.get(())


def parse_document(data: Dict[str, Any], text: Optional[str] = None) -> Scenario:
    """
    Validate an already-loaded scenario mapping.

    A top-level preset key expands to the named preset, overlaid with the
    remaining keys of the document.
    """
    if not isinstance(data, dict):
        raise ScenarioError("Scenario document must be a mapping", line=1)

    if 'preset' in data:
        overrides = {k: v for k, v in data.items() if k != 'preset'}
        data = merge_documents(preset_document(str(data['preset'])), overrides)

    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(p for p in first['loc'])
        field = '.'.join(str(p) for p in loc) or None
        line = _locate(_line_index(text), loc) if text is not None else None
        raise ScenarioError(f"Invalid scenario: {first['msg']}", field=field, line=line)

    try:
        g = scenario_graph(scenario)
    except GraphError as e:
        raise ScenarioError(str(e), field='graph',
                            line=_locate(_line_index(text), ('graph',)) if text else None)
    if not is_connected(g):
        raise ScenarioError("Interaction graph is not connected", field='graph',
                            line=_locate(_line_index(text), ('graph',)) if text else None)

    _check_dimensions(scenario, g.n)
    logger.debug(f"Parsed scenario '{scenario.name}' (algorithm {scenario.algorithm}, n={g.n})")
    return scenario


def _check_dimensions(scenario: Scenario, n: int) -> None:
    checks = [('initial_conditions.x0', scenario.initial_conditions.x0),
              ('initial_conditions.v0', scenario.initial_conditions.v0),
              ('signals.r0', scenario.signals.r0),
              ('signals.v0', scenario.signals.v0),
              ('signals.scale', scenario.signals.scale),
              ('signals.agents', scenario.signals.agents),
              ('sim.upsilon0', scenario.sim.upsilon0)]
    for field, rows in checks:
        if rows is not None and len(rows) != n:
            raise ScenarioError(f"Expected {n} entries, got {len(rows)}", field=field)
    preset_sized = [scenario.signals.preset, scenario.initial_conditions.preset]
    if any(p is not None for p in preset_sized) and n != 10:
        raise ScenarioError("Replication presets are defined for 10 agents", field='graph')


def parse_scenario(text: str) -> Scenario:
    """
    Parse a YAML scenario document.

    Args:
        text: Document text

    Returns:
        Validated Scenario with presets expanded

    Raises:
        ScenarioError: On malformed YAML, schema violations (unknown keys
            included), a disconnected graph or inconsistent dimensions
    """
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ScenarioError(f"Malformed scenario document: {e.problem}", line=line)
    except yaml.YAMLError as e:
        raise ScenarioError(f"Malformed scenario document: {e}")
    return parse_document(data, text)
