"""
Code-defined replication presets.

Each preset is a scenario document (the same mapping a scenario file parses
to), so presets go through the regular validation path.
"""

import copy
from typing import Dict, List, Tuple

import numpy as np

# Local imports
from core.errors import ScenarioError

REPLICATION_AGENTS = 10


def replication_offsets() -> np.ndarray:
    """b = [-4, -3, ..., 5]."""
    return np.arange(-4, REPLICATION_AGENTS - 4, dtype=float)


def replication_initial_conditions() -> Tuple[np.ndarray, np.ndarray]:
    """x(0) = [0.1 b, -0.2 b] and v(0) = [0.2 b, 0.1 b], one row per agent."""
    b = replication_offsets()
    x0 = np.column_stack([0.1 * b, -0.2 * b])
    v0 = np.column_stack([0.2 * b, 0.1 * b])
    return x0, v0


SCENARIO_PRESETS: Dict[str, Dict[str, object]] = {
    'paper_case1': {
        'name': 'paper_case1',
        'algorithm': 1,
        'graph': {'preset': 'canonical'},
        'signals': {'preset': 'paper_case1'},
        'initial_conditions': {'preset': 'paper'},
        'gains': {'mode': 'explicit', 'alpha': 20.0, 'beta': 400.0, 'gamma': 5.0},
        'sim': {'horizon': 20.0, 'match_initialization': True},
    },
    'paper_case2': {
        'name': 'paper_case2',
        'algorithm': 2,
        'graph': {'preset': 'canonical'},
        'signals': {'preset': 'paper_case2'},
        'initial_conditions': {'preset': 'paper'},
        'gains': {'mode': 'explicit', 'kappa': 2.0, 'alpha': 10.0, 'beta': 450.0, 'gamma': 50.0},
        'sim': {'horizon': 30.0, 'match_initialization': False},
    },
}

# replicate subcommand name -> scenario preset
REPLICATIONS = {'case1': 'paper_case1', 'case2': 'paper_case2'}


def preset_document(name: str) -> Dict[str, object]:
    """Deep copy of a scenario preset, safe to modify."""
    if name not in SCENARIO_PRESETS:
        raise ScenarioError(f"Unknown scenario preset '{name}' (available: {', '.join(list_presets())})",
                            field='preset')
    return copy.deepcopy(SCENARIO_PRESETS[name])


def merge_documents(base: Dict[str, object], override: Dict[str, object]) -> Dict[str, object]:
    """Recursively overlay override onto base; mappings merge, everything else replaces."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_documents(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def list_presets() -> List[str]:
    return sorted(SCENARIO_PRESETS)
