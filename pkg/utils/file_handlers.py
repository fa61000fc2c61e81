"""
Artifact handling for the distributed average tracking simulator.
Writes trajectory tables, run metadata and plots, and reads tables back.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import yaml  # noqa: E402
from loguru import logger  # noqa: E402

# Local imports
from config.settings import Config  # noqa: E402
from core.dynamics import stack_states  # noqa: E402
from core.errors import ExportError  # noqa: E402
from core.simulation import METRIC_NAMES, Trajectory  # noqa: E402

FLOAT_FORMAT = '%.17g'
STATE_FIELDS = ('x', 'v', 'w', 'r', 'vr')
PLOT_FILES = ('positions.svg', 'velocities.svg', 'metrics.svg')

PathLike = Union[str, Path]


@dataclass
class RunArtifact:
    """Files emitted for one run."""

    metadata: Dict[str, Any]
    trajectory_file: Path
    plots: List[Path] = field(default_factory=list)
    metadata_file: Optional[Path] = None


def trajectory_columns(n: int, p: int) -> List[str]:
    """Header of the trajectory table: t, per-agent blocks, then metrics."""
    columns = ['t']
    for i in range(1, n + 1):
        for name in STATE_FIELDS:
            columns.extend(f"{name}{i}_{k}" for k in range(1, p + 1))
    return columns + list(METRIC_NAMES)


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    """Tabulate a trajectory, one row per recorded sample."""
    if len(traj) == 0:
        raise ExportError("Cannot tabulate an empty trajectory")
    data = stack_states(traj.states)                         # (samples, 5, n, p)
    w = traj.filter_outputs()                                # (samples, n, p)
    blocks = np.stack([data[:, 0], data[:, 1], w, data[:, 3], data[:, 4]], axis=2)
    samples, n, _, p = blocks.shape
    rows = np.column_stack([
        np.asarray(traj.times),
        blocks.reshape(samples, n * len(STATE_FIELDS) * p),
        np.array([m.as_row() for m in traj.metrics]),
    ])
    return pd.DataFrame(rows, columns=trajectory_columns(n, p))


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    except OSError as e:
        raise ExportError(f"Cannot write {path}: {e}")
    return path


def export_trajectory(traj: Trajectory, path: PathLike) -> Path:
    """
    Export a trajectory as comma-separated text with 17 significant digits.

    Args:
        traj: Non-empty trajectory
        path: Destination file

    Returns:
        Path of the written file

    Raises:
        ExportError: On an empty trajectory or an unwritable path
    """
    path = write_table(trajectory_frame(traj), path)
    logger.info(f"Exported {len(traj)} samples to {path}")
    return path


def read_trajectory(path: PathLike) -> pd.DataFrame:
    """Read an exported trajectory table without losing float precision."""
    try:
        return pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError) as e:
        raise ExportError(f"Cannot read trajectory {path}: {e}")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_metadata(metadata: Dict[str, Any], outdir: PathLike) -> Path:
    """
    Write metadata.json and the resolved scenario document next to it.

    The resolved scenario (metadata['scenario']) is written as
    resolved_scenario.yaml, which the run command accepts as input.
    """
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / 'metadata.json'
        path.write_text(json.dumps(metadata, indent=2, sort_keys=True, default=_json_default) + '\n')
        if 'scenario' in metadata:
            (outdir / 'resolved_scenario.yaml').write_text(
                yaml.safe_dump(metadata['scenario'], sort_keys=False))
    except OSError as e:
        raise ExportError(f"Cannot write metadata to {outdir}: {e}")
    return path


def _save(fig, path: Path) -> Path:
    try:
        fig.savefig(path, format='svg', metadata={'Date': None})
    except OSError as e:
        raise ExportError(f"Cannot write plot {path}: {e}")
    finally:
        plt.close(fig)
    return path


def _trace_plot(times: np.ndarray, agents: np.ndarray, average: np.ndarray,
                title: str, label: str) -> Any:
    """Agent traces with the input-signal average; 2-D plane when p >= 2, else against time."""
    fig, ax = plt.subplots(figsize=(6, 5))
    n = agents.shape[1]
    if agents.shape[2] >= 2:
        for i in range(n):
            ax.plot(agents[:, i, 0], agents[:, i, 1], linewidth=0.8)
            ax.plot(agents[0, i, 0], agents[0, i, 1], 's', markersize=5, color='black',
                    fillstyle='none')
        ax.plot(average[:, 0], average[:, 1], 'k--', linewidth=1.2, label='input average')
        ax.plot(average[0, 0], average[0, 1], 'o', color='red', label='initial average')
        ax.set_xlabel(f"{label}[1]")
        ax.set_ylabel(f"{label}[2]")
    else:
        for i in range(n):
            ax.plot(times, agents[:, i, 0], linewidth=0.8)
            ax.plot(times[0], agents[0, i, 0], 's', markersize=5, color='black', fillstyle='none')
        ax.plot(times, average[:, 0], 'k--', linewidth=1.2, label='input average')
        ax.plot(times[0], average[0, 0], 'o', color='red', label='initial average')
        ax.set_xlabel('t [s]')
        ax.set_ylabel(label)
    ax.set_title(title)
    ax.legend(loc='best')
    ax.grid(True, alpha=0.3)
    return fig


def emit_plots(traj: Trajectory, outdir: PathLike) -> List[Path]:
    """
    Write position, velocity and metric plots as SVG files.

    Args:
        traj: Trajectory with at least two samples
        outdir: Destination directory

    Returns:
        Paths of positions.svg, velocities.svg and metrics.svg

    Raises:
        ExportError: On a trajectory with fewer than two samples or an
            unwritable directory
    """
    if len(traj) < 2:
        raise ExportError("Plots need at least two samples")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ExportError(f"Cannot create plot directory {outdir}: {e}")

    times = np.asarray(traj.times)
    data = stack_states(traj.states)
    paths = []

    fig = _trace_plot(times, data[:, 0], data[:, 3].mean(axis=1), 'Agent positions', 'x')
    paths.append(_save(fig, outdir / PLOT_FILES[0]))

    fig = _trace_plot(times, data[:, 1], data[:, 4].mean(axis=1), 'Agent velocities', 'v')
    paths.append(_save(fig, outdir / PLOT_FILES[1]))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in METRIC_NAMES:
        values = traj.metric_array(name)
        ax.plot(times, np.where(values > 0, values, np.nan), label=name, linewidth=1.0)
    ax.set_yscale('log')
    ax.set_xlabel('t [s]')
    ax.set_title('Tracking and convergence metrics')
    ax.legend(loc='best', fontsize='small')
    ax.grid(True, which='both', alpha=0.3)
    paths.append(_save(fig, outdir / PLOT_FILES[2]))

    logger.info(f"Wrote {len(paths)} plots to {outdir}")
    return paths


class ArtifactWriter:
    """
    Writes the complete artifact set of a run.

    This class provides functionality to:
    - Place each run in its own directory under the output root
    - Export the trajectory table and plots
    - Record metadata that reproduces the run
    """

    def __init__(self, config: Config):
        """
        Initialize the ArtifactWriter.

        Args:
            config: Application configuration (output root)
        """
        self.config = config

    def run_directory(self, name: str, outdir: Optional[PathLike] = None) -> Path:
        return Path(outdir) if outdir is not None else Path(self.config.OUTPUT_DIR) / name

    def write_run(self, metadata: Dict[str, Any], traj: Trajectory, outdir: Path,
                  plots: bool = True) -> RunArtifact:
        trajectory_file = export_trajectory(traj, outdir / 'trajectory.csv')
        plot_paths = emit_plots(traj, outdir) if plots and len(traj) >= 2 else []
        metadata = dict(metadata)
        metadata['summary'] = traj.summary()
        metadata['trajectory_file'] = trajectory_file.name
        metadata['plots'] = [p.name for p in plot_paths]
        metadata_file = write_metadata(metadata, outdir)
        return RunArtifact(metadata=metadata, trajectory_file=trajectory_file,
                           plots=plot_paths, metadata_file=metadata_file)
