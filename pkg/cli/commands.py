"""
Command Routes Module for the distributed average tracking simulator.
Defines the subcommands of the command-line interface.
"""

import argparse
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import pandas as pd
from loguru import logger

# Local imports
from config.settings import Config, get_config
from core.errors import DatError, DivergenceError, ScenarioError
from core.gains import check_iss_subsystem
from core.graph import is_connected, spectrum
from core.runner import ScenarioRunner, apply_overrides
from utils.file_handlers import ArtifactWriter, export_trajectory, write_table
from utils.presets import REPLICATIONS, preset_document
from utils.validators import Scenario, parse_document, parse_scenario, scenario_graph


def load_scenario(path: str) -> Scenario:
    """Read and validate a scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario file {path}: {e}")
    return parse_scenario(text)


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--out', type=Path, default=None,
                        help='output directory (default: DAT_OUTPUT_DIR/<scenario name>)')
    parser.add_argument('--step', type=float, default=None, help='integration step [s]')
    parser.add_argument('--horizon', type=float, default=None, help='simulated time span [s]')
    parser.add_argument('--integrator', choices=('euler', 'rk4'), default=None)
    parser.add_argument('--boundary-layer', type=float, default=None,
                        help='signum saturation width (0 keeps the exact signum)')
    parser.add_argument('--margin', type=float, default=None,
                        help='synthesize gains with this margin instead of the scenario gains')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='dat',
        description='Distributed average tracking simulator for double-integrator networks.')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='simulate a scenario file')
    run.add_argument('scenario')
    _add_override_flags(run)
    run.add_argument('--no-plots', action='store_true')

    verify = sub.add_parser('verify-gains', help='check scenario gains against the convergence conditions')
    verify.add_argument('scenario')
    verify.add_argument('--margin', type=float, default=None)
    verify.add_argument('--json', action='store_true', help='print the report as JSON')

    spec = sub.add_parser('spectrum', help='print the Laplacian spectrum of a scenario graph')
    spec.add_argument('scenario')

    replicate = sub.add_parser('replicate', help='run a built-in replication scenario')
    replicate.add_argument('case', choices=sorted(REPLICATIONS))
    _add_override_flags(replicate)
    replicate.add_argument('--no-plots', action='store_true')

    sweep = sub.add_parser('sweep', help='run a scenario over several gain margins')
    sweep.add_argument('scenario')
    sweep.add_argument('--margins', type=float, nargs='+', required=True)
    _add_override_flags(sweep)
    return parser


def _sweep_worker(document: Dict[str, Any]) -> Dict[str, Any]:
    """Run one sweep point in a worker process and return its summary row."""
    runner = ScenarioRunner(get_config())
    scenario = parse_document(document)
    row: Dict[str, Any] = {'margin': scenario.gains.margin}
    try:
        plan = runner.prepare(scenario)
        row.update({k: v for k, v in plan.gains.to_dict().items()
                    if k in ('alpha', 'beta', 'gamma', 'kappa')})
        row['verified'] = plan.report.passed
        trajectory = runner.execute(plan)
        summary = trajectory.summary()
        row.update(summary['final'])
        row['max_w_final'] = summary['max_w_final']
        row['error'] = ''
    except DatError as e:
        row['error'] = str(e)
    return row


class CommandRouter:
    """
    Command Router for the command-line interface.

    This class provides functionality to:
    - Run scenario files and built-in replications
    - Verify gains and print the condition table
    - Inspect graph spectra
    - Sweep gain margins over a process pool
    """

    def __init__(self, config: Config):
        """
        Initialize the Command Router.

        Args:
            config: Application configuration
        """
        self.config = config
        self.runner = ScenarioRunner(config)
        self.writer = ArtifactWriter(config)
        self._handlers: Dict[str, Callable[[argparse.Namespace], int]] = {
            'run': self._handle_run,
            'verify-gains': self._handle_verify_gains,
            'spectrum': self._handle_spectrum,
            'replicate': self._handle_replicate,
            'sweep': self._handle_sweep,
        }

    def dispatch(self, args: argparse.Namespace) -> int:
        """Run the handler of args.command and return its exit code."""
        return self._handlers[args.command](args)

    def _overridden(self, scenario: Scenario, args: argparse.Namespace,
                    margin: Optional[float] = None) -> Scenario:
        return apply_overrides(scenario, step=args.step, horizon=args.horizon,
                               integrator=args.integrator, boundary_layer=args.boundary_layer,
                               margin=margin if margin is not None else args.margin)

    def _simulate(self, scenario: Scenario, args: argparse.Namespace) -> int:
        plan = self.runner.prepare(scenario)
        outdir = self.writer.run_directory(plan.scenario.name, args.out)
        metadata = plan.metadata()
        try:
            trajectory = self.runner.execute(plan)
        except DivergenceError as e:
            if e.trajectory is not None and len(e.trajectory) > 0:
                export_trajectory(e.trajectory, outdir / 'trajectory_partial.csv')
            raise

        artifact = self.writer.write_run(metadata, trajectory, outdir, plots=not args.no_plots)
        (outdir / 'gain_report.txt').write_text(plan.report.as_table() + '\n')

        final = trajectory.metrics[-1]
        print(f"scenario: {plan.scenario.name} (algorithm {plan.algorithm}, n={plan.graph.n})")
        print(f"gains: {plan.gains.to_dict()}")
        print(f"gain conditions: {'PASS' if plan.report.passed else 'FAIL'}")
        for note in plan.report.notes:
            print(f"  note: {note}")
        print(f"final t={trajectory.times[-1]:g}: pos_err={final.pos_err:.3e} "
              f"vel_err={final.vel_err:.3e} s1={final.s1:.3e} s2={final.s2:.3e} "
              f"consensus_err={final.consensus_err:.3e}")
        print(f"artifacts: {artifact.trajectory_file.parent}")
        return 0

    def _handle_run(self, args: argparse.Namespace) -> int:
        """Handle the run subcommand."""
        scenario = self._overridden(load_scenario(args.scenario), args)
        return self._simulate(scenario, args)

    def _handle_replicate(self, args: argparse.Namespace) -> int:
        """Handle the replicate subcommand."""
        scenario = parse_document(preset_document(REPLICATIONS[args.case]))
        logger.info(f"Replicating {args.case}")
        return self._simulate(self._overridden(scenario, args), args)

    def _handle_verify_gains(self, args: argparse.Namespace) -> int:
        """Handle the verify-gains subcommand; failed conditions are reported, not errors."""
        scenario = load_scenario(args.scenario)
        if args.margin is not None:
            scenario = apply_overrides(scenario, margin=args.margin)
        plan = self.runner.prepare(scenario)
        if args.json:
            print(json.dumps(plan.report.to_dict(), indent=2))
            return 0
        print(plan.report.as_table())
        if plan.algorithm == 2:
            iss = check_iss_subsystem(plan.gains.kappa)
            roots = ', '.join(f"{e.real:.4g}{e.imag:+.4g}j" for e in iss.eigenvalues)
            print(f"ISS subsystem (kappa={iss.kappa:g}): roots {roots}, "
                  f"{'Hurwitz' if iss.hurwitz else 'not Hurwitz'}")
        return 0

    def _handle_spectrum(self, args: argparse.Namespace) -> int:
        """Handle the spectrum subcommand."""
        scenario = load_scenario(args.scenario)
        g = scenario_graph(scenario)
        spec = spectrum(g, tol=self.config.EIGEN_TOL)
        print(f"n={g.n} m={g.m} connected={is_connected(g)} "
              f"zero_eigenvalues={spec.zero_count(self.config.ZERO_EIGEN_TOL)}")
        print('eigenvalues: ' + ' '.join(f"{e:.10g}" for e in spec.eigenvalues))
        print(f"lambda2={spec.lambda2:.10g} lambdaN={spec.lambdaN:.10g}")
        return 0

    def _handle_sweep(self, args: argparse.Namespace) -> int:
        """Handle the sweep subcommand: one auto-gain run per margin."""
        scenario = load_scenario(args.scenario)
        # Defaults come from this router's config, not the workers'.
        documents = [self.runner.resolve(self._overridden(scenario, args, margin=m)).to_document()
                     for m in args.margins]
        workers = min(self.config.SWEEP_WORKERS, len(documents))

        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows: List[Dict[str, Any]] = list(pool.map(_sweep_worker, documents))
        else:
            rows = [_sweep_worker(d) for d in documents]

        table = pd.DataFrame(rows).sort_values('margin').reset_index(drop=True)
        outdir = self.writer.run_directory(f"{scenario.name}_sweep", args.out)
        path = write_table(table, outdir / 'sweep.csv')
        print(table.to_string(index=False, float_format=lambda v: f"{v:.4g}"))
        print(f"sweep table: {path}")
        failed = table['error'].astype(bool).sum()
        if failed:
            logger.warning(f"{failed} of {len(table)} sweep runs failed")
        return 0
