import argparse
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from types import SimpleNamespace
from typing import Dict, List, Optional, Tuple
import csv
import logging
import pprint
import sys
import numpy as np
from tqdm import tqdm

from . import oracle, rounding, scp_solver
from .interference_model import (
    apply_power_adjustment, build_model, sinr_direct)
from .modes import MODES
from .selection import make_mode, to_matrix
from .utils.barrier import InfeasibleProgram, SolverNotConverged
from .utils.parsers import (
    ScenarioError, bits_to_selection, parse_scenario, parse_theta_grid,
    selection_to_bits)
from .utils.tools import derive_rng

SCENARIO_DIR = Path(__file__).resolve().parent.parent / 'scenarios'

# k_jnt, (kt, kr) factored, (km, kr) mfc, (kt, kr, km) hybrid
CARDINALITY_TABLE = [
    (2, (1, 2), (1, 2), (4, 2, 1)),
    (3, (1, 3), (1, 3), (4, 3, 1)),
    (4, (2, 2), (2, 2), (4, 2, 2)),
    (5, (1, 5), (1, 5), (4, 5, 1)),
    (6, (2, 3), (2, 3), (4, 3, 2)),
    (8, (2, 4), (2, 4), (4, 4, 2)),
    (9, (3, 3), (3, 3), (4, 3, 3)),
    (10, (2, 5), (2, 5), (4, 5, 2)),
    (12, (3, 4), (3, 4), (4, 4, 3)),
    (15, (3, 5), (3, 5), (4, 5, 3)),
    (16, (4, 4), (4, 4), (4, 4, 4)),
    (20, (4, 5), (4, 5), (4, 5, 4)),
    (25, (5, 5), (5, 5), (5, 5, 5)),
]


'''
A set of standard experiments that can be directly selected from the command
line using their name. Each is a dictionary with the following entries:
    - scenario: the scenario file, relative to the scenarios/ directory.
    - theta: the target azimuth grid START:STOP:STEP in degrees.
    - modes: for each selection mode, the list of count sets to run.
    - scp, rounding: solver configurations, see scp_solver and rounding.
The exhaustive-search oracle is enabled with --oracle; it is out of budget
for mimo_10x10.
'''
confs = {
    'mimo_5x5': {
        'scenario': 'mimo_5x5.scn',
        'theta': '0:90:2',
        'modes': {
            'joint': [{'k': 12}],
            'factored': [{'kt': 3, 'kr': 4}],
            'mfc': [{'km': 3, 'kr': 4}],
            'hybrid': [{'kt': 4, 'km': 3, 'kr': 4}],
        },
        'scp': {'max_outer_iterations': 10, 'psi': 10.},
        'rounding': {'n_samples': 1000},
    },
    'mimo_10x10': {
        'scenario': 'mimo_10x10.scn',
        'theta': '0:30:2',
        'modes': {
            'joint': [{'k': 54}],
            'factored': [{'kt': 6, 'kr': 9}],
            'mfc': [{'km': 6, 'kr': 9}],
            'hybrid': [{'kt': 7, 'km': 6, 'kr': 9}],
        },
        'scp': {'max_outer_iterations': 10, 'psi': 10.},
        'rounding': {'n_samples': 1000},
    },
    'mimo_5x5_cardinality': {
        'scenario': 'mimo_5x5.scn',
        'theta': '18',
        'modes': {
            'joint': [{'k': k} for k, *_ in CARDINALITY_TABLE],
            'factored': [{'kt': kt, 'kr': kr}
                         for _, (kt, kr), *_ in CARDINALITY_TABLE],
            'mfc': [{'km': km, 'kr': kr}
                    for _, _, (km, kr), _ in CARDINALITY_TABLE],
            'hybrid': [{'kt': kt, 'km': km, 'kr': kr}
                       for *_, (kt, kr, km) in CARDINALITY_TABLE],
        },
        'scp': {'max_outer_iterations': 10, 'psi': 10.},
        'rounding': {'n_samples': 1000},
    },
}

RESULT_HEADER = ['theta_deg', 'mode', 'power_adjust', 'sinr_full_db',
                 'sinr_scp_db', 'sinr_oracle_db', 'gap_db', 'selection_bits',
                 'seed']

EXIT_SCENARIO, EXIT_SOLVER, EXIT_BUDGET, EXIT_IO = 3, 4, 5, 6


@dataclass
class ExperimentPlan:
    scenario: Path
    modes: List[Tuple[str, List[Dict[str, int]]]]
    thetas: np.ndarray
    run_oracle: bool = False
    power_adjust: bool = False
    power_adjust_clutter: bool = False
    seed: int = 0
    output: Optional[Path] = None
    scp: dict = field(default_factory=dict)
    rounding: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    cache: Optional[Path] = None
    num_workers: int = 1

    def __post_init__(self):
        self.thetas = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        if self.thetas.size == 0:
            raise ValueError('The angle grid is empty.')
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f'The seed must be a 64-bit integer, '
                             f'got {self.seed}.')
        for name, counts_list in self.modes:
            if name not in MODES:
                raise ValueError(f'Unknown selection mode: {name}.')
            if not counts_list:
                raise ValueError(f'No counts given for mode {name}.')

    def make_modes(self, M, N):
        """Instantiate every (mode, counts) pair, validating the counts."""
        return [[make_mode(name, M, N, **counts) for counts in counts_list]
                for name, counts_list in self.modes]


def _row(theta, mode, adjusted, full, scp, best_oracle, bits, seed):
    gap = best_oracle - scp if np.isfinite(best_oracle) else np.nan
    return {
        'theta_deg': theta, 'mode': mode.label, 'power_adjust': int(adjusted),
        'sinr_full_db': full, 'sinr_scp_db': scp,
        'sinr_oracle_db': best_oracle, 'gap_db': gap,
        'selection_bits': bits, 'seed': seed,
    }


def _failed_row(theta, mode, adjusted, seed):
    return _row(theta, mode, adjusted, np.nan, np.nan, np.nan, '', seed)


class _OracleMemo:
    """Exhaustive optima of one grid point. Lookups go to the optima the
    parent loaded from the cache; new ones are kept for the parent to
    write once the sweep is reduced."""
    def __init__(self, plan, known):
        self.run, self.conf = plan.run_oracle, plan.oracle
        self.known, self.found = known, {}

    def __call__(self, model, mode):
        key = oracle.cache_key(model, mode)
        if key in self.known:
            return self.known[key]
        if key not in self.found:
            self.found[key] = oracle.exhaustive_optimum(model, mode, self.conf)
        return self.found[key]


def _solve_point(model, mode, plan, rng, memo):
    relaxed = scp_solver.run_scp(model, mode, plan.scp)
    result = rounding.randomized_rounding(
        model, mode, relaxed, plan.rounding, rng)
    best_oracle = np.nan
    if memo.run:
        best_oracle = memo(model, mode).sinr_db
    return result, best_oracle


def _power_adjusted(model, mode, plan, result, rng, memo):
    """SCP and oracle SINR with the transmit power shared by k_t."""
    adjusted = apply_power_adjustment(
        model, mode.kt, scale_clutter=plan.power_adjust_clutter)
    if plan.power_adjust_clutter:
        result, best_oracle = _solve_point(adjusted, mode, plan, rng, memo)
        return adjusted, result.best, best_oracle
    # f does not depend on the target power: the selections carry over
    best_oracle = np.nan
    if memo.run:
        best_oracle = sinr_direct(adjusted, memo(model, mode).best)
    return adjusted, result.best, best_oracle


POINT_ERRORS = (ValueError, RuntimeError, OSError, np.linalg.LinAlgError)


def run_point(task):
    """Rows of one (angle, mode, counts) grid point and the oracle optima
    it computed. Failures become rows of nan so that the sweep always
    completes."""
    plan, scenario, (ti, mi, ci), known = task
    theta = float(plan.thetas[ti])
    name, counts_list = plan.modes[mi]
    geom = scenario.geometry
    mode = make_mode(name, geom.M, geom.N, **counts_list[ci])
    memo = _OracleMemo(plan, known)
    rows = []
    try:
        model = build_model(scenario, theta)
        full = sinr_direct(model)
        result, best_oracle = _solve_point(
            model, mode, plan, derive_rng(plan.seed, ti, mi, ci), memo)
        rows.append(_row(theta, mode, False, full, result.sinr_db,
                         best_oracle, result.bits, plan.seed))
    except POINT_ERRORS as e:
        logging.warning(f'{mode.label} failed at {theta} deg: {e}')
        rows.append(_failed_row(theta, mode, False, plan.seed))
        if plan.power_adjust and hasattr(mode, 'kt'):
            rows.append(_failed_row(theta, mode, True, plan.seed))
        return (ti, mi, ci), rows, memo.found

    if plan.power_adjust and hasattr(mode, 'kt'):
        try:
            adjusted, best, best_oracle = _power_adjusted(
                model, mode, plan, result,
                derive_rng(plan.seed, ti, mi, ci, 1), memo)
            rows.append(_row(theta, mode, True, full,
                             sinr_direct(adjusted, best), best_oracle,
                             selection_to_bits(best), plan.seed))
        except POINT_ERRORS as e:
            logging.warning(f'Power-adjusted {mode.label} failed at '
                            f'{theta} deg: {e}')
            rows.append(_failed_row(theta, mode, True, plan.seed))
    return (ti, mi, ci), rows, memo.found


def run_sweep(plan, scenario=None):
    if scenario is None:
        scenario = parse_scenario(plan.scenario)
    geom = scenario.geometry
    modes = plan.make_modes(geom.M, geom.N)
    known = {}
    if plan.run_oracle:
        budget = {**oracle.default_conf, **plan.oracle}['budget']
        for mode in (m for ms in modes for m in ms):
            if mode.num_candidates() > budget:
                raise oracle.BudgetExceeded(
                    f'{mode.label} has {mode.num_candidates()} candidates, '
                    f'above the budget {budget}.')
        # only this process opens the cache file
        known = oracle.load_cached(
            plan.cache, [m.label for ms in modes for m in ms])

    tasks = [(plan, scenario, (ti, mi, ci), known)
             for ti in range(len(plan.thetas))
             for mi, (_, counts_list) in enumerate(plan.modes)
             for ci in range(len(counts_list))]
    logging.info(f'Running {len(tasks)} grid points of {plan.scenario}.')
    if plan.num_workers > 1:
        with Pool(plan.num_workers) as p:
            results = list(tqdm(p.imap_unordered(run_point, tasks),
                                total=len(tasks)))
    else:
        results = [run_point(t) for t in tqdm(tasks)]
    results = sorted(results, key=lambda r: r[0])

    found = {}
    for _, _, optima in results:
        found.update(optima)
    if found:
        logging.info(f'Storing {len(found)} new optima in {plan.cache}.')
        oracle.store_cached(plan.cache, found)
    return [row for _, rows, _ in results for row in rows]


def report_selections(table, M, N):
    """Log the selected pattern of each row as an N x M matrix, receivers
    along the rows and transmitters along the columns."""
    for row in table:
        if not row['selection_bits']:
            continue
        C = to_matrix(bits_to_selection(row['selection_bits']), M, N)
        pattern = '\n'.join(' '.join(str(v) for v in r) for r in C)
        adjusted = ' (power adjusted)' if row['power_adjust'] else ''
        logging.info(f'{row["mode"]}{adjusted} at {row["theta_deg"]:g} deg, '
                     f'{row["sinr_scp_db"]:.2f} dB:\n{pattern}')


def _format(value):
    if isinstance(value, (float, np.floating)):
        return f'{value:.6f}'
    return str(value)


def emit_results(table, path):
    assert len(table) > 0, 'Nothing to write.'
    Path(path).parent.mkdir(exist_ok=True, parents=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(RESULT_HEADER)
        for row in table:
            writer.writerow([_format(row[k]) for k in RESULT_HEADER])
    logging.info(f'Wrote {len(table)} rows to {path}.')


def load_results(path):
    with open(path, 'r', newline='') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULT_HEADER:
            raise ValueError(f'Unexpected header in {path}: '
                             f'{reader.fieldnames}')
        table = []
        for row in reader:
            for k in ['theta_deg', 'sinr_full_db', 'sinr_scp_db',
                      'sinr_oracle_db', 'gap_db']:
                row[k] = float(row[k])
            row['power_adjust'] = int(row['power_adjust'])
            row['seed'] = int(row['seed'])
            table.append(row)
    return table


def make_plan(conf, **overrides):
    """ExperimentPlan of a preset, updated with command-line overrides."""
    conf = SimpleNamespace(**conf)
    scenario = overrides.get('scenario') or SCENARIO_DIR / conf.scenario
    theta = overrides.get('theta') or conf.theta

    modes = conf.modes
    name = overrides.get('mode') or 'all'
    counts = overrides.get('counts') or {}
    if name == 'all':
        if counts:
            raise ValueError('Counts can only be given for a single mode.')
        plan_modes = [(m, modes[m]) for m in MODES if m in modes]
    else:
        plan_modes = [(name, [counts] if counts else modes.get(name, []))]

    def merged(key, preset):
        return {**preset, **{k: v for k, v in overrides.get(key, {}).items()
                             if v is not None}}

    return ExperimentPlan(
        scenario=Path(scenario),
        modes=plan_modes,
        thetas=parse_theta_grid(theta),
        run_oracle=bool(overrides.get('oracle')),
        power_adjust=bool(overrides.get('power_adjust')),
        power_adjust_clutter=bool(overrides.get('power_adjust_clutter')),
        seed=overrides.get('seed') or 0,
        output=overrides.get('out'),
        scp=merged('scp', conf.scp),
        rounding=merged('rounding', conf.rounding),
        cache=overrides.get('cache'),
        num_workers=overrides.get('num_workers') or 1)


def main(plan):
    logging.info('Sweeping the selection modes with plan:'
                 f'\n{pprint.pformat(plan)}')
    scenario = parse_scenario(plan.scenario)
    table = run_sweep(plan, scenario)
    report_selections(table, scenario.geometry.M, scenario.geometry.N)
    failed = sum(1 for row in table if not row['selection_bits'])
    if failed:
        logging.warning(f'{failed}/{len(table)} rows failed.')
    if plan.output is not None:
        emit_results(table, plan.output)
    return table


def cli(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument('--conf', type=str, default='mimo_5x5',
                        choices=list(confs.keys()))
    parser.add_argument('--scenario', type=Path)
    parser.add_argument('--mode', type=str, default='all',
                        choices=list(MODES) + ['all'])
    parser.add_argument('--k', type=int)
    parser.add_argument('--kt', type=int)
    parser.add_argument('--kr', type=int)
    parser.add_argument('--km', type=int)
    parser.add_argument('--theta', type=str,
                        help='START:STOP:STEP in degrees, inclusive')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--samples', type=int)
    parser.add_argument('--scp-iters', type=int)
    parser.add_argument('--psi', type=float)
    parser.add_argument('--power-adjust', action='store_true')
    parser.add_argument('--power-adjust-clutter', action='store_true')
    parser.add_argument('--oracle', action='store_true')
    parser.add_argument('--cache', type=Path)
    parser.add_argument('--num_workers', type=int, default=1)
    parser.add_argument('--out', type=Path, required=True)
    args = parser.parse_args(argv)

    counts = {k: getattr(args, k) for k in ['k', 'kt', 'kr', 'km']
              if getattr(args, k) is not None}
    try:
        plan = make_plan(
            confs[args.conf], scenario=args.scenario, theta=args.theta,
            mode=args.mode, counts=counts, oracle=args.oracle,
            power_adjust=args.power_adjust or args.power_adjust_clutter,
            power_adjust_clutter=args.power_adjust_clutter, seed=args.seed,
            out=args.out, cache=args.cache, num_workers=args.num_workers,
            scp={'max_outer_iterations': args.scp_iters, 'psi': args.psi},
            rounding={'n_samples': args.samples, 'seed': args.seed})
        scenario = parse_scenario(plan.scenario)
        plan.make_modes(scenario.geometry.M, scenario.geometry.N)
    except ScenarioError as e:
        logging.error(f'Scenario error: {e}')
        return EXIT_SCENARIO
    except OSError as e:
        logging.error(f'I/O error: {e}')
        return EXIT_IO
    except ValueError as e:
        parser.error(str(e))

    try:
        main(plan)
    except oracle.BudgetExceeded as e:
        logging.error(f'Oracle budget exceeded: {e}')
        return EXIT_BUDGET
    except (InfeasibleProgram, SolverNotConverged,
            np.linalg.LinAlgError) as e:
        logging.error(f'Solver error: {e}')
        return EXIT_SOLVER
    except OSError as e:
        logging.error(f'I/O error: {e}')
        return EXIT_IO
    return 0


if __name__ == '__main__':
    sys.exit(cli())
