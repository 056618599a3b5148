"""Experiment plumbing: one solver dispatch, seeded benchmark sweeps, episode batches and the verification suites.

Every random instance is generated from a seed derived from (sweep seed, case, trial), and the derived seed is
written into each CSV row so a single row can be replayed on its own.
"""
import itertools
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats
from tqdm import tqdm

from sata.constants import Columns, Tolerances
from sata.core import (Assignment, CommGraph, FractionalSolution, Instance, derive_comm_graph, eval_bottleneck, eval_wta,
                       eval_wta_from_x, is_vacuous)
from sata.greedy import greedy_bottleneck, greedy_distributed, greedy_wta
from sata.instance_generator import GenConfig, generate, measure_phi, phi_identities
from sata.local_solver import LocalParams, instance_degrees, round_solution, solve_local
from sata.lp_kernel import centralized_lp, check_lemma1_equivalence, theorem1_ratio
from sata.netsim import Network, RoundLog, components, gather_scatter
from sata.oracle import brute_force_bottleneck, brute_force_wta, random_baseline
from sata.serialization import write_csv_atomically
from sata.seeding import derive_seed, make_rng
from sata.tracking_sim import POLICIES, SimConfig, load_sim_config, run_episode

logger = logging.getLogger(__name__)

SOLVERS = ('greedy', 'greedy-bottleneck', 'random', 'oracle-wta', 'oracle-bottleneck', 'lp-round', 'lp-upper', 'local')
OBJECTIVES = ('wta', 'bottleneck')
_DEFAULT_OBJECTIVE = {'greedy': 'wta', 'random': 'wta', 'oracle-wta': 'wta'}
_FIXED_OBJECTIVE = {'oracle-wta': 'wta', 'oracle-bottleneck': 'bottleneck', 'lp-upper': 'bottleneck'}


@dataclass
class SolverResult:
    solver: str
    objective: str
    value: float
    assignment: Optional[Assignment] = None
    fractional: Optional[FractionalSolution] = None
    rounds: int = 0
    h: Optional[int] = None
    epsilon: Optional[float] = None
    enumerated: Optional[int] = None
    trace: Optional[Dict] = None
    round_logs: List[RoundLog] = field(default_factory=list)

    @property
    def fractional_value(self) -> float:
        return self.fractional.w if self.fractional is not None else math.nan

    def to_dict(self) -> Dict:
        record = {'solver': self.solver, 'objective': self.objective, 'value': self.value, 'vacuous': is_vacuous(self.value),
                  'rounds': self.rounds, 'fractional_value': self.fractional_value}
        if self.h is not None:
            record.update(h=self.h, epsilon=self.epsilon)
        if self.enumerated is not None:
            record['enumerated'] = self.enumerated
        if self.assignment is not None:
            record['chosen_primitive'] = {str(i): m for i, m in sorted(self.assignment.chosen_primitive.items())}
            if self.assignment.target_owner is not None:
                record['target_owner'] = {str(j): i for j, i in sorted(self.assignment.target_owner.items())}
        return record


def _objective_value(inst: Instance, assignment: Assignment, objective: str) -> float:
    if objective == 'wta':
        return eval_wta_from_x(inst, assignment.chosen_primitive)[0]
    return eval_bottleneck(inst, assignment)


def solve_instance(inst: Instance, solver: str, objective: Optional[str] = None, h: int = 2, epsilon: float = 0.1, seed: int = 0,
                   order: Optional[Sequence[int]] = None, tie_break: str = 'lowest', n_jobs: int = 1) -> SolverResult:
    """Runs one named solver and evaluates its assignment under the requested objective.

    The default objective is WinnerTakesAll for greedy, random and the WinnerTakesAll oracle and Bottleneck for the
    rest; the two oracles and the LP upper bound always report their own objective.
    """
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}.")
    objective = _FIXED_OBJECTIVE.get(solver) or objective or _DEFAULT_OBJECTIVE.get(solver, 'bottleneck')
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}.")

    if solver == 'greedy':
        if order is not None:
            assignment, trace = greedy_wta(inst, order)
            return SolverResult(solver, objective, _objective_value(inst, assignment, objective), assignment,
                                rounds=trace.rounds_used, trace=trace.to_dict())
        network = Network(derive_comm_graph(inst))
        assignment, rounds = greedy_distributed(inst, network)
        _, trace = greedy_wta(inst)
        return SolverResult(solver, objective, _objective_value(inst, assignment, objective), assignment, rounds=rounds,
                            trace=trace.to_dict(), round_logs=network.logs)
    if solver == 'greedy-bottleneck':
        assignment = greedy_bottleneck(inst, order, tie_break)
        return SolverResult(solver, objective, _objective_value(inst, assignment, objective), assignment)
    if solver == 'random':
        assignment = random_baseline(inst, make_rng(seed, 'solve', 'random'))
        return SolverResult(solver, objective, _objective_value(inst, assignment, objective), assignment)
    if solver == 'oracle-wta':
        result = brute_force_wta(inst, n_jobs=n_jobs)
        return SolverResult(solver, objective, result.optimum, result.best_assignment, enumerated=result.enumerated)
    if solver == 'oracle-bottleneck':
        result = brute_force_bottleneck(inst, n_jobs=n_jobs)
        return SolverResult(solver, objective, result.optimum, result.best_assignment, enumerated=result.enumerated)
    if solver == 'lp-upper':
        fractional = centralized_lp(inst)
        return SolverResult(solver, objective, fractional.w, fractional=fractional)
    if solver == 'lp-round':
        fractional = centralized_lp(inst)
        assignment = round_solution(inst, fractional)
        return SolverResult(solver, objective, _objective_value(inst, assignment, objective), assignment, fractional)

    params = LocalParams(h, epsilon)
    network = Network(derive_comm_graph(inst))
    fractional, rounds = solve_local(inst, params, network, n_jobs)
    assignment = round_solution(inst, fractional)
    return SolverResult(solver, objective, _objective_value(inst, assignment, objective), assignment, fractional, rounds, h, epsilon,
                        round_logs=network.logs)


@dataclass(frozen=True)
class SweepSpec:
    robot_counts: Tuple[int, ...]
    target_counts: Tuple[int, ...]
    phis: Tuple[float, ...]
    solvers: Tuple[str, ...]
    weight_modes: Tuple[str, ...] = ('binary',)
    trials: int = 100
    seed: int = 0
    objective: str = 'wta'
    hs: Tuple[int, ...] = (2,)
    epsilon: float = 0.1
    primitives_per_robot: int = 2
    strict_phi: bool = False

    def __post_init__(self):
        for name in ('robot_counts', 'target_counts', 'phis', 'solvers', 'weight_modes', 'hs'):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty.")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}.")
        unknown = [solver for solver in self.solvers if solver not in SOLVERS]
        if unknown:
            raise ValueError(f"Unknown solvers {unknown}; choose from {SOLVERS}.")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}.")

    def cases(self) -> List[Tuple[int, int, float, str]]:
        return list(itertools.product(self.robot_counts, self.target_counts, self.phis, self.weight_modes))


def _case_rows(spec: SweepSpec, case: Tuple[int, int, float, str]) -> List[list]:
    robots, targets, phi, weights = case
    rows = []
    for trial in range(spec.trials):
        instance_seed = derive_seed(spec.seed, 'sweep', robots, targets, phi, weights, trial)
        inst = generate(GenConfig(robots, targets, phi, spec.primitives_per_robot, weights, instance_seed, spec.strict_phi))
        measured = measure_phi(inst)
        for solver in spec.solvers:
            for h in (spec.hs if solver == 'local' else (None,)):
                result = solve_instance(inst, solver, spec.objective, h if h is not None else 2, spec.epsilon, instance_seed)
                rows.append([robots, targets, phi, weights, trial, instance_seed, measured, solver,
                             h if h is not None else math.nan, spec.epsilon if h is not None else math.nan,
                             result.objective, result.value, result.fractional_value, result.rounds])
    return rows


def _case_filename(case: Tuple[int, int, float, str]) -> str:
    robots, targets, phi, weights = case
    return f"case_R{robots}_T{targets}_phi{phi:g}_{weights}.csv"


def summarize_sweep(frame: pd.DataFrame) -> pd.DataFrame:
    """Min, mean and max per (case, solver, h), the statistics plotted for every benchmark case."""
    grouped = frame.groupby(Columns.SWEEP_CASE + ['solver', 'h'], dropna=False, sort=True)
    summary = grouped.agg(trials=('value', 'size'),
                          value_min=('value', 'min'),
                          value_mean=('value', 'mean'),
                          value_max=('value', 'max'),
                          fractional_mean=('fractional_value', 'mean'),
                          rounds_mean=('rounds', 'mean'))
    return summary.reset_index()


def run_sweep(spec: SweepSpec, out_directory: Optional[str] = None, n_jobs: int = 1, progress: bool = True) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Runs every (case, trial, solver); writes per-case CSVs plus sweep.csv and sweep_summary.csv when out_directory is given."""
    cases = spec.cases()
    iterator = tqdm(cases, desc="Sweep cases", disable=not progress)
    if n_jobs == 1:
        per_case = [_case_rows(spec, case) for case in iterator]
    else:
        per_case = Parallel(n_jobs=n_jobs)(delayed(_case_rows)(spec, case) for case in iterator)

    frames = [pd.DataFrame(rows, columns=Columns.SWEEP) for rows in per_case]
    frame = pd.concat(frames, ignore_index=True)
    summary = summarize_sweep(frame)
    if out_directory is not None:
        for case, case_frame in zip(cases, frames):
            write_csv_atomically(case_frame, os.path.join(out_directory, 'cases', _case_filename(case)))
        write_csv_atomically(frame, os.path.join(out_directory, 'sweep.csv'))
        write_csv_atomically(summary, os.path.join(out_directory, 'sweep_summary.csv'))
    logger.info("Sweep finished: %d cases, %d rows.", len(cases), len(frame))
    return frame, summary


def replay_sweep_row(row: pd.Series, primitives_per_robot: int = 2, strict_phi: bool = False) -> SolverResult:
    """Regenerates the instance of one sweep row from its recorded seed and reruns its solver."""
    inst = generate(GenConfig(int(row['robots']), int(row['targets']), float(row['phi']), primitives_per_robot, row['weights'],
                              int(row['instance_seed']), strict_phi))
    h = 2 if pd.isna(row['h']) else int(row['h'])
    epsilon = 0.1 if pd.isna(row['epsilon']) else float(row['epsilon'])
    return solve_instance(inst, row['solver'], row['objective'], h, epsilon, int(row['instance_seed']))


def run_episode_batch(config: SimConfig, policies: Sequence[str], seeds: Sequence[int], target_counts: Optional[Sequence[int]] = None,
                      h: int = 2, epsilon: float = 0.1, n_jobs: int = 1, progress: bool = True) -> pd.DataFrame:
    """Runs every (target count, seed, policy) episode; policies sharing a seed share the initial world."""
    unknown = [policy for policy in policies if policy not in POLICIES]
    if unknown:
        raise ValueError(f"Unknown policies {unknown}; choose from {POLICIES}.")
    target_counts = tuple(target_counts) if target_counts else (config.target_count,)
    jobs = [(config.with_overrides(target_count=count), policy, seed)
            for count in target_counts for seed in seeds for policy in policies]
    iterator = tqdm(jobs, desc="Episodes", disable=not progress)
    if n_jobs == 1:
        frames = [run_episode(job_config, policy, h, epsilon, seed) for job_config, policy, seed in iterator]
    else:
        frames = Parallel(n_jobs=n_jobs)(delayed(run_episode)(job_config, policy, h, epsilon, seed) for job_config, policy, seed in iterator)
    if not frames:
        return pd.DataFrame(columns=Columns.EPISODE + Columns.EPISODE_EXTRA)
    return pd.concat(frames, ignore_index=True)


def aggregate_episodes(frame: pd.DataFrame, reference: str = 'parker') -> pd.DataFrame:
    """Per (target count, policy): mean and std over seeds of the time-averaged actual objective, paired against reference."""
    columns = ['target_count', 'policy', 'seeds', 'mean_time_avg_actual', 'std_time_avg_actual', f'seeds_ge_{reference}',
               'mean_difference', 'effect_size', 't_statistic', 'p_value']
    if frame.empty:
        return pd.DataFrame(columns=columns)
    per_seed = frame.groupby(['target_count', 'policy', 'seed'])['actual'].mean().unstack('policy')
    rows = []
    for target_count, table in per_seed.groupby(level='target_count'):
        for policy in table.columns:
            values = table[policy].dropna()
            row = [target_count, policy, len(values), values.mean(), values.std(ddof=1) if len(values) > 1 else math.nan]
            if reference in table.columns and policy != reference:
                paired = table[[policy, reference]].dropna()
                difference = paired[policy] - paired[reference]
                spread = difference.std(ddof=1) if len(difference) > 1 else math.nan
                if len(paired) > 1 and spread > 0:
                    t_statistic, p_value = stats.ttest_rel(paired[policy], paired[reference])
                else:
                    t_statistic, p_value = math.nan, math.nan
                row += [int((difference >= 0).sum()), difference.mean(), difference.mean() / spread if spread and spread > 0 else math.nan,
                        float(t_statistic), float(p_value)]
            else:
                row += [math.nan] * 5
            rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def two_robot_counterexample() -> Instance:
    """Two robots, two targets: robot 1's first primitive sees target 1, robot 2's second sees target 2, nothing else sees anything.

    Greedy on the Bottleneck objective can leave a target uncovered here while the optimum covers both.
    """
    return Instance(2, (2, 2), 2, {(1, 1, 1): 1.0, (2, 2, 2): 1.0})


@dataclass
class SuiteReport:
    name: str
    passed: bool
    checked: int
    failures: List[str] = field(default_factory=list)
    statistics: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)


def _suite_instances(seed: int, suite: str, trials: int, robot_counts: Sequence[int], target_counts: Sequence[int],
                     phi: float) -> List[Tuple[int, Instance]]:
    instances = []
    shapes = list(itertools.product(robot_counts, target_counts))
    for trial in range(trials):
        robots, targets = shapes[trial % len(shapes)]
        instance_seed = derive_seed(seed, suite, trial)
        instances.append((instance_seed, generate(GenConfig(robots, targets, phi, 2, 'binary', instance_seed, strict_phi=False))))
    return instances


def verify_counterexample(seed: int = 0, trials: Optional[int] = None) -> SuiteReport:
    inst = two_robot_counterexample()
    greedy_assignment, _ = greedy_wta(inst)
    checks = {
        'greedy_wta': (eval_wta(inst, greedy_assignment), 2.0),
        'oracle_wta': (brute_force_wta(inst).optimum, 2.0),
        'greedy_bottleneck_adversarial': (eval_bottleneck(inst, greedy_bottleneck(inst, tie_break='adversarial')), 0.0),
        'oracle_bottleneck': (brute_force_bottleneck(inst).optimum, 1.0),
    }
    failures = [f"{name}: got {got}, expected {expected}" for name, (got, expected) in checks.items() if got != expected]
    return SuiteReport('counterexample', not failures, len(checks), failures, {name: got for name, (got, _) in checks.items()})


def verify_greedy_bound(seed: int = 0, trials: Optional[int] = None) -> SuiteReport:
    """Greedy reaches half the WinnerTakesAll optimum on every instance of the small grid."""
    trials = trials or 200
    failures, ratios, checked = [], [], 0
    for robots, targets, phi in itertools.product((2, 3, 4), (4, 6), (15, 25)):
        for trial in range(trials):
            instance_seed = derive_seed(seed, 'greedy-bound', robots, targets, phi, trial)
            inst = generate(GenConfig(robots, targets, phi, 2, 'binary', instance_seed, strict_phi=False))
            greedy_value = eval_wta(inst, greedy_wta(inst)[0])
            optimum = brute_force_wta(inst).optimum
            checked += 1
            if greedy_value < 0.5 * optimum:
                failures.append(f"R={robots} T={targets} phi={phi} seed={instance_seed}: greedy {greedy_value} < optimum {optimum} / 2")
            if optimum > 0:
                ratios.append(greedy_value / optimum)
    return SuiteReport('greedy-bound', not failures, checked, failures, {'mean_ratio': float(np.mean(ratios)), 'min_ratio': float(np.min(ratios))})


def verify_integer_equivalence(seed: int = 0, trials: Optional[int] = None) -> SuiteReport:
    failures = []
    instances = _suite_instances(seed, 'integer-equivalence', trials or 100, (2, 3, 4), (4, 6), 25)
    for instance_seed, inst in instances:
        report = check_lemma1_equivalence(inst)
        if not report.passed:
            failures.append(f"seed={instance_seed}: integer program {report.integer_lp_value} != optimum {report.bottleneck_optimum}")
    return SuiteReport('integer-equivalence', not failures, len(instances), failures)


def _bottleneck_suite(seed: int, trials: Optional[int]) -> List[Tuple[int, Instance]]:
    return _suite_instances(seed, 'bottleneck-suite', trials or 100, (3, 4, 5), (6, 8), 25)


def verify_ordering(seed: int = 0, trials: Optional[int] = None, hs: Sequence[int] = (1, 2, 5, 8), epsilon: float = 0.1) -> SuiteReport:
    """Per instance: local rounded <= integer optimum <= LP bound, and LP rounding <= integer optimum."""
    failures, checked = [], 0
    ratios = {h: [] for h in hs}
    bounds = {h: [] for h in hs}
    rounded_values = {h: [] for h in hs}
    slack = Tolerances.ORDERING
    for instance_seed, inst in _bottleneck_suite(seed, trials):
        optimum = brute_force_bottleneck(inst).optimum
        central = centralized_lp(inst)
        upper = central.w
        rounded = eval_bottleneck(inst, round_solution(inst, central))
        delta_r, delta_t = instance_degrees(inst)
        checked += 1
        if not optimum <= upper + slack:
            failures.append(f"seed={instance_seed}: optimum {optimum} above LP bound {upper}")
        if not rounded <= optimum + slack:
            failures.append(f"seed={instance_seed}: LP rounding {rounded} above optimum {optimum}")
        for h in hs:
            fractional, _ = solve_local(inst, LocalParams(h, epsilon), Network(derive_comm_graph(inst)))
            local = eval_bottleneck(inst, round_solution(inst, fractional))
            rounded_values[h].append(local)
            if not local <= optimum + slack:
                failures.append(f"seed={instance_seed} h={h}: local {local} above optimum {optimum}")
            if local > 0:
                ratios[h].append(upper / local)
            bounds[h].append(theorem1_ratio(delta_r, delta_t, h, epsilon))
    statistics = {}
    for h in hs:
        statistics[f'mean_ratio_h{h}'] = float(np.mean(ratios[h])) if ratios[h] else math.nan
        statistics[f'mean_bound_h{h}'] = float(np.mean(bounds[h])) if bounds[h] else math.nan
        # mean_ratio only covers instances that round above zero.
        statistics[f'rounded_zero_h{h}'] = int(sum(value <= 0 for value in rounded_values[h]))
        statistics[f'mean_rounded_h{h}'] = float(np.mean(rounded_values[h])) if rounded_values[h] else math.nan
    return SuiteReport('ordering', not failures, checked, failures, statistics)


def verify_h_convergence(seed: int = 0, trials: Optional[int] = None, epsilon: float = 0.1) -> SuiteReport:
    """Views covering the whole graph reproduce the centralized LP; h = 5 and h = 8 round to nearly the same objective."""
    failures, by_h = [], {5: [], 8: []}
    instances = _bottleneck_suite(seed, trials)
    for instance_seed, inst in instances:
        graph = derive_comm_graph(inst)
        diameter = max(graph.diameter(), 1)
        fractional, _ = solve_local(inst, LocalParams(diameter, epsilon), Network(graph))
        central = centralized_lp(inst).w
        if abs(fractional.w - central) > Tolerances.H_CONVERGENCE:
            failures.append(f"seed={instance_seed}: local w {fractional.w} differs from centralized {central} at h={diameter}")
        for h in by_h:
            local, _ = solve_local(inst, LocalParams(h, epsilon), Network(graph))
            by_h[h].append(eval_bottleneck(inst, round_solution(inst, local)))
    mean5, mean8 = float(np.mean(by_h[5])), float(np.mean(by_h[8]))
    relative = abs(mean5 - mean8) / mean8 if mean8 > 0 else abs(mean5 - mean8)
    if relative >= 0.02:
        failures.append(f"mean rounded objective differs by {relative:.2%} between h=5 and h=8")
    return SuiteReport('h-convergence', not failures, len(instances), failures, {'mean_h5': mean5, 'mean_h8': mean8, 'relative_gap': relative})


def verify_rounds(seed: int = 0, trials: Optional[int] = None, h: int = 3) -> SuiteReport:
    """Round counters on random communication graphs: greedy, local and gather-scatter."""
    failures, checked = [], 0
    for trial in range(trials or 50):
        rng = make_rng(seed, 'rounds', trial)
        robots = int(rng.integers(2, 9))
        inst = generate(GenConfig(robots, 8, 40, 2, 'binary', derive_seed(seed, 'rounds-instance', trial), strict_phi=False))
        random_graph = nx.gnp_random_graph(robots, float(rng.uniform(0.1, 0.6)), seed=derive_seed(seed, 'rounds-graph', trial))
        graph = CommGraph(robots, frozenset((a + 1, b + 1) for a, b in random_graph.edges))
        largest = max(len(part) for part in components(graph))
        _, greedy_rounds = greedy_distributed(inst, Network(graph))
        _, local_rounds = solve_local(inst, LocalParams(h), Network(graph))
        _, log = gather_scatter(CommGraph.complete(robots), {i: bytes([i]) for i in range(1, robots + 1)}, lambda gathered: b''.join(gathered.values()))
        checked += 1
        if greedy_rounds != largest:
            failures.append(f"trial {trial}: greedy used {greedy_rounds} rounds, largest component has {largest} robots")
        if local_rounds != h:
            failures.append(f"trial {trial}: local used {local_rounds} rounds for h={h}")
        if log.rounds != 2:
            failures.append(f"trial {trial}: gather-scatter used {log.rounds} rounds")
    return SuiteReport('rounds', not failures, checked, failures)


def verify_generator(seed: int = 0, trials: Optional[int] = None) -> SuiteReport:
    """Measured density lands within one edge quantum of the request, and both density formulas agree exactly."""
    failures, checked = [], 0
    for phi in (10, 15, 25, 40):
        for trial in range(trials or 50):
            config = GenConfig(10, 50, phi, 2, 'binary', derive_seed(seed, 'generator', phi, trial))
            inst = generate(config)
            measured = measure_phi(inst)
            from_degree, from_edges = phi_identities(inst)
            checked += 1
            if not 0 <= measured - phi < config.edge_quantum + Tolerances.ORDERING:
                failures.append(f"phi={phi} trial={trial}: measured {measured}")
            if from_degree != from_edges:
                failures.append(f"phi={phi} trial={trial}: density identities disagree ({from_degree} vs {from_edges})")
            if len(components(derive_comm_graph(inst))) != 1:
                failures.append(f"phi={phi} trial={trial}: communication graph is disconnected")
    return SuiteReport('generator', not failures, checked, failures)


def verify_episode_comparison(seed: int = 0, trials: Optional[int] = None, config: Optional[SimConfig] = None,
                              target_counts: Sequence[int] = (10, 20, 30)) -> SuiteReport:
    """Greedy against the force-vector baseline over whole episodes.

    Greedy's time-averaged actual objective must match or beat the baseline's in at least four of every five
    seeds for each target count, and its mean must not fall below the random policy's.
    """
    config = config or load_sim_config('parker-cmp')
    seeds = list(range(seed, seed + (trials or 10)))
    needed = math.ceil(len(seeds) * 4 / 5)
    frame = run_episode_batch(config, ['greedy', 'parker', 'random'], seeds, target_counts, progress=False)
    aggregate = aggregate_episodes(frame).set_index(['target_count', 'policy'])
    failures, statistics = [], {}
    for count in target_counts:
        wins = int(aggregate.loc[(count, 'greedy'), 'seeds_ge_parker'])
        means = {policy: float(aggregate.loc[(count, policy), 'mean_time_avg_actual']) for policy in ('greedy', 'parker', 'random')}
        statistics[f'seeds_ge_parker_T{count}'] = wins
        statistics.update({f'mean_{policy}_T{count}': value for policy, value in means.items()})
        if wins < needed:
            failures.append(f"T={count}: greedy matched the force-vector baseline in {wins} of {len(seeds)} seeds, needed {needed}")
        if means['greedy'] < means['random']:
            failures.append(f"T={count}: greedy mean {means['greedy']:.3f} below random {means['random']:.3f}")
    return SuiteReport('episode-comparison', not failures, len(seeds) * len(target_counts), failures, statistics)


SUITES = {
    'counterexample': verify_counterexample,
    'greedy-bound': verify_greedy_bound,
    'integer-equivalence': verify_integer_equivalence,
    'ordering': verify_ordering,
    'h-convergence': verify_h_convergence,
    'rounds': verify_rounds,
    'generator': verify_generator,
    'episode-comparison': verify_episode_comparison,
}


def run_verification(names: Sequence[str] = tuple(SUITES), seed: int = 0, trials: Optional[int] = None, progress: bool = True) -> List[SuiteReport]:
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"Unknown suites {unknown}; choose from {sorted(SUITES)}.")
    reports = []
    for name in tqdm(names, desc="Verification suites", disable=not progress):
        started = time.perf_counter()
        report = SUITES[name](seed, trials)
        report.statistics['seconds'] = time.perf_counter() - started
        logger.info("Suite %s: %s (%d checked).", name, "passed" if report.passed else "FAILED", report.checked)
        reports.append(report)
    return reports
