"""Command-line entry point: ``sata {gen,solve,sweep,episode,oracle,verify}``.

Exit codes: 0 success, 1 I/O failure, 2 parse or usage failure, 3 solver error, 4 verification failure.
"""
import argparse
import json
import logging
import os
import sys
import time
from typing import List, Optional

import pandas as pd

from sata.constants import Columns, ExitCodes
from sata.core import SATAError, validate_instance
from sata.experiments import (OBJECTIVES, SOLVERS, SUITES, SweepSpec, aggregate_episodes, run_episode_batch, run_sweep, run_verification,
                              solve_instance)
from sata.instance_generator import WEIGHT_MODES, GenConfig, generate, measure_phi
from sata.local_solver import fractional_frame
from sata.lp_kernel import centralized_lp, check_lemma1_equivalence
from sata.oracle import brute_force_bottleneck, brute_force_wta
from sata.serialization import (InstanceFormatError, dump_instance, instance_to_dict, load_instance, to_json, write_csv_atomically,
                                write_json_atomically)
from sata.tracking_sim import POLICIES, histogram_table, load_sim_config, summarize_episode

logger = logging.getLogger(__name__)


def _load_valid_instance(path: str):
    inst = load_instance(path)
    report = validate_instance(inst)
    if not report.ok:
        raise InstanceFormatError(f"{path} is not a valid instance:\n  " + "\n  ".join(report.violations))
    return inst


def _write_round_logs(round_logs, path: str):
    frames = [log.to_frame().assign(run=k) for k, log in enumerate(round_logs, start=1)]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=Columns.ROUND_LOG + ['run'])
    write_csv_atomically(frame[['run'] + Columns.ROUND_LOG], path)


def cmd_gen(args) -> int:
    config = GenConfig(args.robots, args.targets, args.phi, args.primitives, args.weights, args.seed, strict_phi=not args.lenient_phi)
    inst = generate(config)
    if args.out:
        dump_instance(inst, args.out)
        logger.info("Wrote %s (phi %.3f%%).", args.out, measure_phi(inst))
    else:
        print(to_json(instance_to_dict(inst)))
    return ExitCodes.OK


def cmd_solve(args) -> int:
    inst = _load_valid_instance(args.instance)
    order = [int(robot) for robot in args.order.split(',')] if args.order else None
    started = time.perf_counter()
    result = solve_instance(inst, args.solver, args.objective, args.h, args.epsilon, args.seed, order, args.tie_break, args.jobs)
    record = result.to_dict()
    record['wall_time'] = time.perf_counter() - started
    print(to_json(record))

    if args.emit_trace and result.trace is not None:
        write_json_atomically(result.trace, args.emit_trace)
    if args.emit_rounds:
        _write_round_logs(result.round_logs, args.emit_rounds)
    if args.fractional_csv:
        if result.fractional is None:
            logger.warning("Solver %s has no fractional solution; %s not written.", args.solver, args.fractional_csv)
        else:
            write_csv_atomically(fractional_frame(inst, result.fractional, result.assignment), args.fractional_csv)
    return ExitCodes.OK


def cmd_sweep(args) -> int:
    spec = SweepSpec(robot_counts=args.robots, target_counts=args.targets, phis=args.phis, solvers=args.solvers,
                     weight_modes=args.weights, trials=args.trials, seed=args.seed, objective=args.objective, hs=args.h,
                     epsilon=args.epsilon, primitives_per_robot=args.primitives, strict_phi=args.strict_phi)
    _, summary = run_sweep(spec, args.out, args.jobs, progress=not args.quiet)
    print(summary.to_string(index=False))
    return ExitCodes.OK


def cmd_episode(args) -> int:
    config = load_sim_config(args.config, steps=args.steps)
    seeds = args.seeds if args.seeds else list(range(args.seed, args.seed + args.seed_count))
    frame = run_episode_batch(config, args.policies, seeds, args.target_counts, args.h, args.epsilon, args.jobs, progress=not args.quiet)
    write_csv_atomically(frame, os.path.join(args.out, 'episodes.csv'))
    if frame.empty:
        return ExitCodes.OK

    write_csv_atomically(summarize_episode(frame), os.path.join(args.out, 'episode_summary.csv'))
    aggregate = aggregate_episodes(frame)
    write_csv_atomically(aggregate, os.path.join(args.out, 'episode_aggregate.csv'))
    histograms = []
    for (target_count, policy), group in frame.groupby(['target_count', 'policy']):
        for metric in ('actual', 'estimated'):
            table, summary = histogram_table(group[metric], args.bins)
            histograms.append(table.assign(target_count=target_count, policy=policy, metric=metric, **summary))
    write_csv_atomically(pd.concat(histograms, ignore_index=True), os.path.join(args.out, 'histograms.csv'))
    print(aggregate.to_string(index=False))
    return ExitCodes.OK


def cmd_oracle(args) -> int:
    inst = _load_valid_instance(args.instance)
    wta = brute_force_wta(inst, n_jobs=args.jobs)
    bottleneck = brute_force_bottleneck(inst, n_jobs=args.jobs)
    equivalence = check_lemma1_equivalence(inst)
    record = {
        'wta': {'optimum': wta.optimum, 'enumerated': wta.enumerated, 'chosen_primitive': wta.best_assignment.chosen_primitive,
                'target_owner': wta.best_assignment.target_owner},
        'bottleneck': {'optimum': bottleneck.optimum, 'enumerated': bottleneck.enumerated,
                       'chosen_primitive': bottleneck.best_assignment.chosen_primitive},
        'lp_upper_bound': centralized_lp(inst).w,
        'integer_equivalence': {'integer_lp_value': equivalence.integer_lp_value, 'bottleneck_optimum': equivalence.bottleneck_optimum,
                                'passed': equivalence.passed, 'tolerance': equivalence.tolerance},
    }
    print(to_json(record))
    return ExitCodes.OK


def cmd_verify(args) -> int:
    reports = run_verification(args.suites, args.seed, args.trials, progress=not args.quiet)
    payload = {'passed': all(report.passed for report in reports), 'suites': [report.to_dict() for report in reports]}
    print(to_json(payload))
    if args.out:
        write_json_atomically(payload, args.out)
    return ExitCodes.OK if payload['passed'] else ExitCodes.VERIFICATION_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0, help="Root seed for every random stream.")
    common.add_argument('--emit-trace', metavar='PATH', help="Write the greedy trace as JSON.")
    common.add_argument('--emit-rounds', metavar='PATH', help="Write every message of the simulated rounds as CSV.")
    common.add_argument('--jobs', type=int, default=1, help="joblib workers.")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true')
    verbosity.add_argument('--quiet', action='store_true', help="Hide progress bars and informational logs.")

    parser = argparse.ArgumentParser(prog='sata', description="Simultaneous action and target assignment toolkit.")
    subparsers = parser.add_subparsers(dest='command', required=True)

    gen = subparsers.add_parser('gen', parents=[common], help="Generate a random instance.")
    gen.add_argument('--robots', type=int, required=True)
    gen.add_argument('--primitives', type=int, default=2)
    gen.add_argument('--targets', type=int, required=True)
    gen.add_argument('--phi', type=float, required=True, help="Coverage density in percent.")
    gen.add_argument('--weights', choices=WEIGHT_MODES, default='binary')
    gen.add_argument('--lenient-phi', action='store_true', help="Raise an unreachable phi to the construction floor instead of failing.")
    gen.add_argument('--out', help="Instance JSON path; stdout when omitted.")
    gen.set_defaults(handler=cmd_gen)

    solve = subparsers.add_parser('solve', parents=[common], help="Solve one instance file.")
    solve.add_argument('instance')
    solve.add_argument('--solver', choices=SOLVERS, default='greedy')
    solve.add_argument('--objective', choices=OBJECTIVES)
    solve.add_argument('--h', type=int, default=2)
    solve.add_argument('--epsilon', type=float, default=0.1)
    solve.add_argument('--order', help="Comma-separated robot order for greedy solvers.")
    solve.add_argument('--tie-break', choices=('lowest', 'adversarial'), default='lowest')
    solve.add_argument('--fractional-csv', metavar='PATH', help="Write x values of LP-based solvers as CSV.")
    solve.set_defaults(handler=cmd_solve)

    sweep = subparsers.add_parser('sweep', parents=[common], help="Benchmark solvers over generated instances.")
    sweep.add_argument('--robots', type=int, nargs='+', required=True)
    sweep.add_argument('--targets', type=int, nargs='+', required=True)
    sweep.add_argument('--phis', type=float, nargs='+', required=True)
    sweep.add_argument('--weights', choices=WEIGHT_MODES, nargs='+', default=['binary'])
    sweep.add_argument('--solvers', choices=SOLVERS, nargs='+', required=True)
    sweep.add_argument('--objective', choices=OBJECTIVES, default='wta')
    sweep.add_argument('--trials', type=int, default=100)
    sweep.add_argument('--h', type=int, nargs='+', default=[2])
    sweep.add_argument('--epsilon', type=float, default=0.1)
    sweep.add_argument('--primitives', type=int, default=2)
    sweep.add_argument('--strict-phi', action='store_true')
    sweep.add_argument('--out', default='sweep-output', help="Output directory.")
    sweep.set_defaults(handler=cmd_sweep)

    episode = subparsers.add_parser('episode', parents=[common], help="Simulate tracking episodes.")
    episode.add_argument('--config', default='parker-cmp', help="Preset name or JSON path.")
    episode.add_argument('--policies', choices=POLICIES, nargs='+', default=['greedy', 'parker'])
    episode.add_argument('--seeds', type=int, nargs='+', help="Explicit seeds; otherwise --seed-count seeds from --seed.")
    episode.add_argument('--seed-count', type=int, default=10)
    episode.add_argument('--target-counts', type=int, nargs='+')
    episode.add_argument('--steps', type=int)
    episode.add_argument('--h', type=int, default=2)
    episode.add_argument('--epsilon', type=float, default=0.1)
    episode.add_argument('--bins', type=int, default=10)
    episode.add_argument('--out', default='episode-output', help="Output directory.")
    episode.set_defaults(handler=cmd_episode)

    oracle = subparsers.add_parser('oracle', parents=[common], help="Exact optima and LP bound of one instance file.")
    oracle.add_argument('instance')
    oracle.set_defaults(handler=cmd_oracle)

    verify = subparsers.add_parser('verify', parents=[common], help="Run the verification suites.")
    verify.add_argument('--suites', choices=sorted(SUITES), nargs='+', default=list(SUITES))
    verify.add_argument('--trials', type=int, help="Override each suite's trial count.")
    verify.add_argument('--out', help="Also write the report JSON here.")
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return ExitCodes.OK if not exit_.code else ExitCodes.PARSE_ERROR

    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        return args.handler(args)
    except (InstanceFormatError, json.JSONDecodeError) as error:
        logger.error("%s", error)
        return ExitCodes.PARSE_ERROR
    except SATAError as error:
        logger.error("Solver error: %s", error)
        return ExitCodes.SOLVER_ERROR
    except OSError as error:
        logger.error("I/O error: %s", error)
        return ExitCodes.IO_ERROR
    except ValueError as error:
        logger.error("%s", error)
        return ExitCodes.PARSE_ERROR


if __name__ == '__main__':
    sys.exit(main())
