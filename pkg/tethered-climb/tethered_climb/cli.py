"""Command-line runner: one subcommand per simulation, each leaving CSV and
JSON artifacts in an output directory.

    tethered-climb climb --config conf/scenario.yml --out outputs/climb

Exit codes: 0 success, 1 runtime error, 2 invalid config, 3 the simulated
system failed.
"""
import argparse
import functools
import logging
import os

import numpy as np
import pandas as pd

from . import rng as streams
from .climber import ClimbStatus, run_climb
from .config import load_config, provenance
from .data.artifacts import trajectory_frame, write_csv, write_json, write_patch
from .dynamics import (G0, RobotState, calibrated, execute_hop, get_body, max_reach,
    single_hop_height)
from .exceptions import ConfigError, PlanningError, ProjectionError
from .perception import locate_candidates, select_hop_target
from .study import failure_curve, fitness_study
from .terrain import extract_asperities, generate_patch
from .viz import plot_climb_positions, plot_failure_curves, plot_fitness, plot_hop_trajectory

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_SYSTEM_FAILURE = 3


def _command(fn):
    """Loads the config and maps failures onto exit codes."""
    @functools.wraps(fn)
    def wrapper(config_path, out_dir=None, seed=None, trials=None, threads=None, plot=False,
            quiet=False):
        try:
            config = load_config(config_path, seed=seed, trials=trials)
        except (ConfigError, OSError) as err:
            logging.error(f'invalid config {config_path}: {err}')
            return EXIT_CONFIG
        out_dir = out_dir or config.output.dir
        try:
            return fn(config, out_dir, threads=threads, plot=plot, quiet=quiet)
        except Exception:
            logging.exception(f'{fn.__name__} failed')
            return EXIT_RUNTIME
    return wrapper


@_command
def cmd_terrain(config, out_dir, **kwargs):
    terrain = config.terrain
    patch = generate_patch(terrain.params(config.seed), terrain.extent, terrain.spacing)
    asperities = extract_asperities(patch)
    logging.info(f'\tasperities: {len(asperities)}')
    write_patch(patch, asperities, out_dir, provenance(config))
    return EXIT_OK


def _perceived_target(config, params, body, start):
    """Displacement to the nearest reachable grip point the stereo pair can
        locate, with a table of every candidate.
    """
    perception = config.perception
    pair = perception.cameras(start)
    gen = streams.stream(config.seed, streams.PERCEPTION_NOISE)
    rows = []
    estimates = []
    for point in perception.candidates:
        try:
            located = locate_candidates(pair, [point], perception.noise_px, gen)[0]
        except ProjectionError as err:
            logging.warning(f'candidate {list(point)} not visible: {err}')
            continue
        estimates.append(located.point)
        rows.append((*point, *located.point.tolist(), located.range, located.low_confidence))
    candidates = pd.DataFrame(rows, columns=['x', 'y', 'z', 'est_x', 'est_y', 'est_z', 'range',
        'low_confidence'])

    reach = perception.max_range or max_reach(params, body)
    chosen = select_hop_target(estimates, start, reach)
    candidates['selected'] = [k == chosen for k in range(len(candidates))]
    if chosen is None:
        raise PlanningError(f'no located grip point up-slope within {reach:.3f} m', max_reach=reach)
    logging.info(f'\tselected candidate {chosen} at {np.round(estimates[chosen], 4).tolist()}')
    return estimates[chosen] - start, candidates


@_command
def cmd_hop(config, out_dir, plot=False, **kwargs):
    body = config.body_obj()
    params = config.robot_params()
    hop = config.hop
    prov = provenance(config)
    start = np.zeros(3)
    state = RobotState.at_rest(start, params.propellant_budget)

    if hop.target == 'perceived':
        displacement, candidates = _perceived_target(config, params, body, start)
        write_csv(candidates, os.path.join(out_dir, 'candidates.csv'), prov)
    else:
        displacement = np.asarray(hop.displacement, dtype=float)

    logging.info(f'Hopping {np.round(displacement, 4).tolist()} m on {body.name}...')
    trajectory, used = execute_hop(state, params, body, displacement, hop.surface,
        record_every=hop.record_every)
    landed = trajectory[-1]
    achieved = landed.position - start
    summary = {
        'body': body.name,
        'surface': hop.surface,
        'target': hop.target,
        'thrust_N': params.thrust_magnitude,
        'target_displacement_m': np.asarray(displacement).tolist(),
        'achieved_displacement_m': achieved.tolist(),
        'distance_m': float(np.linalg.norm(achieved)),
        'landing_error_m': float(np.linalg.norm(achieved - displacement)),
        'flight_time_s': landed.time - trajectory[0].time,
        'propellant_g': used * 1e3,
        'burn_truncated': landed.burn_truncated,
    }
    logging.info(f'\tdistance: {summary["distance_m"]:.4f} m, propellant: {summary["propellant_g"]:.3f} g')
    df = trajectory_frame(trajectory)
    write_csv(df, os.path.join(out_dir, 'trajectory.csv'), prov)
    write_json(summary, os.path.join(out_dir, 'hop_summary.json'), prov)

    sweep = []
    for name in hop.sweep_bodies:
        other = get_body(name)
        sweep.append((name, other.gravity, single_hop_height(params, other, hop.sweep_propellant)))
    write_csv(pd.DataFrame(sweep, columns=['body', 'gravity', 'hop_height']),
        os.path.join(out_dir, 'body_sweep.csv'), prov)

    if plot:
        plot_hop_trajectory(df, out_dir)
    return EXIT_OK


@_command
def cmd_calibrate(config, out_dir, **kwargs):
    datum = config.hop.datum
    body = get_body(datum.body)
    params = calibrated(config.robot.params(), body, datum.distance, datum.hop_time,
        datum.propellant)
    logging.info(f'\tthrust: {params.thrust_magnitude:.4f} N on {body.name}')

    # fly the datum hop once to confirm it
    state = RobotState.at_rest((0.0, 0.0, 0.0), params.propellant_budget)
    trajectory, used = execute_hop(state, params, body, (0.0, 0.0, datum.distance))
    calibration = {
        'datum': {'body': body.name, 'distance_m': datum.distance, 'hop_time_s': datum.hop_time,
            'propellant_g': datum.propellant * 1e3},
        'thrust_N': params.thrust_magnitude,
        'mass_flow_kg_s': params.mass_flow,
        'burn_time_s': datum.propellant * params.specific_impulse * G0 / params.thrust_magnitude,
        'check': {'distance_m': float(trajectory[-1].position[2]), 'propellant_g': used * 1e3},
    }
    write_json(calibration, os.path.join(out_dir, 'calibration.json'), provenance(config))
    return EXIT_OK


@_command
def cmd_climb(config, out_dir, plot=False, **kwargs):
    climb = config.climb
    body = config.body_obj()
    scenario = climb.scenario(config.robot.params(), config.seed)
    terrain = config.terrain
    patch = generate_patch(terrain.params(config.seed), terrain.extent, terrain.spacing)
    tethers = config.tethers.system(climb.robot_count)

    log = run_climb(scenario, patch, config.grip.model(), tethers, body, climb.cycles)

    prov = provenance(config)
    positions = log.positions_frame()
    write_csv(positions, os.path.join(out_dir, 'climb_positions.csv'), prov)
    write_csv(log.center_frame(), os.path.join(out_dir, 'climb_center.csv'), prov)
    write_json({'events': log.event_records()}, os.path.join(out_dir, 'climb_events.json'), prov)
    summary = dict(log.summary(), scenario={
        'robot_count': climb.robot_count,
        'hop_batch': climb.hop_batch,
        'hop_distance_m': climb.hop_distance,
        'approach_angle_deg': climb.approach_angle,
        'spines_per_robot': climb.spines_per_robot,
        'cycles': climb.cycles,
        'body': body.name,
    })
    write_json(summary, os.path.join(out_dir, 'climb_summary.json'), prov)

    if plot:
        plot_climb_positions(positions, out_dir)

    if log.status == ClimbStatus.FAILED:
        logging.error(f'climb FAILED, snapshot: {log.snapshot}')
        return EXIT_SYSTEM_FAILURE
    if log.status == ClimbStatus.PARTIAL:
        logging.warning(f'climb ended PARTIAL after {log.cycles_completed} cycles')
    return EXIT_OK


@_command
def cmd_study(config, out_dir, threads=None, plot=False, quiet=False, **kwargs):
    study = config.study
    body = config.body_obj()
    robot = config.robot.params()
    threads = threads or study.threads
    prov = provenance(config)
    ks = range(study.min_spines, study.max_spines + 1)

    logging.info(f'Sweeping failure probability with {study.trials} trials...')
    curves = pd.concat([
        failure_curve(size, int(n_failed), ks, study.trials, config.seed, robot.mass,
            body.gravity, tuple(config.grip.band), threads, progress=not quiet)
        for n_failed, sizes in sorted(study.failure_sizes.items())
        for size in sizes
    ], ignore_index=True)
    curves = curves[['n_failed', 'N', 'k', 'probability', 'trials']]
    write_csv(curves, os.path.join(out_dir, 'failure_curves.csv'), prov)

    reports = []
    tables = []
    for n in study.hop_batches:
        report = fitness_study(study.trade_config(n, robot, body, config.climb.hop_distance))
        reports.append(report.to_dict())
        tables.append(report.table.assign(hop_batch=n))
        if plot:
            plot_fitness(report.table, n, out_dir)
    write_csv(pd.concat(tables, ignore_index=True), os.path.join(out_dir, 'trade_metrics.csv'), prov)
    write_json({'reports': reports}, os.path.join(out_dir, 'fitness_report.json'), prov)

    if plot:
        for n_failed in sorted(study.failure_sizes):
            plot_failure_curves(curves, n_failed, out_dir)
    return EXIT_OK


COMMANDS = {
    'terrain': cmd_terrain,
    'hop': cmd_hop,
    'calibrate': cmd_calibrate,
    'climb': cmd_climb,
    'study': cmd_study,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog='tethered-climb',
        description='Tethered multirobot cliff-climbing simulations')
    parser.add_argument('command', choices=sorted(COMMANDS), help='simulation to run')
    parser.add_argument('--config', required=True, help='scenario YAML file')
    parser.add_argument('--out', default=None, help='output directory, defaults to output.dir')
    parser.add_argument('--seed', type=int, default=None, help='overrides the config seed')
    parser.add_argument('--trials', type=int, default=None, help='overrides study.trials')
    parser.add_argument('--threads', type=int, default=None, help='Monte Carlo worker threads')
    parser.add_argument('--plot', action='store_true', help='also write figures')
    parser.add_argument('--quiet', action='store_true', help='warnings and errors only')
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO)

    return COMMANDS[args.command](args.config, args.out, seed=args.seed, trials=args.trials,
        threads=args.threads, plot=args.plot, quiet=args.quiet)


if __name__ == "__main__":
    raise SystemExit(main())
