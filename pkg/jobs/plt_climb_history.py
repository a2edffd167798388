"""Plots the robot heights of a finished climb run from its output directory.
    Useful to redraw the recovery figures without rerunning the simulation.
"""
import argparse
import logging

from tethered_climb.data.artifacts import read_csv, read_json
from tethered_climb.viz import plot_climb_positions

def main(args):
    logging.basicConfig(level=logging.INFO)

    RUN_DIR = args['RUN_DIR']
    SAVE_DIR = args['SAVE_DIR'] or RUN_DIR

    logging.info(f'Reading climb positions from {RUN_DIR}...')
    positions = read_csv(f'{RUN_DIR}/climb_positions.csv')
    logging.info(f'\tcount: {len(positions)}')

    summary = read_json(f'{RUN_DIR}/climb_summary.json')
    logging.info(f'\tstatus: {summary["status"]}, cycles: {summary["cycles_completed"]}')

    logging.info('Plotting...')
    plot_climb_positions(positions, SAVE_DIR)

if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--RUN_DIR', type=str, help='output directory of a climb run')
    parser.add_argument('--SAVE_DIR', type=str, default=None, help='where to write the figure')
    args = vars(parser.parse_args())

    main(args)
