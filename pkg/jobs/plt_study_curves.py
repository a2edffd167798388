"""Plots failure-probability curves and fitness bars from a study run."""
import argparse
import logging

from tethered_climb.data.artifacts import read_csv
from tethered_climb.viz import plot_failure_curves, plot_fitness

def main(args):
    logging.basicConfig(level=logging.INFO)

    RUN_DIR = args['RUN_DIR']
    SAVE_DIR = args['SAVE_DIR'] or RUN_DIR

    logging.info(f'Reading study outputs from {RUN_DIR}...')
    curves = read_csv(f'{RUN_DIR}/failure_curves.csv')
    metrics = read_csv(f'{RUN_DIR}/trade_metrics.csv')
    logging.info(f'\tcount: {len(curves)} curve points, {len(metrics)} systems')

    for n_failed in sorted(curves['n_failed'].unique()):
        logging.info(f'Plotting failure curves for {n_failed} failed robot(s)...')
        plot_failure_curves(curves, n_failed, SAVE_DIR)

    for hop_batch, table in metrics.groupby('hop_batch'):
        logging.info(f'Plotting fitness for n={hop_batch}...')
        plot_fitness(table, hop_batch, SAVE_DIR)

if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--RUN_DIR', type=str, help='output directory of a study run')
    parser.add_argument('--SAVE_DIR', type=str, default=None, help='where to write the figures')
    args = vars(parser.parse_args())

    main(args)
