import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from tethered_climb.study import TradeStudyConfig, failure_curve, fitness_study
from tethered_climb.viz import (plot_climb_positions, plot_failure_curves, plot_fitness,
    plot_hop_trajectory)


def test_plot_climb_positions(tmp_path):
    t = np.repeat([0.0, 1.5, 3.0], 4)
    df = pd.DataFrame({'t': t, 'robot': np.tile(range(4), 3), 'z': t + np.tile(range(4), 3)})
    fig = plot_climb_positions(df, str(tmp_path))
    assert (tmp_path / 'climb-positions.png').exists()
    plt.close(fig)


def test_plot_failure_curves(tmp_path):
    curves = pd.concat([failure_curve(n, 1, range(1, 13), 500, seed=0) for n in (3, 4)])
    fig = plot_failure_curves(curves, 1, str(tmp_path))
    assert (tmp_path / 'failure-curves-1.png').exists()
    plt.close(fig)


def test_plot_fitness(tmp_path):
    report = fitness_study(TradeStudyConfig())
    fig = plot_fitness(report.table, 1, str(tmp_path))
    assert (tmp_path / 'fitness-1.png').exists()
    plt.close(fig)


def test_plot_hop_trajectory(tmp_path):
    t = np.linspace(0.0, 1.5, 16)
    df = pd.DataFrame({'t': t, 'z': 1.7 * t - 1.855 * t ** 2 / 2, 'roll': 0.0, 'pitch': 0.01 * t,
        'yaw': 0.0})
    fig = plot_hop_trajectory(df, str(tmp_path / 'nested'))
    assert (tmp_path / 'nested' / 'hop-trajectory.png').exists()
    plt.close(fig)


def test_plot_without_save_dir(tmp_path):
    t = np.repeat([0.0, 1.0], 2)
    fig = plot_climb_positions(pd.DataFrame({'t': t, 'robot': [0, 1, 0, 1], 'z': t}))
    assert fig is not None
    assert list(tmp_path.iterdir()) == []
    plt.close(fig)
