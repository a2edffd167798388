import os

import numpy as np
import matplotlib.pyplot as plt
import seaborn as sns


def _save(save_dir, name):
    if save_dir:
        if not os.path.exists(save_dir):
            os.makedirs(save_dir)
        plt.savefig(f'{save_dir}/{name}')


def plot_climb_positions(positions_df, save_dir=None, name='climb-positions.png'):
    """Plots the height of every robot and of the system center against time.

        Args:
            positions_df (Pandas DataFrame): climb positions with columns t,
            robot, z
            save_dir (str): directory the figure is written to, None to skip
            name (str): file name of the figure
        Returns
            The matplotlib figure.
    """
    sns.set_style('whitegrid')
    df = positions_df.copy()
    # robots are numbered from 1 on figures
    df['robot'] = 'Robot ' + (df['robot'] + 1).astype(str)
    center = positions_df.groupby('t', as_index=False)['z'].mean()

    fig = plt.figure(figsize=(15, 4))
    sns.lineplot(data=df, x='t', y='z', hue='robot')
    plt.plot(center['t'], center['z'], color='black', linestyle='--', label='System center')
    plt.xlabel('Time (s)')
    plt.ylabel('Height up-slope (m)')
    plt.title('Position of each robot during the climb')
    plt.legend()

    _save(save_dir, name)
    return fig


def plot_failure_curves(curves_df, n_failed, save_dir=None):
    """Failure probability against spines per robot, one line per team size."""
    sns.set_style('whitegrid')
    df = curves_df[curves_df['n_failed'] == n_failed].copy()
    df['N'] = df['N'].astype(str) + ' robots'

    fig = plt.figure(figsize=(15, 4))
    sns.lineplot(data=df, x='k', y='probability', hue='N', marker='o')
    plt.xlabel('Spines per robot')
    plt.ylabel('Probability of failure')
    plt.title(f'Failure probability when {n_failed} robot(s) fail to grip')
    plt.ylim(bottom=0, top=1.05)

    _save(save_dir, f'failure-curves-{n_failed}.png')
    return fig


def plot_fitness(table_df, hop_batch, save_dir=None):
    sns.set_style('whitegrid')
    fig = plt.figure(figsize=(15, 4))
    sns.barplot(data=table_df, x='size', y='fitness', color='steelblue')
    plt.xlabel('Robots in the system')
    plt.ylabel('Normalized fitness')
    plt.title(f'Fitness per system size, {hop_batch} robot(s) hopping at once')
    plt.ylim(bottom=0)

    _save(save_dir, f'fitness-{hop_batch}.png')
    return fig


def plot_hop_trajectory(trajectory_df, save_dir=None):
    """Height and attitude of one hop against time."""
    sns.set_style('whitegrid')
    fig, (ax_z, ax_att) = plt.subplots(1, 2, figsize=(15, 4))
    ax_z.plot(trajectory_df['t'], trajectory_df['z'])
    ax_z.set_xlabel('Time (s)')
    ax_z.set_ylabel('Height (m)')
    ax_z.set_title('Hop trajectory')

    for column in ('roll', 'pitch', 'yaw'):
        ax_att.plot(trajectory_df['t'], np.degrees(trajectory_df[column]), label=column)
    ax_att.set_xlabel('Time (s)')
    ax_att.set_ylabel('Angle (deg)')
    ax_att.set_title('Attitude')
    ax_att.legend()

    _save(save_dir, 'hop-trajectory.png')
    return fig
