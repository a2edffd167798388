"""Writers and readers for the CSV and JSON files the commands leave behind.

CSV files open with `# key: value` provenance lines and read back with
pandas' `comment='#'`. JSON files carry a `provenance` object and sorted keys
so two runs of the same scenario produce identical bytes.
"""
import json
import logging
import os
from dataclasses import asdict

import numpy as np
import pandas as pd

from ..terrain import Asperity, TerrainParams, TerrainPatch

PATCH_FILE = 'patch.csv'
ASPERITY_FILE = 'asperities.csv'
PATCH_META_FILE = 'patch.json'


def _ensure_dir(path):
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'value'):
        return value.value
    raise TypeError(f'cannot serialize {type(value).__name__}')


def _clean(value):
    """Non-finite floats become null so the files stay valid JSON."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (float, np.floating)) and not np.isfinite(value):
        return None
    return value


def write_csv(df, path, provenance):
    _ensure_dir(path)
    with open(path, 'w', newline='') as f:
        for key in sorted(provenance):
            f.write(f'# {key}: {provenance[key]}\n')
        df.to_csv(f, index=False, float_format='%.17g', lineterminator='\n')
    logging.info(f'\twrote {path} ({len(df)} rows)')


def read_csv(path):
    return pd.read_csv(path, comment='#', float_precision='round_trip')


def read_provenance(path):
    provenance = {}
    with open(path, 'r') as f:
        for line in f:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].partition(':')
            provenance[key.strip()] = value.strip()
    return provenance


def write_json(document, path, provenance):
    _ensure_dir(path)
    document = dict(document, provenance=provenance)
    with open(path, 'w') as f:
        json.dump(_clean(document), f, sort_keys=True, indent=2, default=_json_default)
        f.write('\n')
    logging.info(f'\twrote {path}')


def read_json(path):
    with open(path, 'r') as f:
        return json.load(f)


def patch_frame(patch):
    xx, yy = np.meshgrid(patch.x, patch.y)
    return pd.DataFrame({'x': xx.ravel(), 'y': yy.ravel(), 'z': patch.grid.ravel()})


def asperity_frame(asperities):
    return pd.DataFrame(
        [(*a.position, a.tip_radius, a.normal_angle) for a in asperities],
        columns=['x', 'y', 'z', 'tip_radius', 'normal_angle'],
    )


def write_patch(patch, asperities, out_dir, provenance):
    write_csv(patch_frame(patch), os.path.join(out_dir, PATCH_FILE), provenance)
    write_csv(asperity_frame(asperities), os.path.join(out_dir, ASPERITY_FILE), provenance)
    write_json(
        {'params': asdict(patch.params), 'metadata': patch.metadata},
        os.path.join(out_dir, PATCH_META_FILE),
        provenance,
    )


def read_patch(out_dir):
    """Rebuilds the patch and its asperities from a terrain output directory.

        Returns
            (TerrainPatch, list of Asperity)
    """
    meta = read_json(os.path.join(out_dir, PATCH_META_FILE))
    params = TerrainParams(**meta['params'])
    df = read_csv(os.path.join(out_dir, PATCH_FILE))
    x = np.unique(df['x'].to_numpy())
    y = np.unique(df['y'].to_numpy())
    # rows were written y-major, matching grid[j, i]
    grid = df['z'].to_numpy().reshape(len(y), len(x))
    patch = TerrainPatch(params, meta['metadata']['spacing'], x, y, grid, meta['metadata'])

    adf = read_csv(os.path.join(out_dir, ASPERITY_FILE))
    asperities = [
        Asperity((row.x, row.y, row.z), row.tip_radius, row.normal_angle)
        for row in adf.itertuples(index=False)
    ]
    return patch, asperities


def trajectory_frame(trajectory):
    """One row per RobotState of a flown hop."""
    rows = []
    for s in trajectory:
        roll, pitch, yaw = s.euler
        rows.append((s.time, *s.position.tolist(), *s.velocity.tolist(), roll, pitch, yaw,
            s.propellant))
    return pd.DataFrame(rows, columns=['t', 'x', 'y', 'z', 'vx', 'vy', 'vz', 'roll', 'pitch',
        'yaw', 'propellant'])
