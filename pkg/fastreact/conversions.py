"""
Module contains the conversions between fastreact objects and the files
they are stored in: snapshot and report CSVs, JSON manifests and tabulated
kinetics.
"""

import json
import os
from os.path import join

import numpy as np
import pandas as pd

from . import __version__
from .exceptions import InvalidInputError
from .utilities import get_logger

# Lossless text for every float written
FLOAT_FORMAT = '%.17g'


def write_csv(df, filename):
    """
    Write a dataframe with the lossless float format and no index
    """
    df.to_csv(filename, float_format=FLOAT_FORMAT, index=False)
    return filename


def write_json(info, filename):
    with open(filename, 'w') as fp:
        json.dump(_jsonable(info), fp, indent=2, sort_keys=True)
    return filename


def read_json(filename):
    with open(filename) as fp:
        return json.load(fp)


def _jsonable(value):
    """
    Recursively convert numpy scalars, arrays and tuples to plain python
    """
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    elif isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    elif isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    elif isinstance(value, np.bool_):
        return bool(value)
    elif isinstance(value, np.integer):
        return int(value)
    elif isinstance(value, np.floating):
        value = float(value)

    if isinstance(value, float) and not np.isfinite(value):
        return str(value)

    return value


def snapshot_to_dataframe(traj, index):
    """
    Tabulate one snapshot of a trajectory

    Args:
        traj: Trajectory
        index: Snapshot index

    Returns:
        df: DataFrame with columns x, u, v, w
    """
    u = traj.u[index]
    v = traj.v[index]
    return pd.DataFrame({'x': traj.x, 'u': u, 'v': v, 'w': u - v})


def snapshot_filename(index, t):
    return 'snapshot_{:04d}_t{:.6g}.csv'.format(index, t)


def write_snapshots(traj, directory):
    """
    Write every snapshot of a trajectory to its own CSV

    Returns:
        filenames: List of the files written
    """
    log = get_logger(__name__)
    filenames = []

    for i, t in enumerate(traj.times):
        f = join(directory, snapshot_filename(i, t))
        write_csv(snapshot_to_dataframe(traj, i), f)
        filenames.append(f)

    log.info('Wrote {} snapshots to {}'.format(len(filenames), directory))
    return filenames


def diagnostics_to_dataframe(traj):
    """
    Per step diagnostics with the cumulative reaction mass
    """
    increments = traj.reaction_increments
    if increments is None:
        increments = np.zeros(0)
    return pd.DataFrame({'t': traj.step_times, 'reaction_increment': increments,
                         'reaction_mass': np.cumsum(increments)})


def profile_to_dataframe(samples):
    return pd.DataFrame({k: samples[k] for k in ['eta', 'f', 'u', 'v']})


def read_snapshot(filename):
    """
    Read a snapshot CSV back into arrays

    Returns:
        x, u, v: Arrays
    """
    df = pd.read_csv(filename, float_precision='round_trip')
    missing = [c for c in ['x', 'u', 'v'] if c not in df.columns]
    if missing:
        raise InvalidInputError('{} is missing columns {}'.format(filename, missing))
    return df['x'].values, df['u'].values, df['v'].values


def read_kinetics_table(filename):
    """
    Read a tabulated interaction function. The first column holds the u
    samples, the header the v samples and the body F(u, v).

        u,0,0.5,1
        0,0,0,0
        0.5,0,0.2,0.4
        1,0,0.4,0.9

    Returns:
        u_grid, v_grid, table: Arrays for Kinetics.tabulated
    """
    if not os.path.isfile(filename):
        raise InvalidInputError('Kinetics table {} does not exist'.format(filename))

    df = pd.read_csv(filename, index_col=0, float_precision='round_trip')

    try:
        u_grid = df.index.values.astype(float)
        v_grid = df.columns.values.astype(float)
    except ValueError:
        raise InvalidInputError('Kinetics table {} has non-numeric samples'.format(filename))

    return u_grid, v_grid, df.values.astype(float)


def manifest(config, command, started, finished, wall_time, **extras):
    """
    Build the run manifest stored with every output

    Args:
        config: RunConfig
        command: Name of the CLI command
        started: ISO start time
        finished: ISO finish time
        wall_time: Seconds spent
        extras: Command specific entries

    Returns:
        info: Dictionary ready for write_json
    """
    info = {'command': command, 'config_hash': config.config_hash(),
            'version': __version__, 'started': started, 'finished': finished,
            'wall_time_s': wall_time, 'config': config.to_dict(),
            'source': config.source}
    info.update(extras)
    return info
