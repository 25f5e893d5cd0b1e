"""
SVG charts of the CSV tables written by the CLI. Note that plot() requires that matplotlib is installed
(pip install contactlib[plot]); reading the tables does not.
"""

import csv
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, List

from .errors import SchemaError

logger = logging.getLogger(__name__)

PLOT_KINDS = ('msd', 'activation', 'trajectory', 'density')
REQUIRED_COLUMNS = {
    'msd': ('t', 'msd'),
    'activation': ('t', 'activation'),
    'trajectory': ('t', 'particle', 'x', 'y'),
    'density': ('l', 'a_l'),
}


def _pyplot():
    try:
        import matplotlib
        matplotlib.use('Agg')
        import matplotlib.pyplot as plt
    except ImportError:
        raise RuntimeError("The following libraries are required to create plots: matplotlib")
    return plt


def read_table(path, kind: str) -> Dict[str, List[float]]:
    """
    Reads a CSV table into columns of floats and checks it against the columns the plot kind needs.
    :raises SchemaError: If a column is missing, the body is empty or a row has the wrong length
    """
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header:
            raise SchemaError(f'{path} has no header')
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise SchemaError(f"{path} is missing the column(s) {', '.join(missing)} needed for a {kind} plot")
        if kind == 'density' and not any(c.startswith('R_') for c in header):
            raise SchemaError(f'{path} has no R_<particle> density columns')
        columns = OrderedDict((name, []) for name in header)
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f'{path}, line {line}: expected {len(header)} fields, got {len(row)}')
            for name, value in zip(header, row):
                try:
                    columns[name].append(float(value) if value != '' else float('nan'))
                except ValueError:
                    raise SchemaError(f'{path}, line {line}: column {name} is not numeric ({value!r})')
    if not columns[header[0]]:
        raise SchemaError(f'{path} has no data rows')
    return columns


def plot(csv_path, kind: str, out_path) -> Path:
    """
    Renders one SVG chart with axes and a legend.
    :param csv_path: Table written by the CLI (diagnostics.csv for msd and activation, trajectory.csv, density.csv)
    :param kind: One of 'msd', 'activation', 'trajectory', 'density'
    :param out_path: SVG file to write; nothing is written when the table does not fit the kind
    :raises SchemaError: If the table does not match the kind
    :raises RuntimeError: If matplotlib is not installed
    """
    if kind not in PLOT_KINDS:
        raise SchemaError(f"Unknown plot kind '{kind}', expected one of {PLOT_KINDS}")
    columns = read_table(csv_path, kind)
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        _DRAW[kind](ax, columns)
        ax.legend(loc='best')
        out_path = Path(out_path)
        fig.savefig(out_path, format='svg')
    finally:
        plt.close(fig)
    logger.info('Wrote %s plot of %s to %s', kind, csv_path, out_path)
    return out_path


def _groups(columns: Dict[str, List[float]], key: str):
    """Row indices grouped by the value of column key, in order of first appearance."""
    groups = OrderedDict()
    for row, value in enumerate(columns[key]):
        groups.setdefault(value, []).append(row)
    return groups


def _draw_msd(ax, columns):
    t = columns['t']
    if 'variant' in columns:
        for variant, rows in _groups(columns, 'variant').items():
            ax.plot([t[r] for r in rows], [columns['msd'][r] for r in rows], label=f'variant {variant:g}')
    else:
        ax.plot(t, columns['msd'], label='MSD')
    ax.set_xlabel('t')
    ax.set_ylabel('mean squared displacement')


def _draw_activation(ax, columns):
    ax.step(columns['t'], columns['activation'], where='post', label='active pairs')
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel('t')
    ax.set_ylabel('fraction of active contacts')


def _draw_trajectory(ax, columns):
    for particle, rows in _groups(columns, 'particle').items():
        ax.plot([columns['x'][r] for r in rows], [columns['y'][r] for r in rows], marker='.', markersize=2,
                label=f'particle {int(particle)}')
    ax.set_aspect('equal', adjustable='datalim')
    ax.set_xlabel('x')
    ax.set_ylabel('y')


def _draw_density(ax, columns):
    for name in (c for c in columns if c.startswith('R_')):
        ax.plot(columns['a_l'], columns[name], label=name)
    ax.set_xlabel('age')
    ax.set_ylabel('linkage density')


_DRAW = {
    'msd': _draw_msd,
    'activation': _draw_activation,
    'trajectory': _draw_trajectory,
    'density': _draw_density,
}
