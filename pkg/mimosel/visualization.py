import argparse
from collections import defaultdict
from pathlib import Path
import logging
import numpy as np

from .sweep import load_results
from .utils.viz import (
    LINE_STYLES, color_cycle, data_block, plot_lines, save_script,
    script_header)


def _family(label):
    return label.split('(')[0]


def sweep_script(table, image=None, title='Output SINR'):
    """Gnuplot script drawing the SINR columns of a sweep table against the
    target angle, or against the configuration index when a single angle
    was swept."""
    assert len(table) > 0
    thetas = sorted({row['theta_deg'] for row in table})
    by_angle = len(thetas) > 1

    groups = defaultdict(list)
    for row in table:
        groups[(_family(row['mode']), row['power_adjust'])].append(row)

    xlabel = 'target azimuth (deg)' if by_angle else 'configuration index'
    lines = script_header(title, xlabel, 'SINR (dB)', image)
    curves = []

    full = [r for r in table if np.isfinite(r['sinr_full_db'])]
    if by_angle and full:
        full = {r['theta_deg']: r['sinr_full_db'] for r in full}
        lines += data_block('full', list(full), list(full.values()))
        curves.append(('full', 'full array', '#000000',
                       LINE_STYLES['sinr_full_db']))

    for i, ((family, adjusted), rows) in enumerate(sorted(groups.items())):
        x = ([r['theta_deg'] for r in rows] if by_angle
             else list(range(1, len(rows) + 1)))
        name = f'{family}{"_adj" if adjusted else ""}'
        suffix = ', power adjusted' if adjusted else ''
        for key, what in [('sinr_scp_db', 'SCP'), ('sinr_oracle_db', 'ES')]:
            y = [r[key] for r in rows]
            if not np.any(np.isfinite(y)):
                continue
            block = f'{name}_{what.lower()}'
            lines += data_block(block, x, y)
            curves.append((block, f'{family} {what}{suffix}', color_cycle(i),
                           LINE_STYLES[key]))
    lines += plot_lines(curves)
    return lines


def main(results, output, image=None):
    table = load_results(results)
    lines = sweep_script(table, image)
    save_script(output, lines)
    logging.info(f'Wrote a gnuplot script for {len(table)} rows to {output}.')


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--results', type=Path, required=True)
    parser.add_argument('--output', type=Path, required=True)
    parser.add_argument('--image', type=Path)
    args = parser.parse_args()
    main(args.results, args.output, args.image)
