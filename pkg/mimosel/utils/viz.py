"""
Gnuplot script primitives. No plotting happens in Python.

1) Start a script with `script_header`.
2) Add the data with `data_block`, any number of times.
3) Draw the blocks with `plot_lines` and write the result with `save_script`.
"""

LINE_STYLES = {
    'sinr_full_db': 'dashtype 2',
    'sinr_scp_db': 'dashtype 1',
    'sinr_oracle_db': 'dashtype 3',
}


PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd',
           '#8c564b', '#e377c2', '#17becf']


def color_cycle(i):
    return PALETTE[i % len(PALETTE)]


def script_header(title, xlabel, ylabel, output=None,
                  terminal='pngcairo size 900,600'):
    lines = []
    if output is not None:
        lines += [f'set terminal {terminal}', f"set output '{output}'"]
    lines += [
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        'set key outside right',
        'set grid',
        "set datafile missing 'nan'",
    ]
    return lines


def data_block(name, x, y):
    """Inline data named $name, one `x y` pair per line."""
    assert len(x) == len(y)
    lines = [f'${name} << EOD']
    lines += [f'{a:.6f} {b:.6f}' for a, b in zip(x, y)]
    lines.append('EOD')
    return lines


def plot_lines(curves):
    """curves: list of (block name, legend title, color, extra style)."""
    parts = [f"${name} using 1:2 with linespoints lc rgb '{color}' {style} "
             f"title '{title}'" for name, title, color, style in curves]
    return ['plot ' + ', \\\n     '.join(parts)]


def save_script(path, lines):
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + '\n')
