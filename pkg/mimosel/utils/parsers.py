from pathlib import Path
import logging
import numpy as np

from ..array_model import ArrayGeometry
from ..interference_model import (
    Clutter, Jammer, Scenario, JAMMER_MODELS)


class ScenarioError(ValueError):
    def __init__(self, message, path=None, line=None):
        where = ''
        if path is not None:
            where = f'{path}:{line}: ' if line is not None else f'{path}: '
        super().__init__(where + message)
        self.path, self.line = path, line


class MalformedLine(ScenarioError):
    pass


class MissingKey(ScenarioError):
    pass


class UnknownKey(ScenarioError):
    pass


class OutOfRange(ScenarioError):
    pass


'''
Scenario files are line-oriented `key = value` texts. Blank lines and text
after `#` are ignored. `jammer = <deg>, <dBW>` may be repeated.
'''
MANDATORY_KEYS = ['M', 'N', 'd_t', 'd_r', 'target_power']
SCENARIO_KEYS = {
    'M': int,
    'N': int,
    'd_t': float,
    'd_r': float,
    'target_theta': float,
    'target_power': float,
    'jammer': lambda v: tuple(float(x) for x in _split(v, 2)),
    'jammer_model': str,
    'clutter_rank': int,
    'clutter_span': lambda v: tuple(float(x) for x in _split(v, 2)),
    'cnr': float,
    'noise_power': float,
    'non_overlapping': lambda v: _boolean(v),
    'require_interference': lambda v: _boolean(v),
}


def _split(value, num):
    items = [x.strip() for x in value.split(',')]
    if len(items) != num:
        raise ValueError(f'expected {num} comma-separated values')
    return items


def _boolean(value):
    value = value.lower()
    if value not in ('true', 'false', '1', '0', 'yes', 'no'):
        raise ValueError(f'not a boolean: {value}')
    return value in ('true', '1', 'yes')


def parse_scenario(path):
    with open(path, 'r') as f:
        raw_data = f.readlines()

    values, jammers, lines = {}, [], {}
    for i, data in enumerate(raw_data, start=1):
        data = data.split('#')[0].strip()
        if not data:
            continue
        if '=' not in data:
            raise MalformedLine(f'expected `key = value`, got "{data}"',
                                path, i)
        key, value = (x.strip() for x in data.split('=', 1))
        if key not in SCENARIO_KEYS:
            raise UnknownKey(f'unknown key: {key}', path, i)
        try:
            parsed = SCENARIO_KEYS[key](value)
        except ValueError as e:
            raise MalformedLine(f'invalid value for {key}: {e}', path, i)
        if key == 'jammer':
            jammers.append((parsed, i))
            continue
        if key in values:
            raise MalformedLine(f'duplicate key: {key}', path, i)
        values[key], lines[key] = parsed, i

    for key in MANDATORY_KEYS:
        if key not in values:
            raise MissingKey(f'missing key: {key}', path)

    def check(key, valid, message):
        if key in values and not valid(values[key]):
            raise OutOfRange(f'{key} {message}, got {values[key]}',
                             path, lines[key])

    check('M', lambda v: v >= 1, 'must be >= 1')
    check('N', lambda v: v >= 1, 'must be >= 1')
    check('d_t', lambda v: np.isfinite(v) and v > 0, 'must be positive')
    check('d_r', lambda v: np.isfinite(v) and v > 0, 'must be positive')
    check('clutter_rank', lambda v: v >= 0, 'must be >= 0')
    check('jammer_model', lambda v: v in JAMMER_MODELS,
          f'must be one of {JAMMER_MODELS}')
    check('clutter_span', lambda v: np.all(np.isfinite(v)) and v[0] <= v[1],
          'must be a finite interval start, stop')
    for key in ['target_theta', 'target_power', 'cnr', 'noise_power']:
        check(key, np.isfinite, 'must be finite')
    for (theta, power), i in jammers:
        if not (np.isfinite(theta) and np.isfinite(power)):
            raise OutOfRange('jammer angle and power must be finite',
                             path, i)

    geometry = ArrayGeometry(
        values['M'], values['N'], values['d_t'], values['d_r'])
    if values.get('non_overlapping', False) and not geometry.is_non_overlapping:
        raise OutOfRange(
            f'non_overlapping requires d_t = N d_r = '
            f'{geometry.N * geometry.d_r}, got d_t={geometry.d_t}',
            path, lines['d_t'])

    scenario = Scenario(
        geometry=geometry,
        theta_s=values.get('target_theta', 0.),
        target_power=values['target_power'],
        jammers=tuple(Jammer(t, p) for (t, p), _ in jammers),
        jammer_model=values.get('jammer_model', 'barrage'),
        clutter=Clutter(
            rank=values.get('clutter_rank', 0),
            span=values.get('clutter_span', (0., 90.)),
            cnr=values.get('cnr', 0.)),
        noise_power=values.get('noise_power', 0.),
        require_interference=values.get('require_interference', False))
    logging.info(f'Loaded a {geometry.N}x{geometry.M} scenario with '
                 f'{len(jammers)} jammers and clutter rank '
                 f'{scenario.clutter.rank} from {Path(path).name}.')
    return scenario


def parse_theta_grid(spec):
    """`START:STOP:STEP` (inclusive) or a single angle, in degrees."""
    parts = str(spec).split(':')
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f'Invalid angle grid: {spec}')
    if len(values) == 1:
        return np.array(values)
    if len(values) != 3:
        raise ValueError(f'Expected START:STOP:STEP, got {spec}')
    start, stop, step = values
    if step <= 0 or stop < start:
        raise ValueError(f'Empty angle grid: {spec}')
    num = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(num)


def selection_to_bits(c):
    """Bit string of a selection vector, index 0 first."""
    return ''.join('1' if b else '0' for b in np.asarray(c).astype(bool))


def bits_to_selection(bits):
    if set(bits) - {'0', '1'}:
        raise ValueError(f'Not a bit string: {bits}')
    return np.array([b == '1' for b in bits], dtype=np.uint8)
