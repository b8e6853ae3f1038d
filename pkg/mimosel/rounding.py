"""
Randomized rounding of a relaxed selection.

Candidates are drawn from a Gaussian centered on the relaxed optimum whose
per-coordinate variance is the spread of the SCP iterates. Each draw is
projected onto the box intersected with the convex relaxation of the mode's
constraints, and rounded to a feasible binary selection. The best projected
point is rounded at the end as well, and both outcomes are reported.
The roundings of the SCP iterates join the pool, and the best binary
candidate is then improved by single swaps that keep the structure of the
mode.
"""

from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import List
import logging
import numpy as np

from . import oracle
from .interference_model import f_logdet, sinr_direct
from .selection import from_indices
from .utils import barrier
from .utils.barrier import ConvexProgram, ConvexRow
from .utils.parsers import selection_to_bits
from .utils.tools import derive_rng

default_conf = {
    'n_samples': 1000,
    'seed': 0,
    'projection_tolerance': 1e-5,
    'projection_mu': 50.,
    'swap_refinement': True,
    'max_swaps': 100,
}


def make_config(conf=None):
    if isinstance(conf, SimpleNamespace):
        conf = vars(conf)
    conf = SimpleNamespace(**{**default_conf, **(conf or {})})
    if conf.n_samples < 1:
        raise ValueError(f'Need at least one sample, got {conf.n_samples}.')
    if not conf.projection_tolerance > 0:
        raise ValueError('The projection tolerance must be positive.')
    if conf.max_swaps < 0:
        raise ValueError(f'Negative swap budget: {conf.max_swaps}.')
    return conf


@dataclass
class RoundingResult:
    best: np.ndarray
    sinr_db: float
    projected_selection: np.ndarray  # rounding of best_projected only
    projected_sinr_db: float
    best_projected: np.ndarray
    best_so_far: List[float] = field(default_factory=list)

    @property
    def bits(self):
        return selection_to_bits(self.best)


def sample_candidate(relaxed, rng):
    """One draw of N(c_star, diag(sigma))."""
    noise = rng.standard_normal(relaxed.c_star.shape)
    return relaxed.c_star + np.sqrt(relaxed.sigma_diag) * noise


def _relaxed_constraints(mode):
    # equalities become <=, the nonconvex >= rows are dropped
    return [con for con in mode.constraints() if con.sense != '>=']


def _within(c, constraints, tol):
    return all(con.form(c) <= con.bound + tol for con in constraints)


def project_to_relaxed_set(z, mode, conf=None):
    conf = make_config(conf)
    z = np.asarray(z, dtype=float)
    assert z.shape == (mode.size,), z.shape
    if not np.all(np.isfinite(z)):
        raise ValueError('Cannot project a non-finite vector.')
    constraints = _relaxed_constraints(mode)

    clamped = np.clip(z, 0., 1.)
    if _within(clamped, constraints, 0.):
        return clamped

    n = mode.size
    # every relaxed bound is at least 1, so a small constant is interior
    program = ConvexProgram(
        n_c=n,
        lower=np.zeros(n),
        upper=np.ones(n),
        linear=np.zeros(n),
        rows=[ConvexRow(np.zeros(n), con.bound, con.form)
              for con in constraints],
        prox_weight=1.,
        prox_center=z,
        start=np.full(n, min(1e-2, 1 / n)))
    x, _ = barrier.solve(
        program, {'tolerance': conf.projection_tolerance,
                  'mu': conf.projection_mu})
    return np.clip(x, 0., 1.)


class _Best:
    """Running best binary selection, ties to the smallest bit string."""
    def __init__(self):
        self.selection, self.sinr_db, self.bits = None, -np.inf, None

    def offer(self, c, sinr_db):
        bits = selection_to_bits(c)
        if sinr_db > self.sinr_db or (
                sinr_db == self.sinr_db and bits < self.bits):
            self.selection, self.sinr_db, self.bits = c, sinr_db, bits


def refine_by_swaps(model, mode, c, max_swaps=default_conf['max_swaps']):
    """Steepest ascent of the SINR over `mode.neighbors`, from c."""
    current = np.asarray(c, dtype=np.uint8)
    value = oracle.batched_sinr(model, [np.flatnonzero(current)])[0]
    for _ in range(max_swaps):
        candidates = list(mode.neighbors(current))
        if not candidates:
            break
        values = oracle.batched_sinr(model, candidates)
        if not np.any(values > value):
            break
        i = int(np.nanargmax(values))
        current, value = from_indices(candidates[i], mode.size), values[i]
    return current


def randomized_rounding(model, mode, relaxed, conf=None, rng=None):
    conf = make_config(conf)
    if rng is None:
        rng = derive_rng(conf.seed)
    scores = {}

    def score(c):
        bits = selection_to_bits(c)
        if bits not in scores:
            scores[bits] = sinr_direct(model, c)
        return scores[bits]

    best = _Best()
    for c in [relaxed.c_star] + list(relaxed.history):
        candidate = mode.round(c)
        best.offer(candidate, score(candidate))

    best_projected, best_f = None, -np.inf
    trace = []
    skipped = 0
    for _ in range(conf.n_samples):
        z = sample_candidate(relaxed, rng)
        try:
            projected = project_to_relaxed_set(z, mode, conf)
        except (np.linalg.LinAlgError, barrier.InfeasibleProgram,
                barrier.SolverNotConverged) as e:
            logging.debug(f'Skipping a sample: {e}')
            skipped += 1
            trace.append(best.sinr_db)
            continue
        candidate = mode.round(projected)
        best.offer(candidate, score(candidate))
        trace.append(best.sinr_db)
        try:
            value = f_logdet(model, projected)
        except np.linalg.LinAlgError as e:
            logging.debug(f'No objective at a projected sample: {e}')
            continue
        if value > best_f:
            best_projected, best_f = projected, value
    if skipped:
        logging.warning(f'Skipped {skipped}/{conf.n_samples} samples of '
                        f'{mode.label} that could not be projected.')

    if best_projected is None:
        best_projected = np.asarray(relaxed.c_star, dtype=float)
    projected_selection = mode.round(best_projected)
    projected_sinr_db = score(projected_selection)
    best.offer(projected_selection, projected_sinr_db)

    if conf.swap_refinement:
        refined = refine_by_swaps(model, mode, best.selection, conf.max_swaps)
        best.offer(refined, score(refined))

    return RoundingResult(
        best=best.selection,
        sinr_db=best.sinr_db,
        projected_selection=projected_selection,
        projected_sinr_db=projected_sinr_db,
        best_projected=best_projected,
        best_so_far=trace)
