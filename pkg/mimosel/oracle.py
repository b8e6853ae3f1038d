import argparse
from dataclasses import dataclass
from itertools import islice
from pathlib import Path
import hashlib
import logging
import pprint
import h5py
import numpy as np
import torch
from tqdm import tqdm

from .interference_model import build_model
from .selection import from_indices, make_mode
from .utils.parsers import parse_scenario, selection_to_bits
from .utils.tools import linear_to_db


default_conf = {
    'budget': 10**7,
    'chunk_size': 16384,
}


class BudgetExceeded(ValueError):
    pass


@dataclass
class OracleResult:
    best: np.ndarray
    sinr_db: float
    candidates_evaluated: int

    @property
    def bits(self):
        return selection_to_bits(self.best)


def enumerate_feasible(mode, budget=default_conf['budget']):
    """Lazily yield every feasible binary selection of the mode."""
    num = mode.num_candidates()
    if num > budget:
        raise BudgetExceeded(
            f'{mode.label} has {num} candidates, above the budget {budget}.')
    for indices in mode.enumerate():
        yield from_indices(indices, mode.size)


def _chunks(iterable, size):
    iterator = iter(iterable)
    while True:
        chunk = list(islice(iterator, size))
        if not chunk:
            return
        yield chunk


@torch.no_grad()
def batched_sinr(model, indices, device='cpu'):
    """Linear MVDR SINR of each selection given by a (B, k) index array.
    Entries whose reduced covariance is not positive definite are nan."""
    idx = torch.from_numpy(np.asarray(indices, dtype=np.int64)).to(device)
    A_jc = torch.from_numpy(model.A_jc.astype(np.complex128)).to(device)
    a_s = torch.from_numpy(model.a_s.astype(np.complex128)).to(device)
    powers = torch.from_numpy(model.powers).to(device).to(torch.complex128)

    A = A_jc[idx]  # B x k x J
    R = (A * powers) @ A.conj().transpose(-1, -2)
    eye = torch.eye(idx.shape[1], dtype=R.dtype, device=device)
    R = R + model.sigma_n2 * eye
    L, info = torch.linalg.cholesky_ex(R)
    y = torch.linalg.solve_triangular(L, a_s[idx][..., None], upper=False)
    sinr = model.sigma_s2 * (y.abs()**2).sum(dim=(-1, -2))
    sinr[info != 0] = float('nan')
    return sinr.cpu().numpy()


def model_digest(model):
    h = hashlib.sha1()
    for array in [model.a_s, model.A_jc, model.powers,
                  np.array([model.sigma_s2, model.sigma_n2])]:
        h.update(np.ascontiguousarray(array).tobytes())
    return h.hexdigest()


def cache_key(model, mode):
    return f'{mode.label}/{model.theta_s:.6f}/{model_digest(model)}'


def _read_entry(grp):
    return OracleResult(
        best=grp['best'].__array__(),
        sinr_db=float(grp.attrs['sinr_db']),
        candidates_evaluated=int(grp.attrs['candidates']))


def load_cached(cache, labels):
    """Every optimum stored in `cache` for the given mode labels, by key."""
    results = {}
    if cache is None or not Path(cache).exists():
        return results
    with h5py.File(str(cache), 'r') as f:
        for label in labels:
            if label not in f:
                continue
            for theta, by_digest in f[label].items():
                for digest, grp in by_digest.items():
                    results[f'{label}/{theta}/{digest}'] = _read_entry(grp)
    logging.info(f'Loaded {len(results)} optima from {cache}.')
    return results


def store_cached(cache, results):
    """Write the optima of `results` missing from `cache`, in one open."""
    if cache is None or not results:
        return
    Path(cache).parent.mkdir(exist_ok=True, parents=True)
    with h5py.File(str(cache), 'a') as f:
        for key, result in results.items():
            if key in f:
                continue
            grp = f.create_group(key)
            grp.create_dataset('best', data=result.best)
            grp.attrs['sinr_db'] = result.sinr_db
            grp.attrs['candidates'] = result.candidates_evaluated


def exhaustive_optimum(model, mode, conf=None, cache=None):
    """Best feasible selection by exhaustive search, ties to the smallest
    bit string. Results are memoized in the HDF5 file `cache` if given;
    a single process must own the file."""
    conf = {**default_conf, **(conf or {})}
    key = cache_key(model, mode)
    if cache is not None and Path(cache).exists():
        with h5py.File(str(cache), 'r') as f:
            if key in f:
                logging.info(f'Loaded the {mode.label} optimum from {cache}.')
                return _read_entry(f[key])

    num = mode.num_candidates()
    if num > conf['budget']:
        raise BudgetExceeded(f'{mode.label} has {num} candidates, above the '
                             f'budget {conf["budget"]}.')
    device = 'cuda' if torch.cuda.is_available() else 'cpu'

    best, best_value, best_bits, evaluated = None, -np.inf, None, 0
    chunks = _chunks(mode.enumerate(), conf['chunk_size'])
    total = -(-num // conf['chunk_size'])
    for chunk in tqdm(chunks, total=total, disable=total < 10):
        values = batched_sinr(model, chunk, device)
        evaluated += len(chunk)
        top = np.nanmax(values) if np.any(np.isfinite(values)) else np.nan
        if not top >= best_value:
            continue
        for i in np.flatnonzero(values == top):
            c = from_indices(chunk[i], mode.size)
            bits = selection_to_bits(c)
            if top > best_value or bits < best_bits:
                best, best_value, best_bits = c, top, bits
    if best is None:
        raise np.linalg.LinAlgError(
            f'No candidate of {mode.label} has a positive definite covariance.')

    result = OracleResult(best, float(linear_to_db(best_value)), evaluated)
    store_cached(cache, {key: result})
    return result


def main(scenario, mode, counts, theta, cache=None, conf=None):
    conf = {**default_conf, **(conf or {})}
    logging.info('Exhaustive search with configuration:'
                 f'\n{pprint.pformat(conf)}')
    scenario = parse_scenario(scenario)
    model = build_model(scenario, theta)
    geom = model.geometry
    mode = make_mode(mode, geom.M, geom.N, **counts)
    logging.info(f'Evaluating {mode.num_candidates()} candidates of '
                 f'{mode.label}.')
    result = exhaustive_optimum(model, mode, conf, cache)
    logging.info(f'Optimum of {mode.label} at {theta} deg: '
                 f'{result.sinr_db:.6f} dB with {result.bits}.')
    return result


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--scenario', type=Path, required=True)
    parser.add_argument('--mode', type=str, required=True,
                        choices=['joint', 'factored', 'mfc', 'hybrid'])
    parser.add_argument('--k', type=int)
    parser.add_argument('--kt', type=int)
    parser.add_argument('--kr', type=int)
    parser.add_argument('--km', type=int)
    parser.add_argument('--theta', type=float, required=True)
    parser.add_argument('--cache', type=Path)
    parser.add_argument('--budget', type=int, default=default_conf['budget'])
    args = parser.parse_args()
    counts = {k: getattr(args, k) for k in ['k', 'kt', 'kr', 'km']
              if getattr(args, k) is not None}
    main(args.scenario, args.mode, counts, args.theta, args.cache,
         {'budget': args.budget})
