from itertools import combinations, product
import numpy as np
from scipy.special import comb

from ..utils.base_model import BaseMode
from ..selection import (
    MembershipSets, QuadraticForm, QuadraticConstraint, top_indices)


class MFC(BaseMode):
    """k_r receivers, each with its own k_m matched filters."""
    name = 'mfc'
    required_counts = ['km', 'kr']

    def _init(self, conf):
        km, kr = conf['km'], conf['kr']
        if not (1 <= km <= self.M and 1 <= kr <= self.N):
            raise ValueError(f'MFC selection needs 1 <= km <= {self.M} '
                             f'and 1 <= kr <= {self.N}, got km={km}, kr={kr}.')
        self.km, self.kr = int(km), int(kr)
        self.sets = MembershipSets(self.M, self.N)

    @property
    def k(self):
        return self.km * self.kr

    def constraints(self):
        km, kr, sets = self.km, self.kr, self.sets
        constraints = [
            QuadraticConstraint(QuadraticForm('norm', sets), '==', km * kr),
            QuadraticConstraint(QuadraticForm('Q_r', sets), '==', km**2 * kr),
        ]
        constraints += [
            QuadraticConstraint(QuadraticForm('col', sets, m), '<=', kr)
            for m in range(self.M)]
        constraints += [
            QuadraticConstraint(QuadraticForm('row', sets, n), '<=', km)
            for n in range(self.N)]
        return constraints

    def is_feasible(self, c):
        row_sums = self.sets.row_sums(c)
        used = np.count_nonzero(row_sums)
        return used == self.kr and bool(np.all(
            (row_sums == 0) | (row_sums == self.km)))

    def _round_rows(self, grid, cols):
        """Top k_r rows by their sum over `cols`, each taking its top k_m
        entries among `cols`."""
        rows = top_indices(grid[cols].sum(axis=0), self.kr)
        out = np.zeros((self.M, self.N), dtype=np.uint8)
        for n in rows:
            out[cols[top_indices(grid[cols, n], self.km)], n] = 1
        return out.reshape(-1)

    def round(self, z):
        return self._round_rows(self.sets.grid(z), np.arange(self.M))

    def enumerate(self):
        N = self.N
        per_row = list(combinations(range(self.M), self.km))
        for rows in combinations(range(N), self.kr):
            for choice in product(per_row, repeat=self.kr):
                yield tuple(sorted(
                    m * N + n for n, cols in zip(rows, choice) for m in cols))

    def neighbors(self, c):
        """Swap one matched filter of a used receiver, or move the filters
        of a used receiver to an unused one."""
        grid = self.sets.grid(c) > 0
        used = grid.any(axis=0)
        for n in np.flatnonzero(used):
            for m in np.flatnonzero(grid[:, n]):
                for m_new in np.flatnonzero(~grid[:, n]):
                    g = grid.copy()
                    g[m, n], g[m_new, n] = False, True
                    yield tuple(np.flatnonzero(g).tolist())
            for n_new in np.flatnonzero(~used):
                g = grid.copy()
                g[:, n_new], g[:, n] = grid[:, n], False
                yield tuple(np.flatnonzero(g).tolist())

    def num_candidates(self):
        return int(comb(self.N, self.kr, exact=True)
                   * comb(self.M, self.km, exact=True)**self.kr)
