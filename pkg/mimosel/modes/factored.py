from itertools import combinations, product
import numpy as np
from scipy.special import comb

from ..utils.base_model import BaseMode
from ..selection import (
    MembershipSets, QuadraticForm, QuadraticConstraint, top_indices)


class Factored(BaseMode):
    """k_t transmitters and k_r receivers: a k_r x k_t rectangle in C."""
    name = 'factored'
    required_counts = ['kt', 'kr']

    def _init(self, conf):
        kt, kr = conf['kt'], conf['kr']
        if not (1 <= kt <= self.M and 1 <= kr <= self.N):
            raise ValueError(f'Factored selection needs 1 <= kt <= {self.M} '
                             f'and 1 <= kr <= {self.N}, got kt={kt}, kr={kr}.')
        self.kt, self.kr = int(kt), int(kr)
        self.sets = MembershipSets(self.M, self.N)

    @property
    def k(self):
        return self.kt * self.kr

    def constraints(self):
        kt, kr, sets = self.kt, self.kr, self.sets
        constraints = [
            QuadraticConstraint(QuadraticForm('norm', sets), '==', kt * kr),
            QuadraticConstraint(
                QuadraticForm('Q', sets), '==', kr * kt * (kr + kt)),
        ]
        constraints += [
            QuadraticConstraint(QuadraticForm('col', sets, m), '<=', kr)
            for m in range(self.M)]
        constraints += [
            QuadraticConstraint(QuadraticForm('row', sets, n), '<=', kt)
            for n in range(self.N)]
        return constraints

    def is_feasible(self, c):
        C = np.asarray(c).reshape(self.M, self.N).T
        rows = np.flatnonzero(C.any(axis=1))
        cols = np.flatnonzero(C.any(axis=0))
        if len(rows) != self.kr or len(cols) != self.kt:
            return False
        return int(C.sum()) == self.k and bool(C[np.ix_(rows, cols)].all())

    def round(self, z):
        rows = top_indices(self.sets.row_sums(z), self.kr)
        cols = top_indices(self.sets.column_sums(z), self.kt)
        grid = np.zeros((self.M, self.N), dtype=np.uint8)
        grid[np.ix_(cols, rows)] = 1
        return grid.reshape(-1)

    def enumerate(self):
        for cols, rows in product(combinations(range(self.M), self.kt),
                                  combinations(range(self.N), self.kr)):
            yield tuple(m * self.N + n for m in cols for n in rows)

    def neighbors(self, c):
        """Replace one transmitter or one receiver by an unused one."""
        grid = self.sets.grid(c) > 0
        cols = np.flatnonzero(grid.any(axis=1))
        rows = np.flatnonzero(grid.any(axis=0))

        def indices(cols, rows):
            return tuple(sorted(int(m) * self.N + int(n)
                                for m in cols for n in rows))
        for i in range(len(cols)):
            for m in np.setdiff1d(np.arange(self.M), cols):
                yield indices(np.append(np.delete(cols, i), m), rows)
        for j in range(len(rows)):
            for n in np.setdiff1d(np.arange(self.N), rows):
                yield indices(cols, np.append(np.delete(rows, j), n))

    def num_candidates(self):
        return int(comb(self.M, self.kt, exact=True)
                   * comb(self.N, self.kr, exact=True))
