import numpy as np
from scipy.special import comb

from ..selection import QuadraticForm, QuadraticConstraint, top_indices
from .mfc import MFC


class Hybrid(MFC):
    """MFC pattern whose matched filters use at most k_t transmitters."""
    name = 'hybrid'
    required_counts = ['kt', 'km', 'kr']

    def _init(self, conf):
        super()._init(conf)
        kt = conf['kt']
        if not self.km <= kt <= self.M:
            raise ValueError(f'Hybrid selection needs km <= kt <= {self.M}, '
                             f'got km={self.km}, kt={kt}.')
        self.kt = int(kt)

    def constraints(self):
        km, kr, kt = self.km, self.kr, self.kt
        Q_t = QuadraticForm('Q_t', self.sets)
        # The lower bound is the nonconvex one.
        return super().constraints() + [
            QuadraticConstraint(Q_t, '>=', (kr * km)**2 / kt),
            QuadraticConstraint(Q_t, '<=', kr**2 * km),
        ]

    def is_feasible(self, c):
        if not super().is_feasible(c):
            return False
        return np.count_nonzero(self.sets.column_sums(c)) <= self.kt

    def round(self, z):
        grid = self.sets.grid(z)
        cols = top_indices(grid.sum(axis=1), self.kt)
        return self._round_rows(grid, cols)

    def enumerate(self):
        N = self.N
        for indices in super().enumerate():
            if len({i // N for i in indices}) <= self.kt:
                yield indices

    def neighbors(self, c):
        N = self.N
        for indices in super().neighbors(c):
            if len({i // N for i in indices}) <= self.kt:
                yield indices

    def num_candidates(self):
        """Patterns whose used transmitters form an exact j-set, summed over
        j <= k_t; covering counts by inclusion-exclusion."""
        km, kr = self.km, self.kr
        total = 0
        for j in range(km, self.kt + 1):
            covering = sum(
                (-1)**i * comb(j, i, exact=True)
                * comb(j - i, km, exact=True)**kr
                for i in range(j + 1))
            total += comb(self.M, j, exact=True) * covering
        return int(comb(self.N, kr, exact=True) * total)
