from itertools import combinations
import numpy as np
from scipy.special import comb

from ..utils.base_model import BaseMode
from ..selection import (
    MembershipSets, QuadraticForm, QuadraticConstraint, top_indices)


class Joint(BaseMode):
    """Any k matched-filter outputs of the virtual array."""
    name = 'joint'
    required_counts = ['k']

    def _init(self, conf):
        if not 1 <= conf['k'] <= self.size:
            raise ValueError(f'Joint selection needs 1 <= k <= {self.size}, '
                             f'got k={conf["k"]}.')
        self.sets = MembershipSets(self.M, self.N)

    @property
    def k(self):
        return int(self.conf['k'])

    def constraints(self):
        return [QuadraticConstraint(
            QuadraticForm('norm', self.sets), '==', self.k)]

    def is_feasible(self, c):
        return int(np.sum(c)) == self.k

    def round(self, z):
        c = np.zeros(self.size, dtype=np.uint8)
        c[top_indices(z, self.k)] = 1
        return c

    def enumerate(self):
        return combinations(range(self.size), self.k)

    def neighbors(self, c):
        selected = set(np.flatnonzero(c).tolist())
        unselected = np.flatnonzero(np.asarray(c) == 0).tolist()
        for i in sorted(selected):
            for j in unselected:
                yield tuple(sorted(selected - {i} | {j}))

    def num_candidates(self):
        return int(comb(self.size, self.k, exact=True))
