"""
Selection vectors and the quadratic structure of the selection problems.

A selection vector c of length MN is viewed as the N x M matrix C whose
columns are transmitters and rows receivers (c = vec(C), column-major).
The membership vectors v_t,m and v_r,n indicate column m and row n; the
diagonal matrices P_t,m = diag(v_t,m), P_r,n = diag(v_r,n) and the Gram
structures Q_t = P_t P_t^T, Q_r = P_r P_r^T, Q = Q_t + Q_r give

    c^T P_t,m c = sum of c_i^2 over column m
    c^T Q_t c   = sum_m (column sum m)^2
    c^T Q_r c   = sum_n (row sum n)^2.

None of these matrices is ever formed densely.
"""

from dataclasses import dataclass
import numpy as np

from . import modes
from .utils.base_model import dynamic_load

FORMS = ('norm', 'Q', 'Q_r', 'Q_t', 'col', 'row')
SENSES = ('<=', '==', '>=')


class MembershipSets:
    def __init__(self, M, N):
        self.M, self.N = M, N
        index = np.arange(M * N).reshape(M, N)  # index[m, n] = m N + n
        self.tx = [index[m] for m in range(M)]
        self.rx = [index[:, n] for n in range(N)]

    @property
    def size(self):
        return self.M * self.N

    def grid(self, c):
        """(M, N) view of c: grid[m, n] = C[n, m]."""
        return np.asarray(c, dtype=float).reshape(self.M, self.N)

    def column_sums(self, c):
        return self.grid(c).sum(axis=1)

    def row_sums(self, c):
        return self.grid(c).sum(axis=0)

    def column_squares(self, c):
        return (self.grid(c)**2).sum(axis=1)

    def row_squares(self, c):
        return (self.grid(c)**2).sum(axis=0)


def to_matrix(c, M, N):
    """The N x M selection matrix C of c."""
    return np.asarray(c).reshape(M, N).T


def from_matrix(C):
    return np.asarray(C).T.reshape(-1)


def from_indices(indices, size):
    c = np.zeros(size, dtype=np.uint8)
    c[list(indices)] = 1
    return c


def is_binary(c):
    c = np.asarray(c)
    return bool(np.all((c == 0) | (c == 1)))


class QuadraticForm:
    """One of the PSD forms c^T W c of the selection constraints."""
    def __init__(self, kind, sets, index=None):
        assert kind in FORMS, kind
        assert (index is None) == (kind not in ('col', 'row')), (kind, index)
        self.kind, self.sets, self.index = kind, sets, index

    def __call__(self, c):
        s = self.sets
        if self.kind == 'norm':
            return float(np.dot(c, c))
        elif self.kind == 'col':
            return float(s.column_squares(c)[self.index])
        elif self.kind == 'row':
            return float(s.row_squares(c)[self.index])
        value = 0.
        if self.kind in ('Q', 'Q_t'):
            value += np.sum(s.column_sums(c)**2)
        if self.kind in ('Q', 'Q_r'):
            value += np.sum(s.row_sums(c)**2)
        return float(value)

    def gradient(self, c):
        """2 W c."""
        c = np.asarray(c, dtype=float)
        s = self.sets
        if self.kind == 'norm':
            return 2 * c
        grad = np.zeros(s.size)
        if self.kind == 'col':
            idx = s.tx[self.index]
            grad[idx] = 2 * c[idx]
        elif self.kind == 'row':
            idx = s.rx[self.index]
            grad[idx] = 2 * c[idx]
        else:
            g = np.zeros((s.M, s.N))
            if self.kind in ('Q', 'Q_t'):
                g += s.column_sums(c)[:, None]
            if self.kind in ('Q', 'Q_r'):
                g += s.row_sums(c)[None]
            grad = 2 * g.reshape(-1)
        return grad

    def add_hessian(self, H, weight=1.):
        """H[:MN, :MN] += weight * 2 W, in place."""
        s = self.sets
        w = 2 * weight
        if self.kind == 'norm':
            idx = np.arange(s.size)
            H[idx, idx] += w
        elif self.kind == 'col':
            idx = s.tx[self.index]
            H[idx, idx] += w
        elif self.kind == 'row':
            idx = s.rx[self.index]
            H[idx, idx] += w
        else:
            blocks = []
            if self.kind in ('Q', 'Q_t'):
                blocks += s.tx
            if self.kind in ('Q', 'Q_r'):
                blocks += s.rx
            for idx in blocks:
                H[np.ix_(idx, idx)] += w
        return H

    def __repr__(self):
        if self.index is None:
            return f'c^T {self.kind} c'
        return f'c^T P_{self.kind},{self.index} c'


@dataclass(frozen=True)
class QuadraticConstraint:
    form: QuadraticForm
    sense: str
    bound: float

    def __post_init__(self):
        assert self.sense in SENSES, self.sense

    @property
    def convex(self):
        """Whether {c : form(c) sense bound} is convex."""
        return self.sense == '<='

    def violation(self, c):
        value = self.form(c)
        if self.sense == '<=':
            return max(value - self.bound, 0.)
        elif self.sense == '>=':
            return max(self.bound - value, 0.)
        return abs(value - self.bound)

    def __repr__(self):
        return f'{self.form!r} {self.sense} {self.bound:g}'


def eval_quadratic_forms(c, sets):
    c = np.asarray(c, dtype=float)
    assert c.shape == (sets.size,), c.shape
    col_sums, row_sums = sets.column_sums(c), sets.row_sums(c)
    return {
        'norm': float(np.dot(c, c)),
        'Q': float(np.sum(col_sums**2) + np.sum(row_sums**2)),
        'Q_r': float(np.sum(row_sums**2)),
        'Q_t': float(np.sum(col_sums**2)),
        'col': sets.column_squares(c),
        'row': sets.row_squares(c),
        'col_sums': col_sums,
        'row_sums': row_sums,
    }


def make_mode(name, M, N, **counts):
    """Instantiate the selection mode plug-in `name` for an N x M array."""
    Mode = dynamic_load(modes, name)
    return Mode({'M': M, 'N': N, **counts})


def constraints_for(mode):
    return mode.constraints()


def is_feasible(c, mode):
    c = np.asarray(c)
    if c.shape != (mode.size,) or not is_binary(c):
        return False
    return mode.is_feasible(c)


def structured_round(z, mode):
    z = np.asarray(z, dtype=float)
    assert z.shape == (mode.size,), z.shape
    return mode.round(z)


def factored_set_membership(c, M, N, k_t, k_r):
    """Membership of a binary c in the four sets whose intersection is the
    factored feasible set: the Q identity, column sums <= k_r, row sums
    <= k_t, and the total count k_t k_r."""
    forms = eval_quadratic_forms(c, MembershipSets(M, N))
    return {
        'in_S1': bool(np.isclose(forms['Q'], k_r * k_t * (k_r + k_t))),
        'in_S2': bool(np.all(forms['col_sums'] <= k_r)),
        'in_S3': bool(np.all(forms['row_sums'] <= k_t)),
        'in_S4': bool(np.isclose(forms['norm'], k_t * k_r)),
    }


def top_indices(values, k):
    """Indices of the k largest values, ties to the lowest index."""
    return np.sort(np.argsort(-np.asarray(values), kind='stable')[:k])
