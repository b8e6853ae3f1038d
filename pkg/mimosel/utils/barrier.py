"""
Primal log-barrier interior-point method for small dense convex programs.

A ConvexProgram maximizes the concave objective

    phi(x) = logdet(A^H diag(c) A + B) + g^T x - w/2 ||c - z||^2 + const

of x = [c, s] (c are the first n_c variables) subject to

    lower <= x <= upper                      (infinite bounds allowed)
    q_k(c) + a_k^T x <= b_k                  (q_k a PSD quadratic form or 0)
    E x = e                                  (affine equalities)

The barrier subproblems are solved by Newton's method with backtracking
line search; the equalities are handled by block elimination of the KKT
system. A phase-I program finds a strictly feasible start when the
suggested one is not. The returned point is certified by the duality
measure m / t, m being the number of inequalities.
"""

from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import List, Optional
import logging
import numpy as np
import scipy.linalg

default_conf = {
    'tolerance': 1e-8,  # duality measure m / t at exit
    't_initial': 1.,
    'mu': 10.,  # barrier growth
    'newton_tolerance': 1e-10,  # on half the squared Newton decrement
    'max_newton_iterations': 200,
    'max_outer_iterations': 60,
    'alpha': 0.25,
    'beta': 0.5,
}


class InfeasibleProgram(ValueError):
    pass


class SolverNotConverged(RuntimeError):
    pass


@dataclass
class ConvexRow:
    """form(c) + linear^T x <= bound; form is None for affine rows."""
    linear: np.ndarray
    bound: float
    form: Optional[object] = None

    def value(self, x, n_c):
        v = float(self.linear @ x) - self.bound
        if self.form is not None:
            v += self.form(x[:n_c])
        return v

    def gradient(self, x, n_c):
        g = np.array(self.linear, dtype=float)
        if self.form is not None:
            g[:n_c] += self.form.gradient(x[:n_c])
        return g


@dataclass
class ConvexProgram:
    n_c: int
    lower: np.ndarray
    upper: np.ndarray
    linear: np.ndarray
    rows: List[ConvexRow] = field(default_factory=list)
    logdet: Optional[object] = None
    prox_weight: float = 0.
    prox_center: Optional[np.ndarray] = None
    constant: float = 0.
    eq_matrix: Optional[np.ndarray] = None
    eq_vector: Optional[np.ndarray] = None
    start: Optional[np.ndarray] = None

    @property
    def n(self):
        return self.lower.size

    @property
    def num_inequalities(self):
        return (len(self.rows) + np.count_nonzero(np.isfinite(self.lower))
                + np.count_nonzero(np.isfinite(self.upper)))

    def objective(self, x):
        c = x[:self.n_c]
        value = self.constant + float(self.linear @ x)
        if self.logdet is not None:
            value += self.logdet(c)
        if self.prox_weight:
            value -= self.prox_weight / 2 * np.sum((c - self.prox_center)**2)
        return value

    def objective_derivatives(self, x):
        n, n_c = self.n, self.n_c
        c = x[:n_c]
        value = self.constant + float(self.linear @ x)
        grad = np.array(self.linear, dtype=float)
        hess = np.zeros((n, n))
        if self.logdet is not None:
            v, g, h = self.logdet.derivatives(c)
            value += v
            grad[:n_c] += g
            hess[:n_c, :n_c] += h
        if self.prox_weight:
            d = c - self.prox_center
            value -= self.prox_weight / 2 * np.sum(d**2)
            grad[:n_c] -= self.prox_weight * d
            hess[np.arange(n_c), np.arange(n_c)] -= self.prox_weight
        return value, grad, hess

    def row_values(self, x):
        return np.array([r.value(x, self.n_c) for r in self.rows])

    def is_strictly_feasible(self, x):
        if np.any(x <= self.lower) or np.any(x >= self.upper):
            return False
        return bool(np.all(self.row_values(x) < 0)) if self.rows else True


def _barrier(program, x, t):
    """Value, gradient and Hessian of -t phi(x) - sum log(-h_k(x)) - box
    logs. Returns None outside the domain."""
    lower, upper = program.lower, program.upper
    if np.any(x <= lower) or np.any(x >= upper):
        return None
    h = program.row_values(x) if program.rows else np.zeros(0)
    if np.any(h >= 0):
        return None
    try:
        value, grad, hess = program.objective_derivatives(x)
    except np.linalg.LinAlgError:
        return None
    F, g, H = -t * value, -t * grad, -t * hess

    lo, hi = np.isfinite(lower), np.isfinite(upper)
    d_lo, d_hi = x[lo] - lower[lo], upper[hi] - x[hi]
    F -= np.sum(np.log(d_lo)) + np.sum(np.log(d_hi))
    g[lo] -= 1 / d_lo
    g[hi] += 1 / d_hi
    diag = np.zeros(program.n)
    diag[lo] += 1 / d_lo**2
    diag[hi] += 1 / d_hi**2
    H[np.arange(program.n), np.arange(program.n)] += diag

    n_c = program.n_c
    for row, h_k in zip(program.rows, h):
        grad_k = row.gradient(x, n_c)
        F -= np.log(-h_k)
        g += grad_k / -h_k
        H += np.outer(grad_k, grad_k) / h_k**2
        if row.form is not None:
            row.form.add_hessian(H, 1 / -h_k)
    return F, g, H


def _barrier_value(program, x, t):
    lower, upper = program.lower, program.upper
    if np.any(x <= lower) or np.any(x >= upper):
        return np.inf
    h = program.row_values(x) if program.rows else np.zeros(0)
    if np.any(h >= 0):
        return np.inf
    try:
        value = program.objective(x)
    except np.linalg.LinAlgError:
        return np.inf
    lo, hi = np.isfinite(lower), np.isfinite(upper)
    return (-t * value - np.sum(np.log(-h))
            - np.sum(np.log(x[lo] - lower[lo]))
            - np.sum(np.log(upper[hi] - x[hi])))


def _newton_step(g, H, E):
    """Newton step of min F subject to E dx = 0."""
    try:
        factor = scipy.linalg.cho_factor(H, lower=True)
    except np.linalg.LinAlgError:
        ridge = 1e-12 * max(1., np.trace(H) / len(H))
        factor = scipy.linalg.cho_factor(
            H + ridge * np.eye(len(H)), lower=True)
    dx = -scipy.linalg.cho_solve(factor, g)
    if E is not None and len(E):
        HiE = scipy.linalg.cho_solve(factor, E.T)
        w = np.linalg.solve(E @ HiE, E @ dx)
        dx -= HiE @ w
    return dx


def _centering(program, x, t, conf, stop=None):
    E = program.eq_matrix
    for _ in range(conf.max_newton_iterations):
        F, g, H = _barrier(program, x, t)
        dx = _newton_step(g, H, E)
        decrement = -float(g @ dx)
        if decrement / 2 <= conf.newton_tolerance:
            return x
        step, slope = 1., float(g @ dx)
        while _barrier_value(program, x + step * dx, t) \
                > F + conf.alpha * step * slope:
            step *= conf.beta
            if step < 1e-16:
                # no decrease possible at working precision
                return x
        x = x + step * dx
        if stop is not None and stop(x):
            return x
    logging.warning(f'Newton centering did not converge at t={t:.3g}.')
    return x


def _path_following(program, x, conf, stop=None):
    t = conf.t_initial
    m = max(program.num_inequalities, 1)
    for _ in range(conf.max_outer_iterations):
        x = _centering(program, x, t, conf, stop)
        if stop is not None and stop(x):
            return x, 0.
        if m / t < conf.tolerance:
            return x, m / t
        t *= conf.mu
    logging.warning(f'Barrier method stopped with duality measure {m / t:.3g}.')
    raise SolverNotConverged(
        f'Duality measure {m / t:.3g} above tolerance {conf.tolerance:.3g} '
        f'after {conf.max_outer_iterations} barrier iterations.')


def _interior_start(program):
    lower, upper = program.lower, program.upper
    x = (np.zeros(program.n) if program.start is None
         else np.array(program.start, dtype=float))
    lo, hi = np.isfinite(lower), np.isfinite(upper)
    both = lo & hi
    margin = np.where(both, 1e-3 * (upper - lower), 1.)
    x[lo] = np.maximum(x[lo], (lower + margin)[lo])
    x[hi] = np.minimum(x[hi], (upper - margin)[hi])
    if program.eq_matrix is not None and len(program.eq_matrix):
        E, e = program.eq_matrix, program.eq_vector
        x = x + np.linalg.lstsq(E, e - E @ x, rcond=None)[0]
        if not np.allclose(E @ x, e, atol=1e-9):
            raise InfeasibleProgram('Inconsistent affine equalities.')
    return x


def _phase_one(program, x, conf):
    """Strictly feasible point of the program, from the start x that
    satisfies the equalities."""
    n, n_c = program.n, program.n_c
    rows = [ConvexRow(np.append(r.linear, -1.), r.bound, r.form)
            for r in program.rows]
    for i in range(n):
        for bound, sign in ((program.lower[i], -1.), (program.upper[i], 1.)):
            if np.isfinite(bound):
                a = np.zeros(n + 1)
                a[i], a[-1] = sign, -1.
                rows.append(ConvexRow(a, sign * bound))
    violation = max(r.value(np.append(x, 0.), n_c) for r in rows)
    E = program.eq_matrix
    aux = ConvexProgram(
        n_c=n_c,
        lower=np.full(n + 1, -np.inf),
        upper=np.full(n + 1, np.inf),
        linear=np.append(np.zeros(n), -1.),
        rows=rows,
        eq_matrix=None if E is None else np.hstack([E, np.zeros((len(E), 1))]),
        eq_vector=program.eq_vector)
    aux.lower[-1] = -1.
    y = np.append(x, violation + 1.)

    def feasible(y):
        return y[-1] < 0 and program.is_strictly_feasible(y[:-1])

    try:
        y, _ = _path_following(aux, y, conf, stop=feasible)
    except SolverNotConverged:
        pass
    if not feasible(y):
        raise InfeasibleProgram(
            f'No strictly feasible point, max violation {y[-1]:.3g}.')
    return y[:-1]


def solve(program, conf=None):
    """Maximize the program, returning the optimal x and the certified
    duality measure."""
    conf = SimpleNamespace(**{**default_conf, **(conf or {})})
    if np.any(program.lower > program.upper):
        raise InfeasibleProgram('Conflicting box bounds.')
    if np.any(program.lower == program.upper):
        raise InfeasibleProgram('Box bounds with an empty interior.')
    x = _interior_start(program)
    if not program.is_strictly_feasible(x):
        x = _phase_one(program, x, conf)
    try:
        program.objective(x)
    except np.linalg.LinAlgError:
        raise InfeasibleProgram('Start point outside the objective domain.')
    return _path_following(program, x, conf)
