"""
Sequential convex programming with an exact penalty for the relaxed
selection problems.

The objective f = f1 - f2 is a difference of the concave log-determinants
of the signal and interference blocks. Each outer iteration linearizes f2
at the previous iterate and splits every quadratic equality e(c) = b into
its convex side e(c) <= b + s and its linearized side e_lin(c) >= b - s,
with a slack s >= 0 penalized by psi. The nonconvex lower bound of the
hybrid mode is linearized the same way. The resulting surrogate minorizes
the penalized merit f(c) - psi * violation(c) and touches it at the
expansion point, so the merit never decreases.
"""

import argparse
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace
from typing import List
import csv
import logging
import pprint
import numpy as np

from .interference_model import build_model, f_logdet
from .selection import make_mode
from .utils import barrier
from .utils.barrier import ConvexProgram, ConvexRow
from .utils.parsers import parse_scenario

default_conf = {
    'max_outer_iterations': 10,
    'psi': 10.,
    'inner_tolerance': 1e-8,
    't_initial': 1.,
    'mu': 10.,
    'trust_radius': 1.,
    'step_tolerance': 1e-6,
    'variance_floor': 1e-4,
    'warm_start': None,
}


def make_config(conf=None):
    if isinstance(conf, SimpleNamespace):
        conf = vars(conf)
    conf = SimpleNamespace(**{**default_conf, **(conf or {})})
    for key in ['psi', 'inner_tolerance', 't_initial', 'trust_radius',
                'step_tolerance', 'variance_floor']:
        if not getattr(conf, key) > 0:
            raise ValueError(f'Solver setting {key} must be positive, '
                             f'got {getattr(conf, key)}.')
    if conf.mu <= 1:
        raise ValueError(f'Barrier growth must exceed 1, got {conf.mu}.')
    if conf.max_outer_iterations < 1:
        raise ValueError('Need at least one outer iteration.')
    return conf


@dataclass
class RelaxedSolution:
    c_star: np.ndarray
    history: List[np.ndarray]  # outer iterates, the initial point first
    sigma_diag: np.ndarray
    objective: List[float] = field(default_factory=list)  # penalized merit
    surrogate: List[float] = field(default_factory=list)
    max_slack: List[float] = field(default_factory=list)
    step_norm: List[float] = field(default_factory=list)

    @property
    def iterates(self):
        """The SCP solutions, without the initial point."""
        return self.history[1:]


@dataclass
class Surrogate:
    """Convex minorant of the penalized merit around c_prev."""
    program: ConvexProgram
    c_prev: np.ndarray
    constraints: list
    slack_of: dict  # constraint index -> slack variable index
    gradients: dict  # constraint index -> gradient of its form at c_prev

    @property
    def num_slacks(self):
        return len(self.slack_of)

    def linearized(self, i, c):
        """Tangent of constraint i's form at c_prev, evaluated at c."""
        form = self.constraints[i].form
        return form(self.c_prev) + self.gradients[i] @ (c - self.c_prev)

    def slacks_for(self, c):
        """Smallest slacks that make c feasible for the surrogate."""
        s = np.zeros(self.num_slacks)
        for i, j in self.slack_of.items():
            con = self.constraints[i]
            need = con.bound - self.linearized(i, c)
            if con.sense == '==':
                need = max(need, con.form(c) - con.bound)
            s[j] = max(need, 0.)
        return s

    def value(self, c):
        c = np.asarray(c, dtype=float)
        return self.program.objective(np.concatenate([c, self.slacks_for(c)]))


def penalized_merit(model, constraints, c, psi):
    violation = sum(con.violation(c) for con in constraints if not con.convex)
    return f_logdet(model, c) - psi * violation


def build_surrogate(model, mode, c_prev, conf=None):
    conf = make_config(conf)
    n_c = model.size
    c_prev = np.asarray(c_prev, dtype=float)
    assert c_prev.shape == (n_c,), c_prev.shape
    assert np.all((c_prev >= 0) & (c_prev <= 1)), 'c_prev outside the box'

    constraints = mode.constraints()
    slack_of = {i: j for j, i in enumerate(
        i for i, con in enumerate(constraints) if not con.convex)}
    n = n_c + len(slack_of)

    f2, grad_f2, _ = model.interference_term.derivatives(
        c_prev, hessian=False)
    linear = np.zeros(n)
    linear[:n_c] = -grad_f2
    linear[n_c:] = -conf.psi
    constant = -f2 + float(grad_f2 @ c_prev)

    rows, gradients = [], {}
    for i, con in enumerate(constraints):
        if con.convex:
            rows.append(ConvexRow(np.zeros(n), con.bound, con.form))
            continue
        j = n_c + slack_of[i]
        if con.sense == '==':
            a = np.zeros(n)
            a[j] = -1.
            rows.append(ConvexRow(a, con.bound, con.form))
        # -(e(c_prev) + grad^T (c - c_prev)) - s <= -b
        gradients[i] = grad = con.form.gradient(c_prev)
        a = np.zeros(n)
        a[:n_c] = -grad
        a[j] = -1.
        rows.append(ConvexRow(
            a, con.form(c_prev) - float(grad @ c_prev) - con.bound))

    lower = np.concatenate([np.maximum(0., c_prev - conf.trust_radius),
                            np.zeros(n - n_c)])
    upper = np.concatenate([np.minimum(1., c_prev + conf.trust_radius),
                            np.full(n - n_c, np.inf)])
    program = ConvexProgram(
        n_c=n_c, lower=lower, upper=upper, linear=linear, rows=rows,
        logdet=model.signal_term, constant=constant)
    surrogate = Surrogate(program, c_prev, constraints, slack_of, gradients)
    program.start = np.concatenate(
        [c_prev, surrogate.slacks_for(c_prev) + 1.])
    return surrogate


def solve_convex_subproblem(program, conf=None):
    conf = make_config(conf)
    x, measure = barrier.solve(program, {
        'tolerance': conf.inner_tolerance,
        't_initial': conf.t_initial,
        'mu': conf.mu,
    })
    logging.debug(f'Subproblem solved with duality measure {measure:.2e}.')
    return x


def run_scp(model, mode, conf=None, trace_path=None):
    conf = make_config(conf)
    n_c = model.size
    if conf.warm_start is not None:
        c = np.clip(np.asarray(conf.warm_start, dtype=float), 0., 1.)
    else:
        c = np.full(n_c, mode.k / n_c)
    constraints = mode.constraints()

    solution = RelaxedSolution(c_star=c, history=[c], sigma_diag=None)
    solution.objective.append(
        penalized_merit(model, constraints, c, conf.psi))
    for it in range(conf.max_outer_iterations):
        surrogate = build_surrogate(model, mode, c, conf)
        x = solve_convex_subproblem(surrogate.program, conf)
        c_new = np.clip(x[:n_c], 0., 1.)
        slacks = x[n_c:]

        step = float(np.linalg.norm(c_new - c))
        solution.history.append(c_new)
        solution.surrogate.append(surrogate.program.objective(x))
        solution.objective.append(
            penalized_merit(model, constraints, c_new, conf.psi))
        solution.max_slack.append(float(slacks.max()) if slacks.size else 0.)
        solution.step_norm.append(step)
        logging.debug(
            f'SCP iteration {it}: merit {solution.objective[-1]:.6f}, '
            f'max slack {solution.max_slack[-1]:.2e}, step {step:.2e}')
        c = c_new
        if step < conf.step_tolerance:
            break

    solution.c_star = c
    iterates = np.stack(solution.iterates)
    solution.sigma_diag = np.maximum(
        np.var(iterates, axis=0), conf.variance_floor)
    if trace_path is not None:
        write_trace(solution, trace_path)
    return solution


def write_trace(solution, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(
            ['iteration', 'objective', 'surrogate', 'max_slack', 'step_norm'])
        for i in range(len(solution.surrogate)):
            writer.writerow([
                i + 1, f'{solution.objective[i + 1]:.6f}',
                f'{solution.surrogate[i]:.6f}',
                f'{solution.max_slack[i]:.6e}',
                f'{solution.step_norm[i]:.6e}'])


def main(scenario, mode, counts, theta, trace, conf=None):
    conf = {**default_conf, **(conf or {})}
    logging.info('Solving the relaxed selection problem with configuration:'
                 f'\n{pprint.pformat(conf)}')
    scenario = parse_scenario(scenario)
    model = build_model(scenario, theta)
    geom = model.geometry
    mode = make_mode(mode, geom.M, geom.N, **counts)
    solution = run_scp(model, mode, conf, trace_path=trace)
    logging.info(f'Relaxed {mode.label} at {theta} deg: merit '
                 f'{solution.objective[-1]:.6f} after '
                 f'{len(solution.iterates)} iterations.')
    logging.info(f'Wrote the solver trace to {trace}.')
    return solution


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
    parser.add_argument('--psi', type=float, default=default_conf['psi'])
    parser.add_argument('--scp-iters', type=int,
                        default=default_conf['max_outer_iterations'])
    parser.add_argument('--trace', type=Path, required=True)
    args = parser.parse_args()
    counts = {k: getattr(args, k) for k in ['k', 'kt', 'kr', 'km']
              if getattr(args, k) is not None}
    main(args.scenario, args.mode, counts, args.theta, args.trace,
         {'psi': args.psi, 'max_outer_iterations': args.scp_iters})
