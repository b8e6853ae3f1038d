"""
Analytic interference-plus-noise model of the virtual array.

Clutter patches and jammers are columns of A_jc with powers p, the noise
is white with power sigma_n2, so that the full covariance reads

    R = A_jc diag(p) A_jc^H + sigma_n2 I.

With B_jc = sigma_n2 diag(p)^-1, A_s = [a_s, A_jc] and B_s = diag(0, B_jc)
the output SINR of the MVDR beamformer on the sub-array selected by a
binary c factors as (sigma_s2 / sigma_n2) h(c) with

    h(c) = det(A_s^H diag(c) A_s + B_s) / det(A_jc^H diag(c) A_jc + B_jc),

and f(c) = log h(c) is the objective of the selection problems.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Tuple
import numpy as np
import scipy.linalg

from .array_model import ArrayGeometry, steering_rx, steering_virtual
from .utils.tools import db_to_linear, linear_to_db

JAMMER_MODELS = ('barrage', 'coherent')


@dataclass(frozen=True)
class Jammer:
    theta: float  # degrees
    power: float  # dBW


@dataclass(frozen=True)
class Clutter:
    rank: int = 0
    span: Tuple[float, float] = (0., 90.)  # degrees, inclusive
    cnr: float = 0.  # total clutter-to-noise ratio in dB


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry
    theta_s: float = 0.
    target_power: float = 0.  # dBW
    jammers: Tuple[Jammer, ...] = ()
    jammer_model: str = 'barrage'
    clutter: Clutter = field(default_factory=Clutter)
    noise_power: float = 0.  # dBW
    require_interference: bool = False

    def __post_init__(self):
        if self.jammer_model not in JAMMER_MODELS:
            raise ValueError(f'Unknown jammer model {self.jammer_model}, '
                             f'expected one of {JAMMER_MODELS}.')
        if self.clutter.rank < 0:
            raise ValueError(f'Negative clutter rank {self.clutter.rank}.')
        powers = [self.target_power, self.noise_power, self.clutter.cnr]
        powers += [j.power for j in self.jammers]
        if not np.all(np.isfinite(powers)):
            raise ValueError('All powers must be finite.')

    def with_target(self, theta_s):
        return replace(self, theta_s=float(theta_s))


class LogDet:
    """The concave map c -> logdet(A^H diag(c) A + B) and its derivatives.

    Both the value and the solves go through a Cholesky factorization;
    its failure (numpy.linalg.LinAlgError) signals that the argument is
    not positive definite.
    """
    def __init__(self, A, B):
        self.A = np.asarray(A, dtype=complex)
        self.B = np.asarray(B)
        self.AH = self.A.conj().T
        assert self.B.shape == (self.A.shape[1],) * 2, (self.A.shape,
                                                         self.B.shape)

    def matrix(self, c):
        X = (self.AH * np.asarray(c, dtype=float)) @ self.A + self.B
        return (X + X.conj().T) / 2

    def _factor(self, c):
        return scipy.linalg.cholesky(self.matrix(c), lower=True)

    def __call__(self, c):
        if self.A.shape[1] == 0:
            return 0.
        L = self._factor(c)
        return 2 * np.sum(np.log(np.diag(L).real))

    def derivatives(self, c, hessian=True):
        """Value, gradient r_i^H X^-1 r_i and Hessian -|r_i^H X^-1 r_j|^2."""
        n = self.A.shape[0]
        if self.A.shape[1] == 0:
            return 0., np.zeros(n), (np.zeros((n, n)) if hessian else None)
        L = self._factor(c)
        value = 2 * np.sum(np.log(np.diag(L).real))
        V = scipy.linalg.solve_triangular(L, self.AH, lower=True)
        grad = np.sum(np.abs(V)**2, axis=0)
        if not hessian:
            return value, grad, None
        G = V.conj().T @ V
        return value, grad, -np.abs(G)**2


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    geometry: ArrayGeometry
    theta_s: float
    a_s: np.ndarray  # (MN,)
    A_jc: np.ndarray  # (MN, n)
    powers: np.ndarray  # (n,) linear powers of the columns of A_jc
    sigma_s2: float
    sigma_n2: float
    n_clutter: int = 0  # the first n_clutter columns are clutter patches

    def __post_init__(self):
        assert self.A_jc.shape == (self.geometry.size, self.powers.size)
        if np.any(self.powers <= 0):
            raise ValueError('Interference powers must be strictly positive.')
        for a in (self.a_s, self.A_jc, self.powers):
            a.setflags(write=False)

    @property
    def size(self):
        return self.geometry.size

    @property
    def A_s(self):
        return np.column_stack([self.a_s, self.A_jc])

    @property
    def B_jc(self):
        return np.diag(self.sigma_n2 / self.powers)

    @property
    def B_s(self):
        n = self.powers.size
        B = np.zeros((n + 1, n + 1))
        B[1:, 1:] = self.B_jc
        return B

    @cached_property
    def signal_term(self):
        return LogDet(self.A_s, self.B_s)

    @cached_property
    def interference_term(self):
        return LogDet(self.A_jc, self.B_jc)


def build_model(scenario, theta_s=None):
    geom = scenario.geometry
    theta_s = scenario.theta_s if theta_s is None else float(theta_s)
    sigma_n2 = float(db_to_linear(scenario.noise_power))

    columns, powers = [], []
    clutter = scenario.clutter
    if clutter.rank > 0:
        patch_power = db_to_linear(clutter.cnr) * sigma_n2 / clutter.rank
        for theta in np.linspace(*clutter.span, clutter.rank):
            columns.append(steering_virtual(geom, theta, theta))
            powers.append(patch_power)
    n_clutter = len(columns)

    for jammer in scenario.jammers:
        a_r = steering_rx(geom, jammer.theta)
        p = float(db_to_linear(jammer.power))
        if scenario.jammer_model == 'barrage':
            # one independent jamming waveform per matched filter
            for e_m in np.eye(geom.M):
                columns.append(np.kron(e_m, a_r))
                powers.append(p)
        else:
            columns.append(np.kron(np.ones(geom.M), a_r))
            powers.append(p)

    if scenario.require_interference and not columns:
        raise ValueError('The scenario has neither clutter nor jammers.')
    if columns:
        A_jc = np.stack(columns, axis=1)
    else:
        A_jc = np.zeros((geom.size, 0), dtype=complex)

    return CovarianceModel(
        geometry=geom,
        theta_s=theta_s,
        a_s=steering_virtual(geom, theta_s, theta_s),
        A_jc=A_jc,
        powers=np.array(powers, dtype=float),
        sigma_s2=float(db_to_linear(scenario.target_power)),
        sigma_n2=sigma_n2,
        n_clutter=n_clutter)


def _selected(model, c):
    if c is None:
        return np.arange(model.size)
    c = np.asarray(c)
    assert c.shape == (model.size,), c.shape
    return np.flatnonzero(c)


def covariance_full(model, c=None):
    """Interference-plus-noise covariance, restricted to the selection c."""
    idx = _selected(model, c)
    A = model.A_jc[idx]
    R = (A * model.powers) @ A.conj().T
    R += model.sigma_n2 * np.eye(len(idx))
    return R


def mvdr_weights(R, a_s):
    """w = R^-1 a_s / (a_s^H R^-1 a_s), raises LinAlgError if R is not PD."""
    x = scipy.linalg.cho_solve(scipy.linalg.cho_factor(R, lower=True), a_s)
    return x / np.vdot(a_s, x)


def beamformer_sinr(R, w, a_s, sigma_s2):
    """Linear output SINR of the weights w."""
    signal = sigma_s2 * np.abs(np.vdot(w, a_s))**2
    return signal / np.vdot(w, R @ w).real


def sinr_linear(model, c=None):
    idx = _selected(model, c)
    if len(idx) == 0:
        raise ValueError('The selection is empty.')
    R = covariance_full(model, c)
    L = scipy.linalg.cholesky(R, lower=True)
    y = scipy.linalg.solve_triangular(L, model.a_s[idx], lower=True)
    return model.sigma_s2 * np.sum(np.abs(y)**2)


def sinr_direct(model, c=None):
    """Output SINR in dB of the MVDR beamformer on the selected sub-array."""
    return float(linear_to_db(sinr_linear(model, c)))


def f_logdet(model, c):
    c = np.asarray(c, dtype=float)
    return model.signal_term(c) - model.interference_term(c)


def h_ratio(model, c):
    return float(np.exp(f_logdet(model, c)))


def grad_f(model, c):
    c = np.asarray(c, dtype=float)
    _, g1, _ = model.signal_term.derivatives(c, hessian=False)
    _, g2, _ = model.interference_term.derivatives(c, hessian=False)
    return g1 - g2


def apply_power_adjustment(model, k_t, M=None, scale_clutter=False):
    """Share the transmit power among k_t transmitters instead of M."""
    M = model.geometry.M if M is None else M
    if not 1 <= k_t <= M:
        raise ValueError(f'Need 1 <= k_t <= M, got k_t={k_t}, M={M}.')
    factor = M / k_t
    powers = np.array(model.powers)
    if scale_clutter:
        powers[:model.n_clutter] *= factor
    return replace(model, sigma_s2=model.sigma_s2 * factor, powers=powers)
