"""
Uniform linear arrays of a collocated MIMO radar.

Angles are given in degrees and converted to radians internally. The
virtual array is indexed as c = vec(C) with C of shape N x M (rows are
receivers, columns are transmitters): flat index i is the pair of
receiver n = i mod N and transmitter m = i div N, matching a_t kron a_r.
"""

from dataclasses import dataclass
import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """M transmitters spaced d_t and N receivers spaced d_r wavelengths."""
    M: int
    N: int
    d_t: float
    d_r: float = 0.5

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N:
            raise ValueError(f'Element counts must be integers: {self}.')
        if self.M < 1 or self.N < 1:
            raise ValueError(f'Need at least one transmitter and receiver, '
                             f'got M={self.M}, N={self.N}.')
        if not (np.isfinite(self.d_t) and np.isfinite(self.d_r)) \
                or self.d_t <= 0 or self.d_r <= 0:
            raise ValueError(f'Spacings must be positive, got '
                             f'd_t={self.d_t}, d_r={self.d_r}.')

    @classmethod
    def non_overlapping(cls, M, N, d_r=0.5):
        """Transmitters N*d_r apart: the virtual array is a filled ULA."""
        return cls(M, N, N * d_r, d_r)

    @property
    def size(self):
        return self.M * self.N

    @property
    def is_non_overlapping(self):
        return bool(np.isclose(self.d_t, self.N * self.d_r))


def ula_steering(num, spacing, theta):
    """exp(j 2 pi m d sin(theta)) for m = 0..num-1, theta in degrees."""
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError(f'Angle must be finite, got {theta}.')
    phase = 2 * np.pi * spacing * np.sin(np.deg2rad(theta))
    return np.exp(1j * phase * np.arange(num))


def steering_tx(geom, theta):
    return ula_steering(geom.M, geom.d_t, theta)


def steering_rx(geom, theta):
    return ula_steering(geom.N, geom.d_r, theta)


def steering_virtual(geom, theta_t, theta_r=None):
    """Virtual steering vector a_t(theta_t) kron a_r(theta_r), length MN."""
    if theta_r is None:
        theta_r = theta_t
    return np.kron(steering_tx(geom, theta_t), steering_rx(geom, theta_r))
