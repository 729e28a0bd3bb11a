"""Sobolev pair norms, the discrete Hamiltonian and conservation diagnostics."""

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from fnlw.params import Kind, ModelParams, sobolev_index
from fnlw.spectrum import CoeffVector, Grid, inverse_transform, omega, resample

if TYPE_CHECKING:
    from fnlw.integrator import SpectralState

__all__ = [
    "RunRecord",
    "discrete_hamiltonian",
    "pair_norm",
    "pair_norm_of",
    "relative_energy_error",
    "sobolev_index",
    "sup_norm",
    "trajectory_difference",
]

logger = logging.getLogger(__name__)

# Snapshot times of two records must agree to this relative tolerance.
_TIME_RTOL = 1e-12


def _weighted_norm(c: CoeffVector, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * (c.real**2 + c.imag**2))))


def pair_norm_of(u: CoeffVector, v: CoeffVector, s: float, beta: float) -> float:
    bracket = Grid.of(u).bracket()
    velocity = _weighted_norm(v, bracket ** (2.0 * s - 2.0 * beta))
    position = _weighted_norm(u, bracket ** (2.0 * s))
    return velocity + position


def pair_norm(state: "SpectralState", s: float, beta: float) -> float:
    """sqrt(sum <n>^(2s-2beta) |v(n)|^2) + sqrt(sum <n>^(2s) |u(n)|^2).

    The sum of the two roots, not the root of the sum.
    """
    return pair_norm_of(state.u, state.v, s, beta)


def discrete_hamiltonian(state: "SpectralState", beta: float, *, nonlinear: bool = True) -> float:
    """sum |v(n)|^2 + sum |2 pi n|^(2 beta) |u(n)|^2 + (1/2M) sum_q u(x_q)^4.

    The quartic term is a plain Riemann sum on the M-point grid; it is left
    out for linear-only runs, whose energy has no quartic part.
    """

    u, v = state.u, state.v
    M = Grid.of(u).M
    w = omega(M, beta)
    energy = float(np.sum(v.real**2 + v.imag**2)) + float(np.sum(w * w * (u.real**2 + u.imag**2)))
    if nonlinear:
        samples = inverse_transform(u)
        energy += float(np.sum(samples**4)) / (2.0 * M)
    return energy


def relative_energy_error(record: "RunRecord | Sequence[float] | np.ndarray") -> float:
    """e_inf = max_p |H[p]/H[0] - 1|; undefined (ValueError) when H[0] = 0."""
    H = np.asarray(record.H if isinstance(record, RunRecord) else record, dtype=np.float64)
    if H.size == 0:
        raise ValueError("no Hamiltonian samples")
    if H[0] == 0.0:
        raise ValueError("relative energy error undefined: initial Hamiltonian is 0")
    return float(np.max(np.abs(H / H[0] - 1.0)))


def sup_norm(record: "RunRecord | Sequence[float] | np.ndarray") -> float:
    """Max of the pair norm over snapshots, standing in for the sup over [0, t_s]."""
    S = np.asarray(record.S if isinstance(record, RunRecord) else record, dtype=np.float64)
    if S.size == 0:
        raise ValueError("no pair-norm samples")
    return float(np.max(S))


@dataclass
class RunRecord:
    params: ModelParams
    kind: Kind
    tau: float
    steps: int
    times: np.ndarray
    S: np.ndarray
    H: np.ndarray
    states: list["SpectralState"] | None = field(default=None, repr=False)

    @property
    def S_sup(self) -> float:
        return sup_norm(self.S)

    @property
    def e_inf(self) -> float:
        try:
            return relative_energy_error(self.H)
        except ValueError:
            return math.nan

    def release_states(self) -> None:
        self.states = None


def trajectory_difference(a: RunRecord, b: RunRecord, s: float, beta: float) -> float:
    """max over snapshots of the pair norm of the state difference.

    Records may live on different grids; coefficients are aligned by mode
    index and modes missing from one side count as zero.
    """

    if a.states is None or b.states is None:
        raise ValueError("trajectory difference needs records with stored states")
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=_TIME_RTOL, atol=0.0):
        raise ValueError("records have mismatched snapshot grids")

    M = max(a.states[0].M, b.states[0].M)
    largest = 0.0
    for left, right in zip(a.states, b.states, strict=True):
        du = resample(left.u, M) - resample(right.u, M)
        dv = resample(left.v, M) - resample(right.v, M)
        largest = max(largest, pair_norm_of(du, dv, s, beta))
    return largest

