"""Fractional Gaussian initial data and its two finite-N approximations.

Every coefficient is keyed by (seed, channel, |n|) through a counter-based
Philox stream, so truncations at different N share one realization and are
nested: the data at N agrees with the data at N' > N on all |n| <= N.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from fnlw.params import Kind, ModelParams
from fnlw.spectrum import CoeffVector, Grid, forward_transform

logger = logging.getLogger(__name__)

Channel = Literal["g", "h"]

_CHANNEL_INDEX: dict[Channel, int] = {"g": 0, "h": 1}
_UNIT_53 = 2.0**-53

# Bernoulli numbers B_2, B_4, ... for the Euler-Maclaurin tail.
_BERNOULLI = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0)
_ZETA_TERMS = 64


@dataclass(frozen=True)
class ModePair:
    """Gaussian draws of mode n for the position (g) and velocity (h) channels."""

    g: complex
    h: complex
    n: int


@dataclass(frozen=True)
class InitialData:
    u0: CoeffVector
    v0: CoeffVector
    params: ModelParams
    kind: Kind


def _philox_key(seed: int, channel: Channel) -> int:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    return seed | (_CHANNEL_INDEX[channel] << 64)


def gaussian_modes(seed: int, channel: Channel, count: int) -> CoeffVector:
    """Draws for modes n = 0 .. count-1 of one channel.

    Mode n consumes raw outputs 2n and 2n+1 of the Philox stream keyed by
    (seed, channel), mapped to normals by Box-Muller. Mode 0 is a real
    standard normal; n > 0 is complex with E|g|^2 = 1.
    """

    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if count == 0:
        return np.zeros(0, dtype=np.complex128)

    raw = np.random.Philox(key=_philox_key(seed, channel)).random_raw(2 * count).reshape(count, 2)
    u1 = ((raw[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) * _UNIT_53
    u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) * _UNIT_53

    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    x = radius * np.cos(angle)
    y = radius * np.sin(angle)

    values = (x + 1j * y) / math.sqrt(2.0)
    values[0] = x[0]
    return values


def mode_pair(seed: int, n: int) -> ModePair:
    if n < 0:
        raise ValueError(f"mode index must be non-negative, got {n}")
    g = gaussian_modes(seed, "g", n + 1)[n]
    h = gaussian_modes(seed, "h", n + 1)[n]
    return ModePair(g=complex(g), h=complex(h), n=n)


def _hermitian_field(positive: CoeffVector, M: int) -> CoeffVector:
    """Place coefficients for n = 0 .. K on a grid and mirror them to -n."""
    K = positive.shape[0] - 1
    c = np.zeros(M, dtype=np.complex128)
    c[: K + 1] = positive
    if K > 0:
        c[M - K :] = np.conj(positive[1:][::-1])
    return c


def _bracket(count: int) -> np.ndarray:
    k = 2.0 * np.pi * np.arange(count, dtype=np.float64)
    return np.sqrt(k * k + 1.0)


def truncated_coefficients(
    seed: int, alpha: float, beta: float, N: int
) -> tuple[CoeffVector, CoeffVector]:
    """Non-negative-mode coefficients g(n)/<n>^alpha and h(n)/<n>^(alpha-beta), n = 0 .. N."""
    bracket = _bracket(N + 1)
    u = gaussian_modes(seed, "g", N + 1) * bracket**-alpha
    v = gaussian_modes(seed, "h", N + 1) * bracket ** -(alpha - beta)
    return u, v


def build_truncated(params: ModelParams) -> InitialData:
    grid = Grid(params.M)
    if params.N > grid.M // 2 - 1:
        raise ValueError(f"N={params.N} too large for grid M={grid.M}")

    u, v = truncated_coefficients(params.seed, params.alpha, params.beta, params.N)
    return InitialData(
        u0=_hermitian_field(u, grid.M),
        v0=_hermitian_field(v, grid.M),
        params=params,
        kind="truncated",
    )


def bump_amplitude(N: int, s: float) -> float:
    return N ** (0.5 - s) / math.log(N)


def bump_coefficients(N: int, s: float, a: float, grid: Grid) -> CoeffVector:
    """Coefficients of p(x) = N^(1/2-s)/log N exp(-(aN(x - 1/2))^2) sampled on the grid.

    The samples are treated as periodic; the value at the boundary is
    exp(-(aN/2)^2) times the peak. The Nyquist mode is dropped.
    """

    if N < 2:
        raise ValueError(f"bump needs N >= 2 (log N > 0), got N={N}")
    if a <= 0:
        raise ValueError(f"bump width parameter a must be positive, got {a}")
    if a * N > grid.M:
        raise ValueError(f"bump under-resolved: a*N={a * N:g} exceeds M={grid.M}")

    x = grid.points()
    samples = bump_amplitude(N, s) * np.exp(-((a * N * (x - 0.5)) ** 2))
    c = forward_transform(samples)
    c[grid.nyquist] = 0.0
    return c


def build_pathological(params: ModelParams) -> InitialData:
    base = build_truncated(params)
    bump = bump_coefficients(params.N, params.sobolev, params.a, Grid(params.M))
    return InitialData(u0=base.u0 + bump, v0=base.v0, params=params, kind="pathological")


def build_initial_data(params: ModelParams) -> InitialData:
    if params.kind == "pathological":
        return build_pathological(params)
    return build_truncated(params)


def zeta_tail(x: float, K: int) -> float:
    """sum_{n >= K} n^(-x) by Euler-Maclaurin: integral, half term and Bernoulli corrections."""
    if x <= 1:
        raise ValueError(f"zeta tail diverges for x <= 1, got {x}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")

    total = K ** (1.0 - x) / (x - 1.0) + 0.5 * K**-x
    rising = x
    factorial = 2.0
    for j, bernoulli in enumerate(_BERNOULLI, start=1):
        # rising = x (x+1) ... (x+2j-2); factorial = (2j)!
        total += bernoulli / factorial * rising * K ** (-x - 2 * j + 1)
        rising *= (x + 2 * j - 1) * (x + 2 * j)
        factorial *= (2 * j + 1) * (2 * j + 2)
    return total


def riemann_zeta(x: float) -> float:
    if x <= 1:
        raise ValueError(f"riemann_zeta needs x > 1, got {x}")
    head = math.fsum(n**-x for n in range(1, _ZETA_TERMS))
    return head + zeta_tail(x, _ZETA_TERMS)
