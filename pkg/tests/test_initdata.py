import math

import numpy as np
import pytest

from fnlw.initdata import (
    build_initial_data,
    build_pathological,
    build_truncated,
    bump_amplitude,
    bump_coefficients,
    gaussian_modes,
    mode_pair,
    riemann_zeta,
    truncated_coefficients,
    zeta_tail,
)
from fnlw.params import ModelParams
from fnlw.spectrum import Grid, inverse_transform, is_hermitian, sobolev_norm


def _params(**overrides) -> ModelParams:
    values = {"alpha": 0.6, "beta": 1 / 3, "N": 8, "M": 64, "seed": 42, **overrides}
    return ModelParams(**values)


def test_mode_pair_is_deterministic() -> None:
    assert mode_pair(7, 5) == mode_pair(7, 5)
    assert mode_pair(7, 5) != mode_pair(8, 5)


def test_zero_mode_is_real() -> None:
    pair = mode_pair(123, 0)
    assert pair.g.imag == 0.0
    assert pair.h.imag == 0.0


def test_draws_are_nested_and_channels_differ() -> None:
    short = gaussian_modes(3, "g", 10)
    long = gaussian_modes(3, "g", 1000)
    np.testing.assert_allclose(short, long[:10], rtol=1e-14)
    assert not np.array_equal(short, gaussian_modes(3, "h", 10))


def test_second_moment() -> None:
    draws = gaussian_modes(2024, "g", 400_001)[1:]
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=1e-2)
    assert abs(np.mean(draws)) < 1e-2


def test_gaussian_modes_rejects_bad_seed() -> None:
    with pytest.raises(ValueError, match="seed"):
        gaussian_modes(2**64, "g", 4)


def test_truncated_at_zero_keeps_only_zero_mode() -> None:
    data = build_truncated(_params(N=0))
    g, h = mode_pair(42, 0).g, mode_pair(42, 0).h
    assert data.u0[0] == pytest.approx(g)
    assert data.v0[0] == pytest.approx(h)
    assert np.count_nonzero(data.u0) == 1
    assert np.count_nonzero(data.v0) == 1


def test_truncated_norm_matches_direct_sum() -> None:
    data = build_truncated(_params())
    g = gaussian_modes(42, "g", 9)
    bracket = np.sqrt((2 * np.pi * np.arange(9)) ** 2 + 1)
    # |n| <= 8 counts every n > 0 twice.
    weights = np.where(np.arange(9) == 0, 1.0, 2.0)
    direct = math.sqrt(float(np.sum(weights * np.abs(g) ** 2 / bracket**1.2)))
    assert sobolev_norm(data.u0, 0.0) == pytest.approx(direct, rel=1e-12)
    assert is_hermitian(data.u0)
    assert is_hermitian(data.v0)


def test_truncations_are_nested() -> None:
    coarse = build_truncated(_params(N=8))
    fine = build_truncated(_params(N=16))
    modes = Grid(64).modes()
    u = np.where(np.abs(modes) <= 8, fine.u0, 0.0)
    v = np.where(np.abs(modes) <= 8, fine.v0, 0.0)
    np.testing.assert_allclose(u, coarse.u0, rtol=1e-14)
    np.testing.assert_allclose(v, coarse.v0, rtol=1e-14)


def test_truncated_coefficients_decay() -> None:
    u, v = truncated_coefficients(0, 0.6, 1 / 3, 4)
    g = gaussian_modes(0, "g", 5)
    h = gaussian_modes(0, "h", 5)
    bracket = math.sqrt(4 * math.pi**2 * 9 + 1)
    assert u[3] == pytest.approx(g[3] * bracket**-0.6)
    assert v[3] == pytest.approx(h[3] * bracket ** -(0.6 - 1 / 3))


def test_bump_peak_value() -> None:
    assert bump_amplitude(16, 1 / 30) == pytest.approx(16 ** (0.5 - 1 / 30) / math.log(16), rel=1e-15)
    assert bump_amplitude(16, 1 / 30) == pytest.approx(1.31534, abs=1e-5)

    grid = Grid(2048)
    samples = inverse_transform(bump_coefficients(16, 1 / 30, 16.0, grid))
    assert samples[1024] == pytest.approx(bump_amplitude(16, 1 / 30), rel=1e-10)
    assert abs(samples[0]) < 1e-12


def test_bump_is_real_and_drops_nyquist() -> None:
    grid = Grid(256)
    c = bump_coefficients(8, 1 / 30, 16.0, grid)
    assert c[grid.nyquist] == 0.0
    assert is_hermitian(c)


@pytest.mark.parametrize(
    ("N", "a", "M"),
    [(1, 16.0, 64), (8, 16.0, 64), (8, 0.0, 256)],
)
def test_bump_rejects_bad_inputs(N: int, a: float, M: int) -> None:
    with pytest.raises(ValueError):
        bump_coefficients(N, 1 / 30, a, Grid(M))


def test_pathological_is_truncated_plus_bump() -> None:
    params = _params(N=8, M=256, kind="pathological")
    pathological = build_pathological(params)
    truncated = build_truncated(params)
    bump = bump_coefficients(8, params.sobolev, params.a, Grid(256))

    np.testing.assert_allclose(pathological.u0 - truncated.u0, bump, atol=1e-13)
    np.testing.assert_array_equal(pathological.v0, truncated.v0)
    assert build_initial_data(params).kind == "pathological"


def test_bump_norm_decays_like_inverse_log() -> None:
    s = 1 / 30
    norms = {}
    for k in range(4, 13):
        N = 2**k
        norms[N] = sobolev_norm(bump_coefficients(N, s, 16.0, Grid(32 * N)), s)
    # norm * log N stays within a narrow band across the sweep
    scaled = [norm * math.log(N) for N, norm in norms.items()]
    assert max(scaled) / min(scaled) < 1.5
    assert norms[4096] < norms[16]


def test_riemann_zeta() -> None:
    assert riemann_zeta(2.0) == pytest.approx(math.pi**2 / 6, rel=1e-12)
    assert riemann_zeta(1.2) == pytest.approx(5.591582441, abs=1e-6)
    # long partial sum plus an integral tail
    K = 200_000
    partial = math.fsum(n**-1.96 for n in range(1, K))
    tail = K**-0.96 / 0.96 + 0.5 * K**-1.96
    assert riemann_zeta(1.96) == pytest.approx(partial + tail, rel=1e-10)


def test_zeta_tail() -> None:
    head = math.fsum(n**-2.0 for n in range(1, 10))
    assert zeta_tail(2.0, 10) == pytest.approx(math.pi**2 / 6 - head, rel=1e-10)
    with pytest.raises(ValueError):
        zeta_tail(1.0, 10)
    with pytest.raises(ValueError):
        riemann_zeta(0.9)


@pytest.mark.parametrize("seed", [0, 7, 2**63 + 5])
@pytest.mark.parametrize("N", [4, 16])
@pytest.mark.parametrize("alpha", [0.6, 0.98])
@pytest.mark.parametrize("kind", ["truncated", "pathological"])
def test_initial_data_represents_real_fields(seed: int, N: int, alpha: float, kind: str) -> None:
    data = build_initial_data(_params(seed=seed, N=N, M=256, alpha=alpha, kind=kind))
    for c in (data.u0, data.v0):
        assert is_hermitian(c)
        assert c[0].imag == 0.0
        assert c[128] == 0.0
        samples = inverse_transform(c)
        assert samples.dtype == np.float64
        assert np.all(np.isfinite(samples))
