"""Sweeps over N = 2^k for the well-posedness, norm-inflation and energy studies."""

import asyncio
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Self, Sequence

import numpy as np
from opentelemetry import trace
from pydantic import BaseModel, ConfigDict, Field, model_validator

from fnlw.common.settings import sweep_threads
from fnlw.initdata import build_initial_data, bump_coefficients, truncated_coefficients, zeta_tail
from fnlw.integrator import run, select_timestep
from fnlw.observables import RunRecord, trajectory_difference
from fnlw.params import (
    DEFAULT_BUMP_WIDTH,
    DEFAULT_FINAL_TIME,
    DEFAULT_SNAPSHOTS,
    KINDS,
    Kind,
    ModelParams,
    Regime,
    infer_regime,
    sobolev_index,
)
from fnlw.spectrum import Grid

logger = logging.getLogger(__name__)

SweepRegime = Literal["pwp", "norm_inflation", "deterministic_wp", "energy_check"]
Refinement = Literal["baseline", "refined"]

# Desk-scale defaults: k in 4..12 with M = 2^(k+4) capped at 2^16.
DESK_K_RANGE = tuple(range(4, 13))
DEFAULT_M_OFFSET = 4
DEFAULT_M_MAX_EXPONENT = 16

PRESETS: dict[SweepRegime, dict[str, Any]] = {
    "pwp": {"alpha": 0.6, "beta": 1.0 / 3.0, "kinds": ("truncated",)},
    "norm_inflation": {"alpha": 0.6, "beta": 1.0 / 3.0, "kinds": ("pathological",)},
    "deterministic_wp": {"alpha": 0.98, "beta": 1.0 / 3.0, "kinds": KINDS},
    "energy_check": {"alpha": 0.6, "beta": 1.0 / 3.0, "kinds": KINDS},
}

_SOBOLEV_REGIME: dict[SweepRegime, Regime | None] = {
    "pwp": "probabilistic",
    "norm_inflation": "probabilistic",
    "deterministic_wp": "deterministic",
    "energy_check": None,
}


class SweepConfig(BaseModel):
    """A family of runs N = 2^k sharing one realization of the Gaussian data."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    regime: SweepRegime
    alpha: float = Field(gt=0.5)
    beta: float = Field(gt=0.0)
    s: float = Field(gt=0.0)
    kinds: tuple[Kind, ...] = Field(min_length=1)
    k_range: tuple[int, ...] = Field(default=DESK_K_RANGE, min_length=1)
    m_offset: int = Field(default=DEFAULT_M_OFFSET, ge=1)
    m_max_exponent: int = Field(default=DEFAULT_M_MAX_EXPONENT, ge=3)
    t_s: float = Field(default=DEFAULT_FINAL_TIME, ge=0.0)
    snapshots: int = Field(default=DEFAULT_SNAPSHOTS, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    a: float = Field(default=DEFAULT_BUMP_WIDTH, gt=0.0)
    refinement: Refinement = "baseline"
    nonlinear: bool = True

    @model_validator(mode="after")
    def _check_grids(self) -> Self:
        if len(set(self.k_range)) != len(self.k_range) or any(k < 0 for k in self.k_range):
            raise ValueError("k_range must hold distinct non-negative exponents")
        if len(set(self.kinds)) != len(self.kinds):
            raise ValueError("kinds must be distinct")
        for k in self.k_range:
            M = self.base_grid_size(k)
            if 2**k > M // 2 - 1:
                raise ValueError(f"k={k}: N=2^{k} does not fit on M={M}")
            if "pathological" in self.kinds and (k < 1 or self.a * 2**k > M):
                raise ValueError(f"k={k}: bump with a={self.a:g} is not resolved on M={M}")
        return self

    def base_grid_size(self, k: int) -> int:
        """Default k -> M map; the cap reflects memory, not accuracy."""
        return 2 ** min(k + self.m_offset, self.m_max_exponent)

    def grid_size(self, k: int) -> int:
        M = self.base_grid_size(k)
        return 2 * M if self.refinement == "refined" else M

    def params_for(self, k: int, kind: Kind) -> ModelParams:
        base = ModelParams(
            alpha=self.alpha,
            beta=self.beta,
            s=self.s,
            N=2**k,
            M=self.base_grid_size(k),
            t_s=self.t_s,
            a=self.a,
            seed=self.seed,
            kind=kind,
            snapshots=self.snapshots,
            nonlinear=self.nonlinear,
        )
        if self.refinement == "baseline":
            return base
        # model_copy skips validation; doubling M keeps every grid constraint.
        return base.model_copy(update={"M": self.grid_size(k), "tau": select_timestep(base) / 2.0})


def preset(regime: SweepRegime, **overrides: Any) -> SweepConfig:
    """Resolve a named experiment with optional overrides (alpha, beta, k_range, ...)."""
    if regime not in PRESETS:
        raise ValueError(f"unknown preset {regime!r}; expected one of {sorted(PRESETS)}")
    values: dict[str, Any] = {"regime": regime, **PRESETS[regime], **overrides}
    if values.get("s") is None:
        alpha, beta = float(values["alpha"]), float(values["beta"])
        sobolev_regime = _SOBOLEV_REGIME[regime] or infer_regime(alpha, beta)
        values["s"] = sobolev_index(alpha, beta, sobolev_regime)
    return SweepConfig.model_validate(values)


@dataclass(frozen=True)
class RateFit:
    exponent: float
    residual: float
    points: int


@dataclass(frozen=True)
class RunFailure:
    N: int
    kind: Kind
    message: str


@dataclass(frozen=True)
class SummaryRow:
    N: int
    kind: Kind
    S_sup: float
    delta: float | None
    e_inf: float


@dataclass
class SweepResult:
    config: SweepConfig
    runs: dict[tuple[Kind, int], RunRecord] = field(default_factory=dict)
    delta: dict[tuple[Kind, int], float] = field(default_factory=dict)
    rates: dict[str, RateFit] = field(default_factory=dict)
    failures: list[RunFailure] = field(default_factory=list)

    def summary_rows(self) -> list[SummaryRow]:
        rows = []
        for kind in self.config.kinds:
            for k in sorted(self.config.k_range):
                record = self.runs.get((kind, 2**k))
                if record is None:
                    continue
                rows.append(
                    SummaryRow(
                        N=2**k,
                        kind=kind,
                        S_sup=record.S_sup,
                        delta=self.delta.get((kind, 2**k)),
                        e_inf=record.e_inf,
                    )
                )
        return rows


class SweepFailedError(RuntimeError):
    def __init__(self, failures: list[RunFailure], partial: SweepResult) -> None:
        listing = ", ".join(f"(N={f.N}, {f.kind})" for f in failures)
        super().__init__(f"{len(failures)} run(s) failed: {listing}")
        self.failures = failures
        self.partial = partial


def fit_rate(N_values: Sequence[float], y_values: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log y against log N and the RMS log-space misfit."""
    N = np.asarray(N_values, dtype=np.float64)
    y = np.asarray(y_values, dtype=np.float64)
    if N.shape != y.shape or N.size < 3:
        raise ValueError("fit_rate needs at least 3 (N, y) pairs of equal length")
    if np.any(N <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("fit_rate needs positive, finite values")
    x, z = np.log(N), np.log(y)
    slope, intercept = np.polyfit(x, z, 1)
    residual = float(np.sqrt(np.mean((z - (slope * x + intercept)) ** 2)))
    return float(slope), residual


def fit_summary_rates(rows: Sequence[SummaryRow]) -> dict[str, RateFit]:
    """Power-law fits of delta and S_sup against N, per kind, where 3+ positive points exist."""
    rates: dict[str, RateFit] = {}
    for kind in KINDS:
        for quantity in ("delta", "S_sup"):
            points = [(row.N, getattr(row, quantity)) for row in rows if row.kind == kind]
            points = [(N, y) for N, y in points if y is not None and math.isfinite(y)]
            N = [p[0] for p in points]
            y = [p[1] for p in points]
            if len(N) < 3 or min(y, default=0.0) <= 0:
                continue
            exponent, residual = fit_rate(N, y)
            rates[f"{quantity}_{kind}"] = RateFit(exponent=exponent, residual=residual, points=len(N))
    return rates


def _execute(params: ModelParams, store_states: bool) -> RunRecord:
    return run(params, build_initial_data(params), store_states=store_states)


async def run_sweep_async(
    config: SweepConfig,
    *,
    max_workers: int | None = None,
    store_states: bool = True,
) -> SweepResult:
    """Run every (N, kind) of the sweep on a bounded worker pool.

    Trajectory differences between N and N/2 are formed as soon as both runs
    are available, and stored states are dropped once no pair needs them.
    Results do not depend on completion order.
    """

    workers = max_workers or sweep_threads()
    semaphore = asyncio.Semaphore(workers)
    result = SweepResult(config=config)
    ks = set(config.k_range)
    claimed: set[tuple[Kind, int]] = set()

    def pending_pairs(kind: Kind, k: int) -> list[int]:
        # Upper exponent of each (2^j, 2^(j-1)) pair touching k.
        uppers = [j for j in (k, k + 1) if j in ks and j - 1 in ks]
        return [j for j in uppers if (kind, 2**j) not in result.delta]

    async def collect(kind: Kind, k: int) -> None:
        for j in pending_pairs(kind, k):
            upper, lower = result.runs.get((kind, 2**j)), result.runs.get((kind, 2 ** (j - 1)))
            if upper is None or lower is None or (kind, j) in claimed:
                continue
            if upper.states is None or lower.states is None:
                continue
            # Claimed pairs stay pending, which keeps both records' states alive.
            claimed.add((kind, j))
            result.delta[(kind, 2**j)] = await asyncio.to_thread(
                trajectory_difference, upper, lower, config.s, config.beta
            )
        for j in (k - 1, k, k + 1):
            record = result.runs.get((kind, 2**j))
            if record is not None and not pending_pairs(kind, j):
                record.release_states()

    async def one(kind: Kind, k: int) -> None:
        params = config.params_for(k, kind)
        async with semaphore:
            try:
                record = await asyncio.to_thread(_execute, params, store_states)
            except Exception as exc:
                logger.warning("run N=%d kind=%s failed: %s", params.N, kind, exc)
                result.failures.append(RunFailure(N=params.N, kind=kind, message=str(exc)))
                return
        result.runs[(kind, params.N)] = record
        if store_states:
            await collect(kind, k)

    tracer = trace.get_tracer(__name__)
    with tracer.start_as_current_span("fnlw.sweep") as span:
        span.set_attribute("fnlw.regime", config.regime)
        span.set_attribute("fnlw.refinement", config.refinement)
        span.set_attribute("fnlw.workers", workers)
        logger.info(
            "sweep %s (%s): kinds=%s k=%s workers=%d",
            config.regime, config.refinement, ",".join(config.kinds), list(config.k_range), workers,
        )
        await asyncio.gather(*(one(kind, k) for kind in config.kinds for k in config.k_range))

    for record in result.runs.values():
        record.release_states()
    result.failures.sort(key=lambda f: (KINDS.index(f.kind), f.N))
    result.rates = fit_summary_rates(result.summary_rows())
    if result.failures:
        raise SweepFailedError(result.failures, result)
    return result


def run_sweep(config: SweepConfig, *, max_workers: int | None = None, store_states: bool = True) -> SweepResult:
    return asyncio.run(run_sweep_async(config, max_workers=max_workers, store_states=store_states))


def mc_initial_convergence(
    alpha: float,
    beta: float,
    s: float,
    N_values: Sequence[int],
    R: int,
    *,
    seed: int = 0,
    kind: Kind = "truncated",
    a: float = DEFAULT_BUMP_WIDTH,
    N_ref: int | None = None,
    tail_correction: bool = False,
) -> list[tuple[int, float]]:
    """RMS over R seeds of the H^(s, beta) pair-norm distance from the N-data to the truncation at N_ref.

    N_ref defaults to 4 max(N_values) and proxies the full field. With
    `tail_correction`, the modes beyond N_ref enter through their expected
    contribution sum_{|n| > N_ref} <n>^(2s - 2 alpha). For alpha - s close to
    1/2 that tail decays slowly, and leaving it out steepens the fitted slope.
    """

    if R < 8:
        raise ValueError(f"need at least 8 realizations, got R={R}")
    if not N_values:
        raise ValueError("N_values must not be empty")
    if 2.0 * (alpha - s) <= 1.0:
        raise ValueError("distance is infinite unless s < alpha - 1/2")

    N_ref = 4 * max(N_values) if N_ref is None else N_ref
    if N_ref < max(N_values):
        raise ValueError(f"N_ref={N_ref} is below the largest N={max(N_values)}")
    modes = np.arange(N_ref + 1, dtype=np.float64)
    bracket = np.sqrt((2.0 * np.pi * modes) ** 2 + 1.0)
    weight_u = bracket ** (2.0 * s)
    weight_v = bracket ** (2.0 * s - 2.0 * beta)
    # Both channels decay like <n>^(2s - 2 alpha) in expectation.
    beyond = 0.0
    if tail_correction:
        exponent = 2.0 * alpha - 2.0 * s
        beyond = 2.0 * (2.0 * np.pi) ** -exponent * zeta_tail(exponent, N_ref + 1)

    grid = None
    if kind == "pathological":
        M = 8
        while M < max(a * max(N_values), 2 * N_ref + 2):
            M *= 2
        grid = Grid(M)
        full_weight_u = grid.bracket() ** (2.0 * s)

    squares = np.zeros(len(N_values))
    for r in range(seed, seed + R):
        u, v = truncated_coefficients(r, alpha, beta, N_ref)
        power_u = weight_u * np.abs(u) ** 2
        power_v = weight_v * np.abs(v) ** 2
        # tail[N] = sum over N < |n| <= N_ref, both signs.
        tail_u = 2.0 * np.concatenate((np.cumsum(power_u[::-1])[::-1][1:], [0.0]))
        tail_v = 2.0 * np.concatenate((np.cumsum(power_v[::-1])[::-1][1:], [0.0]))
        for i, N in enumerate(N_values):
            dist_v = math.sqrt(tail_v[N] + beyond)
            if grid is None:
                dist_u = math.sqrt(tail_u[N] + beyond)
            else:
                diff = np.zeros(grid.M, dtype=np.complex128)
                diff[N + 1 : N_ref + 1] = -u[N + 1 :]
                diff[grid.M - N_ref : grid.M - N] = -np.conj(u[N + 1 :][::-1])
                diff += bump_coefficients(N, s, a, grid)
                dist_u = math.sqrt(float(np.sum(full_weight_u * np.abs(diff) ** 2)) + beyond)
            squares[i] += (dist_u + dist_v) ** 2

    rms = np.sqrt(squares / R)
    return [(int(N), float(value)) for N, value in zip(N_values, rms, strict=True)]


@dataclass(frozen=True)
class EnergyRow:
    N: int
    kind: Kind
    refinement: Refinement
    e_inf: float


async def energy_study_async(config: SweepConfig, *, max_workers: int | None = None) -> list[EnergyRow]:
    rows: list[EnergyRow] = []
    for refinement in ("baseline", "refined"):
        variant = config.model_copy(update={"refinement": refinement})
        result = await run_sweep_async(variant, max_workers=max_workers, store_states=False)
        rows.extend(
            EnergyRow(N=row.N, kind=row.kind, refinement=refinement, e_inf=row.e_inf)
            for row in result.summary_rows()
        )
    return rows


def energy_study(config: SweepConfig, *, max_workers: int | None = None) -> list[EnergyRow]:
    """e_inf per run for the baseline (tau_N, M) and refined (tau_N/2, 2M) discretizations."""
    return asyncio.run(energy_study_async(config, max_workers=max_workers))
