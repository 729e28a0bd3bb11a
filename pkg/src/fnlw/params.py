"""Run parameters shared by the data, integrator, observable and CLI layers."""

from typing import Any, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

Kind = Literal["truncated", "pathological"]
Regime = Literal["probabilistic", "deterministic"]

KINDS: tuple[Kind, ...] = ("truncated", "pathological")

# Boundary attenuation exp(-(a/2)^2) = exp(-64) at N = 1.
DEFAULT_BUMP_WIDTH = 16.0
DEFAULT_FINAL_TIME = 1e-2
DEFAULT_SNAPSHOTS = 100


def sobolev_index(alpha: float, beta: float, regime: Regime) -> float:
    """Sobolev index s = gamma (alpha - 1/2) used in each regime.

    probabilistic: gamma = 1/3.
    deterministic: gamma is the midpoint 1/2 (1 + (1/2 - beta) / (alpha - 1/2)),
    which requires alpha - 1/2 > 1/2 - beta.
    """

    if alpha <= 0.5:
        raise ValueError(f"alpha must exceed 1/2, got {alpha}")
    excess = alpha - 0.5
    if regime == "probabilistic":
        return excess / 3.0
    if regime == "deterministic":
        return sobolev_gamma(alpha, beta) * excess
    raise ValueError(f"unknown regime {regime!r}")


def sobolev_gamma(alpha: float, beta: float) -> float:
    excess = alpha - 0.5
    if excess <= 0.5 - beta:
        raise ValueError(
            f"deterministic regime needs alpha - 1/2 > 1/2 - beta (alpha={alpha}, beta={beta})"
        )
    return 0.5 * (1.0 + (0.5 - beta) / excess)


def infer_regime(alpha: float, beta: float) -> Regime:
    return "deterministic" if alpha - 0.5 > 0.5 - beta else "probabilistic"


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


class ModelParams(BaseModel):
    """All scalar knobs of a single run.

    `s` defaults to the regime rule for (alpha, beta); `tau` defaults to the
    N-dependent timestep rule and is resolved by the integrator.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(gt=0.5)
    beta: float = Field(gt=0.0)
    s: float | None = Field(default=None, gt=0.0)
    N: int = Field(ge=0)
    M: int = Field(ge=8)
    t_s: float = Field(default=DEFAULT_FINAL_TIME, ge=0.0)
    tau: float | None = Field(default=None, gt=0.0)
    a: float = Field(default=DEFAULT_BUMP_WIDTH, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    kind: Kind = "truncated"
    snapshots: int = Field(default=DEFAULT_SNAPSHOTS, ge=1)
    nonlinear: bool = True

    @model_validator(mode="before")
    @classmethod
    def _default_sobolev_index(cls, data: Any) -> Any:
        if not isinstance(data, dict) or data.get("s") is not None:
            return data
        try:
            alpha, beta = float(data["alpha"]), float(data["beta"])
        except (KeyError, TypeError, ValueError):
            return data
        if alpha <= 0.5 or beta <= 0:
            # Left to field validation, which names the offending field.
            return data
        return {**data, "s": sobolev_index(alpha, beta, infer_regime(alpha, beta))}

    @field_validator("kind")
    @classmethod
    def _check_bump_resolved(cls, kind: Kind, info: ValidationInfo) -> Kind:
        if kind != "pathological":
            return kind
        N, M, a = info.data.get("N"), info.data.get("M"), info.data.get("a")
        if N is None or M is None or a is None:
            return kind
        if N < 2:
            raise ValueError(f"pathological data needs N >= 2 (log N > 0), got N={N}")
        if a * N > M:
            raise ValueError(f"bump under-resolved: a*N={a * N:g} exceeds M={M}")
        return kind

    @model_validator(mode="after")
    def _check_consistency(self) -> Self:
        if not _is_power_of_two(self.M):
            raise ValueError(f"M must be a power of two, got {self.M}")
        if self.N > self.M // 2 - 1:
            raise ValueError(f"N={self.N} too large for grid M={self.M} (need N <= M/2 - 1)")
        if self.tau is not None and self.t_s > 0 and self.tau > self.t_s:
            raise ValueError(f"tau={self.tau} exceeds t_s={self.t_s}")
        return self

    @property
    def sobolev(self) -> float:
        assert self.s is not None
        return self.s

    @property
    def gamma(self) -> float:
        return self.sobolev / (self.alpha - 0.5)
