"""Time integration of u_tt + |D|^(2 beta) u + u^3 = 0 on the torus.

The production scheme is the filtered trigonometric integrator: the linear
flow is solved exactly per mode, and the cubic term enters through the
filtered nonlinearity sinc^2(tau|D|^beta) f(sinc(tau|D|^beta) u) with
f(u) = -u^3. A kick-drift-kick Stormer-Verlet step is kept as an
independent cross-check.
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from opentelemetry import trace

from fnlw.initdata import InitialData, bump_amplitude, riemann_zeta
from fnlw.observables import RunRecord, discrete_hamiltonian, pair_norm
from fnlw.params import ModelParams
from fnlw.spectrum import CoeffVector, Grid, dealiased_cube, omega

logger = logging.getLogger(__name__)

Scheme = Literal["trigonometric", "verlet"]


class SimulationError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message: str, *, step: int, time: float) -> None:
        super().__init__(f"{message} at step {step} (t={time:.6g})")
        self.step = step
        self.time = time


@dataclass(frozen=True)
class SpectralState:
    """Coefficients of (u, du/dt) at time t."""

    u: CoeffVector
    v: CoeffVector
    t: float = 0.0

    @property
    def M(self) -> int:
        return int(self.u.shape[0])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


def dispersive_timescale(M: int, beta: float) -> float:
    """tau_d = M^(-beta), the period scale of the fastest resolved mode."""
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    return float(M) ** -beta


def nonlinear_timescale(alpha: float, s: float, N: int) -> float:
    """tau_NL^0 from 1/tau_NL^0 = sqrt(zeta(2 alpha)) + N^(1/2-s)/log N."""
    if N < 2:
        raise ValueError(f"nonlinear timescale needs N >= 2, got {N}")
    if alpha <= 0.5:
        raise ValueError(f"alpha must exceed 1/2, got {alpha}")
    return 1.0 / (math.sqrt(riemann_zeta(2.0 * alpha)) + bump_amplitude(N, s))


def _raw_timestep(params: ModelParams) -> float:
    dispersive = dispersive_timescale(params.M, params.beta) / 5.0
    if params.N >= 2:
        nonlinear = nonlinear_timescale(params.alpha, params.sobolev, params.N)
    else:
        # No bump term below N = 2; the Gaussian amplitude alone sets the scale.
        nonlinear = 1.0 / math.sqrt(riemann_zeta(2.0 * params.alpha))
    return min(dispersive, nonlinear**3 / 2.0)


def steps_per_snapshot(params: ModelParams, tau: float) -> int:
    """Smallest integer step count per snapshot interval with step size <= tau."""
    if params.t_s == 0:
        return 0
    interval = params.t_s / params.snapshots
    count = max(1, math.ceil(interval / tau))
    # interval / tau is off by an ulp near exact integers.
    if count > 1 and interval / (count - 1) <= tau:
        count -= 1
    elif interval / count > tau:
        count += 1
    return count


def select_timestep(params: ModelParams) -> float:
    """tau_N = min(tau_d / 5, tau_NL^3 / 2), rounded down onto the snapshot grid.

    An explicit `params.tau` replaces tau_N but is rounded the same way.
    """

    tau_n = params.tau if params.tau is not None else _raw_timestep(params)
    if params.t_s == 0:
        return tau_n
    interval = params.t_s / params.snapshots
    return interval / steps_per_snapshot(params, tau_n)


@functools.lru_cache(maxsize=32)
def _linear_symbols(M: int, tau: float, beta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """cos(tau W), tau sinc(tau W), W sin(tau W) and sinc(|tau| W) for W = |2 pi n|^beta."""
    w = omega(M, beta)
    phase = tau * w
    sinc = np.sinc(phase / np.pi)
    symbols = (np.cos(phase), tau * sinc, w * np.sin(phase), sinc)
    for array in symbols:
        array.flags.writeable = False
    return symbols


def filtered_nonlinearity(u: CoeffVector, tau: float, beta: float) -> CoeffVector:
    """sinc^2(tau|D|^beta) f(sinc(tau|D|^beta) u) with f(u) = -u^3."""
    M = Grid.of(u).M
    sinc = _linear_symbols(M, tau, beta)[3]
    return -(sinc * sinc) * dealiased_cube(sinc * u)


def _zero(u: CoeffVector, tau: float, beta: float) -> CoeffVector:
    return np.zeros_like(u)


def trig_step(state: SpectralState, tau: float, beta: float, *, nonlinear: bool = True) -> SpectralState:
    """One step of the filtered trigonometric scheme.

        u+ = cos(tW) u + t sinc(tW) v + t^2/2 sinc(tW) F(u)
        v+ = -W sin(tW) u + cos(tW) v + t/2 (cos(tW) F(u) + F(u+))

    with t = tau, W = |2 pi n|^beta and F the filtered nonlinearity. At n = 0
    this reduces to free drift plus the averaged force.
    """

    cos, tau_sinc, w_sin, sinc = _linear_symbols(state.M, tau, beta)
    force = filtered_nonlinearity if nonlinear else _zero

    f_now = force(state.u, tau, beta)
    u_next = cos * state.u + tau_sinc * state.v + 0.5 * tau * tau_sinc * f_now
    f_next = force(u_next, tau, beta)
    v_next = -w_sin * state.u + cos * state.v + 0.5 * tau * (cos * f_now + f_next)
    return SpectralState(u=u_next, v=v_next, t=state.t + tau)


def _acceleration(u: CoeffVector, beta: float, nonlinear: bool) -> CoeffVector:
    w = omega(u.shape[0], beta)
    accel = -(w * w) * u
    if nonlinear:
        accel -= dealiased_cube(u)
    return accel


def verlet_step(state: SpectralState, tau: float, beta: float, *, nonlinear: bool = True) -> SpectralState:
    """Kick-drift-kick leapfrog for v' = -|D|^(2 beta) u - u^3 (unfiltered)."""
    v_half = state.v + 0.5 * tau * _acceleration(state.u, beta, nonlinear)
    u_next = state.u + tau * v_half
    v_next = v_half + 0.5 * tau * _acceleration(u_next, beta, nonlinear)
    return SpectralState(u=u_next, v=v_next, t=state.t + tau)


_STEPPERS = {"trigonometric": trig_step, "verlet": verlet_step}


def integrate(
    state: SpectralState,
    tau: float,
    beta: float,
    steps: int,
    *,
    nonlinear: bool = True,
    scheme: Scheme = "trigonometric",
    first_step: int = 0,
) -> SpectralState:
    """Advance `steps` steps, checking every step for non-finite values."""
    step = _STEPPERS[scheme]
    for p in range(steps):
        state = step(state, tau, beta, nonlinear=nonlinear)
        if not state.is_finite():
            raise SimulationError("non-finite coefficients", step=first_step + p + 1, time=state.t)
    return state


def run(
    params: ModelParams,
    init: InitialData,
    *,
    store_states: bool = False,
    scheme: Scheme = "trigonometric",
) -> RunRecord:
    """Integrate from t = 0 to t_s and record observables on J + 1 snapshots."""

    if init.u0.shape[0] != params.M or init.v0.shape[0] != params.M:
        raise ValueError(f"initial data grid {init.u0.shape[0]} does not match M={params.M}")

    tau = select_timestep(params)
    per_snapshot = steps_per_snapshot(params, tau)
    snapshots = params.snapshots if params.t_s > 0 else 0
    total_steps = per_snapshot * snapshots
    s = params.sobolev

    tracer = trace.get_tracer(__name__)
    with tracer.start_as_current_span("fnlw.run") as span:
        span.set_attribute("fnlw.N", params.N)
        span.set_attribute("fnlw.M", params.M)
        span.set_attribute("fnlw.kind", init.kind)
        span.set_attribute("fnlw.steps", total_steps)
        logger.info(
            "run N=%d M=%d kind=%s beta=%.6g tau=%.6g steps=%d",
            params.N, params.M, init.kind, params.beta, tau, total_steps,
        )

        state = SpectralState(u=init.u0.copy(), v=init.v0.copy(), t=0.0)
        times = [0.0]
        norms = [pair_norm(state, s, params.beta)]
        energies = [discrete_hamiltonian(state, params.beta, nonlinear=params.nonlinear)]
        states = [state] if store_states else None

        for j in range(1, snapshots + 1):
            state = integrate(
                state, tau, params.beta, per_snapshot,
                nonlinear=params.nonlinear, scheme=scheme, first_step=(j - 1) * per_snapshot,
            )
            # Snapshot times come from the grid, not the accumulated sum of tau.
            time = params.t_s * j / snapshots
            state = SpectralState(u=state.u, v=state.v, t=time)
            times.append(time)
            norms.append(pair_norm(state, s, params.beta))
            energies.append(discrete_hamiltonian(state, params.beta, nonlinear=params.nonlinear))
            if states is not None:
                states.append(state)
            logger.debug("snapshot %d/%d t=%.6g S=%.6g H=%.6g", j, snapshots, time, norms[-1], energies[-1])

        record = RunRecord(
            params=params,
            kind=init.kind,
            tau=tau,
            steps=total_steps,
            times=np.asarray(times),
            S=np.asarray(norms),
            H=np.asarray(energies),
            states=states,
        )
        span.set_attribute("fnlw.sup_norm", record.S_sup)
        if math.isnan(record.e_inf):
            logger.warning("run N=%d kind=%s: initial Hamiltonian is 0, energy error undefined", params.N, init.kind)
        logger.info("run N=%d kind=%s done: S_sup=%.6g e_inf=%.3e", params.N, init.kind, record.S_sup, record.e_inf)
        return record
