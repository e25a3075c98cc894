"""Applying the feedback field with a time shift f(t - tau).

Three mechanisms are selectable. "history" re-synthesizes the field from the
stored state a delay ago (causal, so tau >= 0 only; before any signal exists
the applied field is zero). "replay" shifts a precomputed delay-free field
record, the open-loop reading, and works for either sign of tau. "taylor"
approximates f(t - tau) from the current state via the second-order expansion
f - f' tau + f'' tau^2 / 2, which is how negative delays are treated
analytically. By default positive delays use history and negative delays use
taylor.

Delayed lookups land on the integration grid at the nearest earlier sample
(no interpolation); the O(dt) error sits below the integration error at the
default step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import parallel_map
from .control_law import feedback_law
from .dynamics import (
    ControlSystem,
    FieldLaw,
    KernelPlan,
    Trajectory,
    delay_step_count,
    simulate,
)
from .errors import InputError
from .experiments import SweepPoint, seeded_initial_states

MODES = ("history", "replay", "taylor")


@dataclass
class DelaySpec:
    """Delay tau (negative = advance) and the mechanism producing f(t - tau)."""

    tau: float
    mode: str = "auto"

    def __post_init__(self):
        self.tau = float(self.tau)
        if self.mode not in MODES + ("auto",):
            raise InputError(f"unknown delay mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "history" and self.tau < 0:
            raise InputError("history mode is causal state feedback and needs tau >= 0")

    def resolved_mode(self) -> str:
        if self.mode != "auto":
            return self.mode
        return "history" if self.tau >= 0 else "taylor"


class _HistoryDelayLaw(FieldLaw):
    def __init__(self, sys: ControlSystem, tau: float):
        self._sys = sys
        self._tau = tau
        self._h1_target = sys.h1_target()

    def field(self, t, psi, history):
        past = history.state_at_or_before(t - self._tau)
        if past is None:
            return 0.0
        return float(
            _kernels.feedback_field(self._sys.target, self._h1_target, self._sys.gain_k, past)
        )

    def _prepare(self, sys, psi0, n_steps, dt):
        _check_tau(self._tau, n_steps, dt)
        return KernelPlan(
            _kernels.LAW_DELAY_HISTORY, delay_steps=delay_step_count(self._tau, dt)
        )


class _ReplayDelayLaw(FieldLaw):
    def __init__(self, sys: ControlSystem, tau: float, reference: Trajectory):
        self._tau = tau
        self._ref_fields = np.asarray(reference.fields, dtype=np.float64)
        times = reference.times
        if len(times) < 2:
            raise InputError("replay reference needs at least two samples")
        self._ref_dt = float(times[1] - times[0])
        self._ref_end = float(times[-1])

    def field(self, t, psi, history):
        tq = t - self._tau
        if tq < -1e-12:
            return 0.0
        idx = int(np.floor(tq / self._ref_dt + 1e-9))
        if idx < 0 or idx >= len(self._ref_fields):
            return 0.0
        return float(self._ref_fields[idx])

    def _prepare(self, sys, psi0, n_steps, dt):
        _check_tau(self._tau, n_steps, dt)
        if abs(self._ref_dt - dt) > 1e-9 * max(1.0, dt):
            raise InputError(
                f"replay reference step {self._ref_dt} does not match run step {dt}"
            )
        if self._ref_end + 1e-9 < n_steps * dt:
            raise InputError(
                f"replay reference covers [0, {self._ref_end}] but the run needs [0, {n_steps * dt}]"
            )
        return KernelPlan(
            _kernels.LAW_REPLAY,
            delay_steps=delay_step_count(self._tau, dt),
            f_ref=self._ref_fields,
        )


class _TaylorDelayLaw(FieldLaw):
    def __init__(self, sys: ControlSystem, tau: float):
        self._sys = sys
        self._tau = tau
        self._h1_target = sys.h1_target()

    def field(self, t, psi, history):
        s = self._sys
        f, df, d2f = _kernels.field_and_derivatives(
            s.h0, s.h1, s.target, self._h1_target, s.gain_k, psi
        )
        return float(f - df * self._tau + 0.5 * d2f * self._tau * self._tau)

    def _prepare(self, sys, psi0, n_steps, dt):
        _check_tau(self._tau, n_steps, dt)
        return KernelPlan(_kernels.LAW_TAYLOR, tau=self._tau)


def _check_tau(tau: float, n_steps: int, dt: float) -> None:
    horizon = n_steps * dt
    if abs(tau) > horizon + 1e-9:
        raise InputError(f"|tau| = {abs(tau)} exceeds the horizon {horizon}")


def delayed_law(sys: ControlSystem, spec: DelaySpec, reference: Trajectory | None = None) -> FieldLaw:
    """FieldLaw realizing f(t - tau) by the mechanism the DelaySpec selects.

    Replay mode needs the delay-free closed-loop run as reference; outside
    its recorded window the applied field is zero.
    """
    mode = spec.resolved_mode()
    if mode == "history":
        if spec.tau < 0:
            raise InputError("history mode is causal state feedback and needs tau >= 0")
        return _HistoryDelayLaw(sys, spec.tau)
    if mode == "replay":
        if reference is None:
            raise InputError("replay mode needs the delay-free reference trajectory")
        return _ReplayDelayLaw(sys, spec.tau, reference)
    return _TaylorDelayLaw(sys, spec.tau)


def _delay_trial(args):
    sys, tau, mode, psi0, reference, horizon, dt = args
    law = delayed_law(sys, DelaySpec(tau=tau, mode=mode), reference=reference)
    return simulate(sys, law, psi0, horizon, dt).final_fidelity


def delay_sweep(
    sys: ControlSystem,
    taus,
    n_states: int,
    seed: int,
    mode: str = "auto",
    horizon: float = 200.0,
    dt: float = 0.01,
) -> list[SweepPoint]:
    """Mean/std of the final fidelity versus delay, over seeded initial states.

    The same state batch is shared across all delays (paired design, for
    variance reduction); everything is deterministic in (seed, config).
    """
    taus = [float(t) for t in taus]
    states = seeded_initial_states(sys.dim, n_states, seed)

    references = [None] * n_states
    if any(DelaySpec(t, mode).resolved_mode() == "replay" for t in taus):
        references = parallel_map(
            lambda psi0: simulate(sys, feedback_law(sys), psi0, horizon, dt),
            states,
        )

    tasks = [
        (sys, tau, mode, states[i], references[i], horizon, dt)
        for tau in taus
        for i in range(n_states)
    ]
    finals = parallel_map(_delay_trial, tasks)
    points = []
    for t_idx, tau in enumerate(taus):
        chunk = np.array(finals[t_idx * n_states : (t_idx + 1) * n_states])
        points.append(
            SweepPoint(
                parameter=tau,
                mean_fidelity=float(np.mean(chunk)),
                std_fidelity=float(np.std(chunk)),
                n=n_states,
            )
        )
    return points
