"""Realizable waveforms: pulse trains and bang-bang signals.

Both shapes follow the two-step philosophy of this control scheme: the
feedback law is used in a design pass, and the resulting waveform is what the
experiment actually applies.

A pulse train replaces the continuous field by equal-duration pulses whose
amplitudes are the window averages of the delay-free design field for the
run's initial state, applied open loop. Averaging is what lets a few tens of
pulses track the field; sampling the instantaneous feedback at pulse
boundaries instead locks the loop into a limit cycle once pulses span several
time units and never converges.

Bang-bang control keeps only the sign of the feedback, mapping it onto
{+f0, 0, -f0} with a small deadband against floating-point sign chatter. The
sign is re-evaluated from the current state every `hold` time units: holding
for a fraction of a level-spacing period keeps the pulses realizable (visible
widths, variable spacing) and avoids the per-step chatter regime, where the
strong quantized drive pins the trajectory onto the f=0 manifold and the
descent slows to a creep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import parallel_map
from .control_law import feedback_law
from .dynamics import ControlSystem, FieldLaw, KernelPlan, Trajectory, simulate
from .errors import InputError
from .experiments import SweepPoint, seeded_initial_states


@dataclass
class PulseTrainSpec:
    """n_pulses equal-duration pulses tiling [0, horizon]."""

    n_pulses: int
    horizon: float

    def __post_init__(self):
        if self.n_pulses < 1:
            raise InputError(f"n_pulses must be >= 1, got {self.n_pulses}")
        if not self.horizon > 0:
            raise InputError(f"horizon must be positive, got {self.horizon}")
        self.horizon = float(self.horizon)

    @property
    def duration(self) -> float:
        return self.horizon / self.n_pulses


@dataclass
class BangBangSpec:
    """Three-level quantizer: +-f0 outside the deadband, 0 inside.

    hold is the re-quantization interval in time units; values at or below
    the integrator step mean per-step switching.
    """

    f0: float = 0.1
    deadband: float = 1e-8
    hold: float = 0.5

    def __post_init__(self):
        if not self.f0 > 0:
            raise InputError(f"f0 must be positive, got {self.f0}")
        if self.deadband < 0:
            raise InputError(f"deadband must be >= 0, got {self.deadband}")
        if not self.hold > 0:
            raise InputError(f"hold must be positive, got {self.hold}")


@dataclass
class PulseTrain:
    """Realized train: contiguous pulses covering [0, horizon] exactly."""

    horizon: float
    starts: np.ndarray
    ends: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        n = len(self.amplitudes)
        if len(self.starts) != n or len(self.ends) != n or n == 0:
            raise InputError("pulse train arrays must share one nonzero length")
        if self.starts[0] != 0.0 or self.ends[-1] != self.horizon:
            raise InputError("pulse train must cover [0, horizon]")
        if not np.array_equal(self.ends[:-1], self.starts[1:]):
            raise InputError("pulses must tile without gaps or overlaps")
        if np.any(self.ends <= self.starts):
            raise InputError("pulse durations must be positive")

    def __len__(self) -> int:
        return len(self.amplitudes)

    def pulses(self) -> list[tuple[float, float, float]]:
        """(start, duration, amplitude) triples."""
        return [
            (float(s), float(e - s), float(a))
            for s, e, a in zip(self.starts, self.ends, self.amplitudes)
        ]


def _pulse_start_steps(n_steps: int, n_pulses: int) -> list[int]:
    """First grid step of each pulse (integer arithmetic, no drift)."""
    return [(p * n_steps + n_pulses - 1) // n_pulses for p in range(n_pulses)]


class _PulseTrainLaw(FieldLaw):
    """Window-averaged design field on a pulse grid, applied open loop."""

    def __init__(self, sys: ControlSystem, spec: PulseTrainSpec, reference: Trajectory | None):
        self._sys = sys
        self._spec = spec
        self._reference = reference
        self._train = None
        self._f_applied = None
        self._n_steps = None
        self._dt = None

    def _prepare(self, sys, psi0, n_steps, dt):
        spec = self._spec
        if abs(n_steps * dt - spec.horizon) > 1e-9 * max(1.0, spec.horizon):
            raise InputError(
                f"pulse train spans [0, {spec.horizon}] but the run covers [0, {n_steps * dt}]"
            )
        if spec.duration < dt * (1.0 - 1e-9):
            raise InputError(
                f"pulse duration {spec.duration} is shorter than the step dt={dt}"
            )
        ref = self._reference
        if ref is None:
            ref = simulate(sys, feedback_law(sys), psi0, spec.horizon, dt)
        else:
            if len(ref.times) != n_steps + 1 or abs(ref.times[1] - ref.times[0] - dt) > 1e-9 * dt:
                raise InputError("pulse reference grid does not match the run grid")
            if np.max(np.abs(ref.states[0] - psi0)) > 1e-12:
                raise InputError("pulse reference was designed for a different initial state")

        n = spec.n_pulses
        bounds = _pulse_start_steps(n_steps, n) + [n_steps]
        amps = np.array(
            [float(np.mean(ref.fields[bounds[p] : bounds[p + 1]])) for p in range(n)]
        )
        starts = np.array([spec.horizon * p / n for p in range(n)])
        ends = np.array(
            [spec.horizon * (p + 1) / n if p + 1 < n else spec.horizon for p in range(n)]
        )
        self._train = PulseTrain(
            horizon=spec.horizon, starts=starts, ends=ends, amplitudes=amps
        )
        f_applied = np.empty(n_steps + 1)
        for p in range(n):
            f_applied[bounds[p] : bounds[p + 1]] = amps[p]
        f_applied[n_steps] = amps[-1]
        self._f_applied = f_applied
        self._n_steps = n_steps
        self._dt = dt
        return KernelPlan(_kernels.LAW_REPLAY, delay_steps=0, f_ref=f_applied)

    def field(self, t, psi, history):
        if self._f_applied is None:
            raise InputError("pulse-train law can only be evaluated inside a prepared run")
        i = min(int(round(t / self._dt)), self._n_steps)
        return float(self._f_applied[i])

    def train(self) -> PulseTrain | None:
        """The train realized by the most recent run, or None before any run."""
        return self._train


def pulsed_law(
    sys: ControlSystem, spec: PulseTrainSpec, reference: Trajectory | None = None
):
    """(FieldLaw, accessor) pair; the accessor yields the recorded PulseTrain.

    When no reference is given, the law runs the delay-free closed loop for
    the run's initial state itself. One law instance serves exactly one
    simulation at a time.
    """
    law = _PulseTrainLaw(sys, spec, reference)
    return law, law.train


def bang_bang_quantize(f_raw: float, spec: BangBangSpec) -> float:
    """Map a raw field value onto {+f0, 0, -f0} by sign with a deadband."""
    return float(_kernels.bang_quantize(float(f_raw), spec.f0, spec.deadband))


class _BangBangLaw(FieldLaw):
    def __init__(self, sys: ControlSystem, spec: BangBangSpec):
        self._sys = sys
        self._spec = spec
        self._h1_target = sys.h1_target()
        self._stride = 1
        self._dt = None
        self._amp = 0.0

    def _prepare(self, sys, psi0, n_steps, dt):
        self._stride = max(1, int(round(self._spec.hold / dt)))
        self._dt = dt
        self._amp = 0.0
        return KernelPlan(
            _kernels.LAW_BANG,
            stride=self._stride,
            f0=self._spec.f0,
            deadband=self._spec.deadband,
        )

    def field(self, t, psi, history):
        if self._dt is None:
            raise InputError("bang-bang law can only be evaluated inside a prepared run")
        i = int(round(t / self._dt))
        if i % self._stride == 0:
            f_raw = _kernels.feedback_field(
                self._sys.target, self._h1_target, self._sys.gain_k, psi
            )
            self._amp = float(
                _kernels.bang_quantize(f_raw, self._spec.f0, self._spec.deadband)
            )
        return self._amp


def bang_bang_law(sys: ControlSystem, spec: BangBangSpec) -> FieldLaw:
    """FieldLaw quantizing the feedback to a three-level bang-bang signal."""
    return _BangBangLaw(sys, spec)


def _pulse_trial(args):
    sys, count, psi0, reference, horizon, dt = args
    law, _ = pulsed_law(sys, PulseTrainSpec(n_pulses=count, horizon=horizon), reference)
    return simulate(sys, law, psi0, horizon, dt).final_fidelity


def pulse_count_sweep(
    sys: ControlSystem,
    counts,
    n_states: int,
    seed: int,
    horizon: float = 150.0,
    dt: float = 0.01,
) -> list[SweepPoint]:
    """Mean/std of the final fidelity versus pulse count, over seeded states.

    The state batch is shared across counts (paired design), as in the delay
    sweep, and each state's design run is computed once.
    """
    counts = [int(c) for c in counts]
    states = seeded_initial_states(sys.dim, n_states, seed)
    references = parallel_map(
        lambda psi0: simulate(sys, feedback_law(sys), psi0, horizon, dt), states
    )
    tasks = [
        (sys, count, states[i], references[i], horizon, dt)
        for count in counts
        for i in range(n_states)
    ]
    finals = parallel_map(_pulse_trial, tasks)
    points = []
    for c_idx, count in enumerate(counts):
        chunk = np.array(finals[c_idx * n_states : (c_idx + 1) * n_states])
        points.append(
            SweepPoint(
                parameter=count,
                mean_fidelity=float(np.mean(chunk)),
                std_fidelity=float(np.std(chunk)),
                n=n_states,
            )
        )
    return points
