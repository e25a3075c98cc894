"""Hot numeric kernels for the closed-loop integrator.

The function bodies are plain numpy and run as-is in the fallback path;
when numba is importable (and LYAPSIM_NO_NUMBA is unset) they are compiled
with @njit(nogil=True), which is what makes threaded parameter sweeps
scale. benchmarks/bench_kernels.py times both paths on the same workload.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    flag = os.environ.get("LYAPSIM_NO_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


USING_NUMBA = False
if _numba_enabled():
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

if not USING_NUMBA:

    def njit(*args, **kwargs):
        """No-op stand-in so the same bodies run uncompiled."""
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# Applied-field law codes for simulate_loop.
LAW_FEEDBACK = 0
LAW_DELAY_HISTORY = 1
LAW_REPLAY = 2
LAW_TAYLOR = 3
LAW_BANG = 4


@njit(cache=True, nogil=True)
def feedback_field(target, h1_target, gain_k, psi):
    # f = -k * Im(<target|psi> <psi|H1|target>), with h1_target = H1|target>.
    a = np.vdot(target, psi)
    b = np.vdot(psi, h1_target)
    return -gain_k * (a * b).imag


@njit(cache=True, nogil=True)
def bang_quantize(f_raw, f0, deadband):
    if f_raw > deadband:
        return f0
    if f_raw < -deadband:
        return -f0
    return 0.0


@njit(cache=True, nogil=True)
def rk4_step(h0, h1, f, dt, psi):
    """One RK4 step of dpsi/dt = -i (H0 + f H1) psi with f held constant.

    Returns (renormalized state, pre-renormalization norm drift).
    """
    k1 = -1j * (h0 @ psi + f * (h1 @ psi))
    p = psi + (0.5 * dt) * k1
    k2 = -1j * (h0 @ p + f * (h1 @ p))
    p = psi + (0.5 * dt) * k2
    k3 = -1j * (h0 @ p + f * (h1 @ p))
    p = psi + dt * k3
    k4 = -1j * (h0 @ p + f * (h1 @ p))
    out = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    nrm = np.sqrt(np.vdot(out, out).real)
    if nrm > 0.0:
        out = out / nrm
    return out, abs(nrm - 1.0)


@njit(cache=True, nogil=True)
def field_and_derivatives(h0, h1, target, h1_target, gain_k, psi):
    """Feedback field plus its first two time derivatives along the closed loop.

    With P = |psi><psi| and H = H0 + f H1:
        df/dt   = k Re(<g|[H,P]H1|g>)
        d2f/dt2 = k Im(<g|[H,[H,P]]H1|g>) + k (df/dt) Re(<g|[H1,P]H1|g>)
    """
    f = feedback_field(target, h1_target, gain_k, psi)
    h = h0 + f * h1
    u1 = h @ psi
    u2 = h @ u1
    g1 = h1 @ psi
    ta = np.vdot(target, psi)
    tu1 = np.vdot(target, u1)
    tu2 = np.vdot(target, u2)
    pw = np.vdot(psi, h1_target)
    u1w = np.vdot(u1, h1_target)
    u2w = np.vdot(u2, h1_target)
    tg1 = np.vdot(target, g1)
    g1w = np.vdot(g1, h1_target)

    df = gain_k * (tu1 * pw - ta * u1w).real
    d2f = gain_k * (tu2 * pw + ta * u2w - 2.0 * tu1 * u1w).imag
    d2f += gain_k * df * (tg1 * pw - ta * g1w).real
    return f, df, d2f


@njit(cache=True, nogil=True)
def simulate_loop(
    h0,
    h1,
    target,
    h1_target,
    gain_k,
    psi0,
    n_steps,
    dt,
    law_kind,
    delay_steps,
    tau,
    f_ref,
    stride,
    f0,
    deadband,
    drift_tol,
):
    """Fixed-step closed-loop integration for the built-in field laws.

    The field is sampled at each step start (zero-order hold across the
    step); the bang-bang law re-quantizes only every `stride` steps.
    Returns (states, fields, status, bad_step); status 1 flags a
    pre-renormalization norm drift above drift_tol at step bad_step.
    """
    dim = psi0.shape[0]
    states = np.empty((n_steps + 1, dim), dtype=np.complex128)
    fields = np.zeros(n_steps + 1)
    states[0] = psi0
    bang_amp = 0.0
    status = 0
    bad_step = -1

    for i in range(n_steps + 1):
        psi = states[i]
        if law_kind == LAW_FEEDBACK:
            f = feedback_field(target, h1_target, gain_k, psi)
        elif law_kind == LAW_DELAY_HISTORY:
            j = i - delay_steps
            if j >= 0:
                f = feedback_field(target, h1_target, gain_k, states[j])
            else:
                f = 0.0
        elif law_kind == LAW_REPLAY:
            j = i - delay_steps
            if 0 <= j < f_ref.shape[0]:
                f = f_ref[j]
            else:
                f = 0.0
        elif law_kind == LAW_TAYLOR:
            fv, df, d2f = field_and_derivatives(h0, h1, target, h1_target, gain_k, psi)
            f = fv - df * tau + 0.5 * d2f * tau * tau
        else:  # LAW_BANG
            if i % stride == 0:
                f_raw = feedback_field(target, h1_target, gain_k, psi)
                bang_amp = bang_quantize(f_raw, f0, deadband)
            f = bang_amp

        fields[i] = f
        if i == n_steps:
            break
        nxt, drift = rk4_step(h0, h1, f, dt, psi)
        if not (drift <= drift_tol):  # catches NaN as well
            status = 1
            bad_step = i
            break
        states[i + 1] = nxt

    return states, fields, status, bad_step
