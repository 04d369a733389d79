"""Strang-splitting time integration with blow-up guarding.

Both substeps are exact flows (diagonal linear phases, pointwise nonlinear
phase rotation), so the native mass is conserved to roundoff per step and
the splitting is second order and time reversible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import observables
from .grids import x_fft, x_ifft
from .operators import Machinery, NonFiniteFieldError, apply_nonlinearity
from .state import Field


@dataclass(frozen=True)
class StepControl:
    """Fixed-step by default; the adaptive mode halves/doubles dt from the
    one-step versus two-half-step discrepancy in the native L^2."""

    dt: float = 1e-3
    adaptive: bool = False
    dt_min: float = 1e-8
    dt_max: float = 1e-1
    err_grow: float = 1e-8
    err_shrink: float = 1e-11


@dataclass(frozen=True)
class BlowupThresholds:
    norm_ratio_max: float = 1e3
    dt_min: float = 1e-8


@dataclass
class StepperState:
    field: Field
    dt: float
    step_count: int = 0
    rejected_count: int = 0
    blowup_flag: bool = False
    blowup_time_estimate: float | None = None
    h1_initial: float | None = None


def _dealias(data: np.ndarray, mach: Machinery) -> np.ndarray:
    if mach.dealias is None:
        return data
    hat = x_fft(data, mach.grid)
    hat *= mach.dealias[..., None]
    return x_ifft(hat, mach.grid)


def _strang(data: np.ndarray, mach: Machinery, dt: float) -> np.ndarray:
    half = mach.propagator(0.5 * dt)
    out = half.apply(data)
    out = apply_nonlinearity(out, mach.spec, mach, dt)
    out = _dealias(out, mach)
    return half.apply(out)


def _native_l2(data: np.ndarray, mach: Machinery) -> float:
    return math.sqrt(observables.mass(data, mach.spec, mach))


def strang_step(state: StepperState, mach: Machinery) -> StepperState:
    """Advance by state.dt: half linear, full nonlinear phase, half linear."""
    if state.blowup_flag:
        raise ValueError("stepper is flagged; integration has stopped")
    if not state.field.finite:
        return replace(
            state, blowup_flag=True, blowup_time_estimate=state.field.time
        )
    try:
        data = _strang(state.field.data, mach, state.dt)
    except NonFiniteFieldError:
        return replace(
            state, blowup_flag=True, blowup_time_estimate=state.field.time
        )
    new_field = Field(data, state.field.time + state.dt)
    new_state = replace(state, field=new_field, step_count=state.step_count + 1)
    if not new_field.finite:
        new_state.blowup_flag = True
        new_state.blowup_time_estimate = new_field.time
    return new_state


def detect_blowup(
    state: StepperState, mach: Machinery, thresholds: BlowupThresholds
) -> StepperState:
    """Flag on nonfinite values, on an H^1 ratio past the ceiling, or when
    the step controller has been driven to dt_min with rejections."""
    if state.blowup_flag:
        return state
    flagged = False
    if not state.field.finite:
        flagged = True
    else:
        if state.h1_initial is None:
            state.h1_initial = observables.h1_native(state.field, mach.spec, mach)
        elif state.h1_initial > 0:
            ratio = (
                observables.h1_native(state.field, mach.spec, mach) / state.h1_initial
            )
            if ratio > thresholds.norm_ratio_max:
                flagged = True
        if state.dt <= thresholds.dt_min and state.rejected_count > 0:
            flagged = True
    if flagged:
        state.blowup_flag = True
        state.blowup_time_estimate = state.field.time
    return state


def _advance_fixed(state, mach, target, control, thresholds):
    # uniform substeps per segment so the propagator cache stays tiny
    remaining = target - state.field.time
    n_sub = max(1, round(remaining / control.dt))
    dt = remaining / n_sub
    for _ in range(n_sub):
        if state.blowup_flag:
            break
        state = replace(state, dt=dt)
        state = strang_step(state, mach)
        state = detect_blowup(state, mach, thresholds)
    if not state.blowup_flag:
        state.field.time = target
    return state


def _advance_adaptive(state, mach, target, control, thresholds):
    eps = 1e-12 * max(1.0, abs(target))
    nominal = state.dt
    while state.field.time < target - eps and not state.blowup_flag:
        dt = min(nominal, target - state.field.time)
        try:
            full = _strang(state.field.data, mach, dt)
            half = _strang(state.field.data, mach, 0.5 * dt)
            fine = _strang(half, mach, 0.5 * dt)
        except NonFiniteFieldError:
            state.blowup_flag = True
            state.blowup_time_estimate = state.field.time
            break
        err = _native_l2(full - fine, mach)
        if err > control.err_grow and dt > control.dt_min:
            nominal = max(0.5 * dt, control.dt_min)
            state.rejected_count += 1
            continue
        state.field = Field(fine, state.field.time + dt)
        state.step_count += 1
        state.dt = nominal
        if err > control.err_grow:
            # still failing at the dt floor: hand off to the guard
            state.rejected_count += 1
        state = detect_blowup(state, mach, thresholds)
        if err < control.err_shrink and dt == nominal:
            nominal = min(2.0 * dt, control.dt_max)
        state.dt = nominal
    if not state.blowup_flag:
        state.field.time = target
    return state


def integrate(
    initial: Field,
    mach: Machinery,
    horizon: float,
    sample_times,
    control: StepControl | None = None,
    thresholds: BlowupThresholds | None = None,
    record_fn=observables.sample_record,
):
    """Run to each sample time exactly, emitting one diagnostics record per
    sample; on a blow-up flag the schedule is truncated and the flag time
    recorded.  Returns (records, final StepperState)."""
    control = control or StepControl()
    thresholds = thresholds or BlowupThresholds(dt_min=control.dt_min)
    samples = list(sample_times)
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if not samples:
        raise ValueError("empty sample schedule")
    if any(t1 > t2 for t1, t2 in zip(samples, samples[1:])):
        raise ValueError("sample times must be sorted")
    if samples[0] < 0 or samples[-1] > horizon + 1e-12:
        raise ValueError("sample times must lie inside [0, horizon]")

    field = Field(initial.data.copy(), initial.time)
    if field.finite:
        # project the initial data once so conservation tracks the orbit of
        # the dealiased state rather than a one-time mask transient
        field.data = _dealias(field.data, mach)
        state = StepperState(field=field, dt=control.dt)
        state.h1_initial = observables.h1_native(field, mach.spec, mach)
    else:
        state = StepperState(field=field, dt=control.dt)

    advance = _advance_adaptive if control.adaptive else _advance_fixed
    records = []
    for target in samples:
        if target > state.field.time:
            state = advance(state, mach, target, control, thresholds)
        if state.blowup_flag:
            break
        records.append(record_fn(state.field, mach.spec, mach))
    return records, state
