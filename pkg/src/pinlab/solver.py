"""Finite-volume partition functions for one defect realization.

Works in the relative frame (walker minus defect): between defect jumps the
frame diffuses as the walker alone with a multiplicative reward at the
origin, and each defect jump shifts the frame.  The semigroup is evolved on
a centered box with absorbing faces, in steps short enough that the
nonnegative series for the step operator converges geometrically; running
maxima are factored out into a log accumulator so values like exp(95) never
touch floating-point range.

Absorption makes every boxed value a lower bound of the untruncated one and
increasing in the box radius, so doubling the radius until the value stops
moving yields a self-certifying estimate; the last increment is reported as
the certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .walks import DisorderPath, JumpKernel, _shift_add

_DEFAULT_MAX_RADIUS = {1: 512, 2: 128, 3: 64}
_SERIES_HARD_CAP = 400


class AbsorbedAllError(RuntimeError):
    """All semigroup mass left the box; the radius cannot hold this path."""


class ToleranceNotMetError(RuntimeError):
    """The radius ladder hit its cap before the certificate tolerance."""


@dataclass(frozen=True)
class SolverOptions:
    """Numerical controls for the box evolution.

    certificate_tolerance bounds the accepted change under radius doubling;
    series_tolerance bounds the dropped tail of each step-operator series;
    fixed_radius skips the ladder entirely (certificate reported as nan);
    max_radius caps the per-axis half-width (dimension default otherwise).
    """

    certificate_tolerance: float = 1e-8
    series_tolerance: float = 1e-12
    fixed_radius: int | None = None
    max_radius: int | None = None


@dataclass(frozen=True)
class PartitionResult:
    """Log partition function for one defect path, with run provenance."""

    log_value: float
    certificate: float
    radius: int
    pinned: bool
    beta: float
    horizon: float
    dimension: int
    rho: float
    seed: int | None


def _evolve(
    v: np.ndarray,
    duration: float,
    beta: float,
    kernel: JumpKernel,
    origin: tuple[int, ...],
    series_tol: float,
) -> tuple[np.ndarray, float]:
    """Apply the reward-weighted absorbed semigroup for a jump-free stretch.

    Returns the evolved vector max-normalized and the accumulated log scale.
    """
    if duration <= 0.0:
        return v, 0.0
    rate = 1.0 + beta
    nsteps = max(1, int(math.ceil(duration * rate)))
    h = duration / nsteps
    big_m = h * rate
    shifts = [tuple(int(c) for c in x) for x in kernel.point_array]
    probs = kernel.prob_array
    acc = 0.0
    for _ in range(nsteps):
        y = v.copy()
        term = v
        pterm = 1.0
        remainder = math.exp(big_m) - 1.0
        k = 0
        while remainder > series_tol and k < _SERIES_HARD_CAP:
            k += 1
            nxt = np.zeros_like(term)
            for dx, p in zip(shifts, probs):
                _shift_add(nxt, term, dx, p)
            nxt[origin] += beta * term[origin]
            nxt *= h / k
            term = nxt
            y += term
            pterm *= big_m / k
            remainder -= pterm
        peak = float(y.max())
        if not (peak > 0.0) or not math.isfinite(peak):
            raise AbsorbedAllError("no mass left inside the box")
        acc += math.log(peak) - h
        v = y / peak
    return v, acc


def _frame_shift(v: np.ndarray, jump: np.ndarray) -> np.ndarray:
    """Defect jump by `jump`: the relative frame moves the opposite way."""
    out = np.zeros_like(v)
    _shift_add(out, v, tuple(-int(c) for c in jump), 1.0)
    return out


def _run_at_radius(
    kernel: JumpKernel,
    beta: float,
    path: DisorderPath,
    radius: int,
    pinned: bool,
    series_tol: float,
) -> float:
    d = kernel.dimension
    shape = tuple(2 * radius + 1 for _ in range(d))
    origin = tuple(radius for _ in range(d))
    v = np.zeros(shape)
    v[origin] = 1.0
    acc = 0.0
    prev = 0.0
    for tj, dx in zip(path.times, path.displacements):
        v, gained = _evolve(v, float(tj) - prev, beta, kernel, origin, series_tol)
        acc += gained
        v = _frame_shift(v, dx)
        prev = float(tj)
    v, gained = _evolve(v, path.horizon - prev, beta, kernel, origin, series_tol)
    acc += gained
    value = float(v[origin]) if pinned else float(v.sum())
    if value <= 0.0:
        raise AbsorbedAllError("readoff vanished: box lost the defect")
    return acc + math.log(value)


def _log_partition(
    kernel: JumpKernel,
    beta: float,
    path: DisorderPath,
    pinned: bool,
    options: SolverOptions,
) -> PartitionResult:
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if kernel.dimension != path.dimension:
        raise ValueError("kernel and path dimensions differ")
    d = kernel.dimension
    rmax = options.max_radius or _DEFAULT_MAX_RADIUS.get(d, 32)

    def result(log_value: float, certificate: float, radius: int) -> PartitionResult:
        return PartitionResult(
            log_value=log_value,
            certificate=certificate,
            radius=radius,
            pinned=pinned,
            beta=beta,
            horizon=path.horizon,
            dimension=d,
            rho=path.rho,
            seed=path.seed,
        )

    if options.fixed_radius is not None:
        log_value = _run_at_radius(
            kernel, beta, path, options.fixed_radius, pinned, options.series_tolerance
        )
        return result(log_value, math.nan, options.fixed_radius)

    r = min(max(int(math.ceil(4.0 * math.sqrt(path.horizon))) + 4, 6), rmax)
    try:
        prev = _run_at_radius(kernel, beta, path, max(r // 2, 3), pinned, options.series_tolerance)
    except AbsorbedAllError:
        prev = -math.inf
    while True:
        try:
            cur = _run_at_radius(kernel, beta, path, r, pinned, options.series_tolerance)
            cert = abs(cur - prev)
        except AbsorbedAllError:
            if r >= rmax:
                raise
            cur, cert = -math.inf, math.inf
        if cert < options.certificate_tolerance:
            return result(cur, cert, r)
        if r >= rmax:
            raise ToleranceNotMetError(
                f"certificate {cert:.3e} at radius cap {rmax} "
                f"(tolerance {options.certificate_tolerance:.3e})"
            )
        prev = cur
        r = min(2 * r, rmax)


def pinned_log_partition(
    kernel: JumpKernel,
    beta: float,
    path: DisorderPath,
    options: SolverOptions = SolverOptions(),
) -> PartitionResult:
    """log of the reward-weighted probability of ending on the defect."""
    return _log_partition(kernel, beta, path, True, options)


def free_log_partition(
    kernel: JumpKernel,
    beta: float,
    path: DisorderPath,
    options: SolverOptions = SolverOptions(),
) -> PartitionResult:
    """log of the reward-weighted mass with a free right end."""
    return _log_partition(kernel, beta, path, False, options)


def interval_log_partition(
    kernel: JumpKernel,
    beta: float,
    path: DisorderPath,
    t1: float,
    t2: float,
    options: SolverOptions = SolverOptions(),
) -> PartitionResult:
    """Pinned log partition over [t1, t2]: start on the defect at t1, end on
    it at t2, rewarding time together in between.

    Concatenation is consistent: a jump exactly at the split time is charged
    to the left factor, so splitting [0, t] at any interior point gives two
    factors whose product never exceeds the whole.
    """
    return pinned_log_partition(kernel, beta, path.restricted(t1, t2), options)


def mean_local_time(
    kernel: JumpKernel,
    beta: float,
    path: DisorderPath,
    options: SolverOptions = SolverOptions(),
    step: float = 1e-4,
    pinned: bool = True,
) -> float:
    """Expected time on the defect under the reward measure, by a centered
    difference of the log partition function in the coupling.

    The derivative of the log partition function in beta is exactly the mean
    occupation; the result is clamped to its a priori range [0, horizon].
    """
    if beta <= step:
        raise ValueError("beta too small for the difference step")
    # reuse one converged radius for both sides so the difference is smooth
    base = _log_partition(kernel, beta, path, pinned, options)
    fixed = replace(options, fixed_radius=base.radius)
    up = _log_partition(kernel, beta + step, path, pinned, fixed)
    dn = _log_partition(kernel, beta - step, path, pinned, fixed)
    slope = (up.log_value - dn.log_value) / (2.0 * step)
    return min(max(slope, 0.0), path.horizon)
