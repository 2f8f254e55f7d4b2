"""Exact solution of the averaged pinning problem.

Averaging over the defect walk reduces the model to a homopolymer: a rate-1
walk rewarded at the origin with an effective coupling beta/(1+rho) and time
rescaled by (1+rho).  The free energy solves a scalar equation in the
Laplace transform of the return probability, and everything else (contact
fraction, wet-interval rate, excursion tilt) follows from that root.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .walks import DivergentError, JumpKernel, green_function, laplace_p0


class NotApplicableError(ValueError):
    """The requested quantity is undefined for these parameters."""


@dataclass(frozen=True)
class AnnealedSolution:
    """Solved averaged model at coupling beta, defect rate rho.

    free_energy is the full averaged rate; growth_rate is the root b of the
    reduced (rho = 0) problem at the effective coupling, which parameterizes
    the excursion tilt.  wet_rate is the exponential rate of pinned stretch
    lengths in the reduced time scale; residual is |beta_eff * phat(b) - 1|
    at the root, 0 exactly in the delocalized phase.
    """

    beta: float
    rho: float
    dimension: int
    free_energy: float
    growth_rate: float
    contact_fraction: float
    wet_rate: float
    localized: bool
    residual: float

    @property
    def beta_effective(self) -> float:
        return self.beta / (1.0 + self.rho)


def critical_point(kernel: JumpKernel, rho: float = 0.0) -> float:
    """Coupling where the averaged free energy becomes positive.

    (1 + rho) / G for transient walks; 0 when the walk is recurrent (any
    positive reward localizes).
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if kernel.dimension <= 2:
        return 0.0
    return (1.0 + rho) / green_function(kernel).value


def _solve_root(kernel: JumpKernel, beta: float) -> tuple[float, float]:
    """Root b > 0 of phat(b) = 1/beta and the residual |beta phat(b) - 1|."""
    target = 1.0 / beta
    lo = 1e-18
    hi = max(beta - 1.0 + 1.0 / beta, 1e-6)
    while laplace_p0(kernel, hi).value > target:
        hi *= 2.0
    b = optimize.brentq(
        lambda x: laplace_p0(kernel, x).value - target, lo, hi, xtol=1e-18, rtol=8.9e-16
    )
    residual = abs(beta * laplace_p0(kernel, b).value - 1.0)
    return b, residual


def solve_pure(kernel: JumpKernel, beta: float) -> AnnealedSolution:
    """Solve the rho = 0 problem: walk pinned to a standing target."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    d = kernel.dimension
    if d >= 3:
        g = green_function(kernel).value
        if beta * g <= 1.0:
            return AnnealedSolution(
                beta=beta,
                rho=0.0,
                dimension=d,
                free_energy=0.0,
                growth_rate=0.0,
                contact_fraction=0.0,
                wet_rate=0.0,
                localized=False,
                residual=0.0,
            )
    b, residual = _solve_root(kernel, beta)
    lp = laplace_p0(kernel, b)
    contact = -lp.value**2 / lp.derivative
    return AnnealedSolution(
        beta=beta,
        rho=0.0,
        dimension=d,
        free_energy=b,
        growth_rate=b,
        contact_fraction=contact,
        wet_rate=1.0 - beta + b,
        localized=True,
        residual=residual,
    )


def solve_annealed(kernel: JumpKernel, beta: float, rho: float) -> AnnealedSolution:
    """Solve the averaged model: reduce to the pure problem at coupling
    beta/(1+rho), then scale rates back by (1+rho)."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    scale = 1.0 + rho
    pure = solve_pure(kernel, beta / scale)
    return AnnealedSolution(
        beta=beta,
        rho=rho,
        dimension=pure.dimension,
        free_energy=scale * pure.free_energy,
        growth_rate=pure.growth_rate,
        contact_fraction=pure.contact_fraction,
        wet_rate=pure.wet_rate,
        localized=pure.localized,
        residual=pure.residual,
    )


def pure_free_energy(kernel: JumpKernel, beta: float) -> float:
    return solve_pure(kernel, beta).free_energy


def annealed_free_energy(kernel: JumpKernel, beta: float, rho: float) -> float:
    return solve_annealed(kernel, beta, rho).free_energy


def excursion_laplace(kernel: JumpKernel, b: float) -> float:
    """Transform of the first-return time density at b: 1 + b - 1/phat(b).

    At the solved growth rate this equals the wet rate, which is the
    acceptance probability of tilted excursion sampling.
    """
    return 1.0 + b - 1.0 / laplace_p0(kernel, b).value


def contact_fraction(kernel: JumpKernel, beta: float) -> float:
    """Asymptotic fraction of time pinned, d(free energy)/d(coupling)."""
    return solve_pure(kernel, beta).contact_fraction


def contact_fraction_fd(kernel: JumpKernel, beta: float, h: float = 2e-3) -> float:
    """Contact fraction by a 4-point finite-difference stencil on the free
    energy, an independent route for cross-validation.

    The stencil cancels the h^2 and h^4 terms; h around 2e-3 balances that
    against rounding in the root solve.
    """
    if beta <= 2 * h:
        raise ValueError("beta too small for the stencil width")
    f = [pure_free_energy(kernel, beta + k * h) for k in (-2, -1, 1, 2)]
    return (8.0 * (f[2] - f[1]) - (f[3] - f[0])) / (12.0 * h)


@dataclass(frozen=True)
class OnsetFit:
    """Least-squares power law for the free energy near the transition."""

    exponent: float
    log_prefactor: float
    distances: np.ndarray
    values: np.ndarray

    @property
    def prefactor(self) -> float:
        return math.exp(self.log_prefactor)


def onset_exponent(
    kernel: JumpKernel,
    distances: np.ndarray | None = None,
    rho: float = 0.0,
) -> OnsetFit:
    """Fit free_energy = C * (beta - beta_c)^alpha just above the transition.

    distances are coupling offsets from the critical point; default is 8
    log-spaced points per decade over [1e-4, 1e-2].  Requires at least 8
    points on a log-log grid, fitted by ordinary least squares.
    """
    if distances is None:
        distances = np.geomspace(1e-4, 1e-2, 17)
    distances = np.asarray(distances, dtype=float)
    if len(distances) < 8:
        raise ValueError("need at least 8 grid points for a power-law fit")
    if np.any(distances <= 0):
        raise ValueError("distances must be positive")
    bc = critical_point(kernel, rho)
    vals = np.array([annealed_free_energy(kernel, bc + x, rho) for x in distances])
    if np.any(vals <= 0):
        raise ValueError("free energy not positive on the fit window")
    slope, intercept = np.polyfit(np.log(distances), np.log(vals), 1)
    return OnsetFit(
        exponent=float(slope),
        log_prefactor=float(intercept),
        distances=distances,
        values=vals,
    )


def smoothing_envelope(kernel: JumpKernel, rho: float, beta: float, beta_c: float) -> float:
    """Quadratic cap on the quenched free energy above its critical point:
    (3 d G^2 / rho) (beta - beta_c)^2, zero below.

    Defined for transient walks with rho > 0; the bound degrades as 1/rho
    and has no content for the averaged (rho = 0) problem.
    """
    if rho <= 0:
        raise NotApplicableError("the smoothing cap needs a moving defect (rho > 0)")
    try:
        g = green_function(kernel).value
    except DivergentError as exc:
        raise NotApplicableError("the smoothing cap needs a transient walk (d >= 3)") from exc
    gap = beta - beta_c
    if gap <= 0:
        return 0.0
    return 3.0 * kernel.dimension * g * g * gap * gap / rho
