"""Averaged-model checks against closed forms and internal identities.

The one-dimensional problem has explicit formulas (the Laplace transform of
the return probability is an elementary function), which pin the full solve
path; higher dimensions are held by the residual identity, the transform
identity for the wet rate, and finite-difference cross-checks.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinlab.annealed import (
    NotApplicableError,
    annealed_free_energy,
    contact_fraction,
    contact_fraction_fd,
    critical_point,
    excursion_laplace,
    onset_exponent,
    pure_free_energy,
    smoothing_envelope,
    solve_annealed,
    solve_pure,
)
from pinlab.walks import JumpKernel, green_function

SIMPLE1 = JumpKernel.simple_walk(1)
SIMPLE3 = JumpKernel.simple_walk(3)
SIMPLE5 = JumpKernel.simple_walk(5)
SPREAD1 = JumpKernel.from_weights(1, {(1,): 0.3, (-1,): 0.3, (2,): 0.2, (-2,): 0.2})


def closed_form_1d(beta: float) -> float:
    return math.sqrt(1.0 + beta * beta) - 1.0


def test_pure_free_energy_matches_1d_closed_form():
    for beta in np.geomspace(1e-6, 50.0, 40):
        got = pure_free_energy(SIMPLE1, float(beta))
        assert got == pytest.approx(closed_form_1d(beta), rel=5e-14)


def test_contact_fraction_matches_1d_closed_form():
    for beta in (0.05, 0.3, 1.0, 4.0, 20.0):
        want = beta / math.sqrt(1.0 + beta * beta)
        assert contact_fraction(SIMPLE1, beta) == pytest.approx(want, rel=1e-11)


def test_excursion_transform_1d_closed_form():
    # 1 + b - sqrt(b^2 + 2b); at b = 1 this is 2 - sqrt(3)
    assert excursion_laplace(SIMPLE1, 1.0) == pytest.approx(2.0 - math.sqrt(3.0), abs=1e-14)
    for b in (0.01, 0.4, 3.0):
        want = 1.0 + b - math.sqrt(b * b + 2.0 * b)
        assert excursion_laplace(SIMPLE1, b) == pytest.approx(want, rel=1e-12)


def test_critical_point_values():
    assert critical_point(SIMPLE1) == 0.0
    assert critical_point(JumpKernel.simple_walk(2)) == 0.0
    bc3 = critical_point(SIMPLE3)
    assert bc3 == pytest.approx(0.6594626704490009, abs=1e-12)
    assert bc3 * green_function(SIMPLE3).value == pytest.approx(1.0, abs=1e-14)
    assert critical_point(SIMPLE3, rho=0.5) == pytest.approx(1.5 * bc3, rel=1e-15)


def test_phase_split_3d():
    cold = solve_pure(SIMPLE3, 0.5)
    assert not cold.localized
    assert cold.free_energy == 0.0 and cold.contact_fraction == 0.0
    edge = solve_pure(SIMPLE3, critical_point(SIMPLE3))
    assert not edge.localized and edge.free_energy == 0.0
    warm = solve_pure(SIMPLE3, 0.75)
    assert warm.localized
    assert warm.free_energy == pytest.approx(0.022685337049056734, rel=1e-12)
    assert warm.residual < 1e-10
    assert warm.wet_rate > 0


def test_averaging_shifts_the_transition():
    # beta above the standing-target critical point but below the moving one
    sol = solve_annealed(SIMPLE3, 0.9, 0.5)
    assert sol.beta_effective == pytest.approx(0.6)
    assert not sol.localized and sol.free_energy == 0.0
    hot = solve_annealed(SIMPLE3, 1.2, 0.5)
    assert hot.localized
    assert hot.free_energy == pytest.approx(1.5 * pure_free_energy(SIMPLE3, 0.8), rel=1e-14)


def test_averaged_free_energy_decreases_in_rho():
    for kernel, beta in ((SIMPLE1, 1.1), (SIMPLE3, 1.4)):
        vals = [annealed_free_energy(kernel, beta, r) for r in (0.0, 0.3, 0.8, 2.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_averaged_free_energy_1d_closed_form():
    # (1+rho) closed_form(beta/(1+rho)) = sqrt((1+rho)^2 + beta^2) - (1+rho)
    for beta, rho in ((0.7, 0.4), (2.0, 1.5)):
        want = math.sqrt((1.0 + rho) ** 2 + beta * beta) - (1.0 + rho)
        assert annealed_free_energy(SIMPLE1, beta, rho) == pytest.approx(want, rel=1e-13)


def test_contact_fraction_two_routes_agree():
    cases = [(SIMPLE1, 1.3), (SIMPLE3, 0.75), (SIMPLE3, 2.0), (SIMPLE5, 0.9), (SPREAD1, 0.6)]
    for kernel, beta in cases:
        a = contact_fraction(kernel, beta)
        b = contact_fraction_fd(kernel, beta)
        assert abs(a - b) < 1e-6


def test_contact_fraction_frozen_3d():
    assert contact_fraction(SIMPLE3, 0.75) == pytest.approx(0.43147927649530665, rel=1e-10)


@settings(deadline=None, max_examples=20)
@given(
    beta=st.floats(0.7, 50.0),
    dim=st.sampled_from([1, 3]),
)
def test_solution_identities(beta, dim):
    """Residual and wet-rate identities hold on every solved instance."""
    kernel = JumpKernel.simple_walk(dim)
    sol = solve_pure(kernel, beta)
    assert sol.localized
    assert sol.residual < 1e-10
    k_at_root = excursion_laplace(kernel, sol.growth_rate)
    assert abs(k_at_root - sol.wet_rate) < 1e-10
    assert 0.0 < sol.contact_fraction < 1.0


def test_onset_fit_1d():
    fit = onset_exponent(SIMPLE1)
    assert fit.exponent == pytest.approx(2.0, abs=1e-4)
    assert fit.prefactor == pytest.approx(0.5, rel=1e-3)


def test_onset_fit_validation():
    with pytest.raises(ValueError):
        onset_exponent(SIMPLE1, distances=np.geomspace(1e-4, 1e-2, 5))
    with pytest.raises(ValueError):
        onset_exponent(SIMPLE1, distances=np.array([-1e-3, 1e-3] * 4))


def test_smoothing_envelope():
    bc = critical_point(SIMPLE3, rho=1.0)
    assert smoothing_envelope(SIMPLE3, 1.0, bc - 0.1, bc) == 0.0
    near = smoothing_envelope(SIMPLE3, 1.0, bc + 0.05, bc)
    far = smoothing_envelope(SIMPLE3, 1.0, bc + 0.10, bc)
    assert far == pytest.approx(4.0 * near, rel=1e-12)
    g = green_function(SIMPLE3).value
    assert near == pytest.approx(9.0 * g * g * 0.0025, rel=1e-12)
    # halving rho doubles the cap
    assert smoothing_envelope(SIMPLE3, 0.5, bc + 0.05, bc) == pytest.approx(
        2.0 * near, rel=1e-12
    )


def test_smoothing_envelope_not_applicable():
    with pytest.raises(NotApplicableError):
        smoothing_envelope(SIMPLE3, 0.0, 1.0, 0.9)
    with pytest.raises(NotApplicableError):
        smoothing_envelope(SIMPLE1, 1.0, 1.0, 0.9)


def test_parameter_validation():
    with pytest.raises(ValueError):
        solve_pure(SIMPLE1, 0.0)
    with pytest.raises(ValueError):
        solve_annealed(SIMPLE1, 1.0, -0.1)
    with pytest.raises(ValueError):
        critical_point(SIMPLE3, rho=-1.0)
    with pytest.raises(ValueError):
        contact_fraction_fd(SIMPLE1, 1e-4)
