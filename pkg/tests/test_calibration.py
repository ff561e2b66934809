"""Tests for bend-line fitting, fiducial registration, and power budget."""

import math

import numpy as np
import pytest

from steerfiber import (
    BendSample,
    RegistrationResult,
    bend_loss,
    fit_bend_line,
    max_tendon_displacement,
    neutral_plane,
    power_budget,
    prototype_design,
    register_fiducials,
    bend_angle,
)
from steerfiber.calibration import (
    BEND_LOSS_AT_MIN_RADIUS,
    BEND_LOSS_DECAY_PER_MM,
    COUPLING_EFFICIENCY,
    FIBER_MIN_RADIUS_MM,
)

from _oracles import random_rotation, rigid_fit


def test_bend_sample_validation():
    BendSample(dl=0.5, phi=1.0)
    with pytest.raises(ValueError):
        BendSample(dl=-0.1, phi=1.0)
    with pytest.raises(ValueError):
        BendSample(dl=math.nan, phi=1.0)
    with pytest.raises(ValueError):
        BendSample(dl=0.1, phi=math.inf)


def test_fit_recovers_exact_line():
    rng = np.random.default_rng(2)
    for _ in range(20):
        slope = rng.uniform(-5, 5)
        intercept = rng.uniform(-2, 2)
        dls = np.sort(rng.uniform(0, 2, size=12))
        samples = [BendSample(dl, slope * dl + intercept) for dl in dls]
        m, b, r2 = fit_bend_line(samples)
        assert m == pytest.approx(slope, abs=1e-10)
        assert b == pytest.approx(intercept, abs=1e-10)
        assert r2 >= 1.0 - 1e-12


def test_fit_reports_noise_in_r_squared():
    rng = np.random.default_rng(4)
    dls = np.linspace(0, 2, 40)
    noise = rng.normal(0.0, 0.05, size=len(dls))
    samples = [BendSample(dl, 2.0 * dl + n) for dl, n in zip(dls, noise)]
    m, _, r2 = fit_bend_line(samples)
    assert 0.9 < r2 < 1.0
    assert m == pytest.approx(2.0, abs=0.1)


def test_fit_requires_two_distinct_points():
    with pytest.raises(ValueError):
        fit_bend_line([BendSample(0.5, 1.0)])
    with pytest.raises(ValueError):
        fit_bend_line([BendSample(0.5, 1.0), BendSample(0.5, 2.0)])


def test_fit_constant_angles():
    # flat response: zero slope; exact fit means r^2 of 1 by convention
    samples = [BendSample(dl, 0.5) for dl in (0.0, 0.5, 1.0)]
    m, b, r2 = fit_bend_line(samples)
    assert m == pytest.approx(0.0, abs=1e-12)
    assert b == pytest.approx(0.5)
    assert r2 == 1.0


def test_fit_two_point_line():
    m, b, _ = fit_bend_line([BendSample(0.0, 0.0), BendSample(1.0, 1.0)])
    assert m == pytest.approx(1.0)
    assert b == pytest.approx(0.0, abs=1e-12)


def test_kinematics_is_linear_in_tendon_pull():
    # total tip angle = n * dl_per_notch / (r_i + ybar), no intercept
    d = prototype_design()
    dls = np.linspace(0.0, max_tendon_displacement(d) / d.n, 25)
    samples = [BendSample(dl, bend_angle(d, d.n * dl)) for dl in dls]
    m, b, r2 = fit_bend_line(samples)
    expect = d.n / (d.r_i + neutral_plane(d))
    assert r2 >= 1.0 - 1e-9
    assert m == pytest.approx(expect, rel=1e-6)
    assert b == pytest.approx(0.0, abs=1e-9)


def test_fit_reports_resting_curvature_as_intercept():
    # a uniform angular offset moves only the intercept
    d = prototype_design()
    offset = math.radians(10.0)
    dls = np.linspace(0.0, max_tendon_displacement(d) / d.n, 25)
    samples = [BendSample(dl, bend_angle(d, d.n * dl) + offset) for dl in dls]
    m, b, _ = fit_bend_line(samples)
    assert m == pytest.approx(d.n / (d.r_i + neutral_plane(d)), rel=1e-6)
    assert b == pytest.approx(offset, abs=1e-9)


def test_registration_recovers_random_rigid_transforms():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(4, 12))
        src = rng.uniform(-30, 30, size=(n, 3))
        rot = random_rotation(rng)
        trans = rng.uniform(-50, 50, size=3)
        dst = src @ rot.T + trans
        res = register_fiducials(src, dst)
        assert res.rms_error < 1e-9
        assert np.allclose(res.rotation, rot, atol=1e-9)
        assert np.allclose(res.translation, trans, atol=1e-8)
        assert np.allclose(res.apply(src), dst, atol=1e-8)


def test_registration_matches_independent_solver_under_noise():
    rng = np.random.default_rng(15)
    src = rng.uniform(-20, 20, size=(10, 3))
    rot = random_rotation(rng)
    dst = src @ rot.T + np.array([3.0, -4.0, 5.0]) + rng.normal(0, 0.1, size=src.shape)
    res = register_fiducials(src, dst)
    ref_rot, ref_t = rigid_fit(src, dst)
    assert np.allclose(res.rotation, ref_rot, atol=1e-6)
    assert np.allclose(res.translation, ref_t, atol=1e-6)
    assert 0.0 < res.rms_error < 0.3


def test_registration_never_reflects():
    rng = np.random.default_rng(21)
    for _ in range(20):
        src = rng.uniform(-10, 10, size=(5, 3))
        dst = rng.uniform(-10, 10, size=(5, 3))
        res = register_fiducials(src, dst)
        assert np.linalg.det(res.rotation) == pytest.approx(1.0, abs=1e-9)


def test_registration_rejects_degenerate_input():
    line = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [3.0, 3.0, 3.0]])
    spread = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ValueError, match="source"):
        register_fiducials(line, spread)
    with pytest.raises(ValueError, match="destination"):
        register_fiducials(spread, line)
    with pytest.raises(ValueError):
        register_fiducials(spread[:2], spread[:2])
    with pytest.raises(ValueError):
        register_fiducials(spread, spread[:3])
    bad = spread.copy()
    bad[0, 0] = math.nan
    with pytest.raises(ValueError):
        register_fiducials(bad, spread)


def test_registration_result_apply_shape():
    res = RegistrationResult(
        rotation=np.eye(3), translation=np.array([1.0, 2.0, 3.0]), rms_error=0.0
    )
    out = res.apply(np.zeros((4, 3)))
    assert out.shape == (4, 3)
    assert np.allclose(out, [1.0, 2.0, 3.0])


def test_bend_loss_boundaries():
    with pytest.raises(ValueError):
        bend_loss(FIBER_MIN_RADIUS_MM - 0.01)
    assert bend_loss(FIBER_MIN_RADIUS_MM) == pytest.approx(BEND_LOSS_AT_MIN_RADIUS)
    assert bend_loss(math.inf) == 0.0


def test_bend_loss_decay_profile():
    r = FIBER_MIN_RADIUS_MM + 2.0
    expect = BEND_LOSS_AT_MIN_RADIUS * math.exp(-2.0 * BEND_LOSS_DECAY_PER_MM)
    assert bend_loss(r) == pytest.approx(expect, rel=1e-12)
    radii = np.linspace(FIBER_MIN_RADIUS_MM, 30.0, 50)
    losses = [bend_loss(r) for r in radii]
    assert all(a > b for a, b in zip(losses, losses[1:]))


def test_power_budget_at_tightest_bend():
    out = power_budget(10.0, 6.0)
    assert out == pytest.approx(10.0 * 0.545 * (1.0 - 0.045), abs=1e-12)
    assert out == pytest.approx(5.20475, abs=1e-12)


def test_power_budget_straight_run():
    assert power_budget(10.0, math.inf) == pytest.approx(10.0 * COUPLING_EFFICIENCY)


def test_power_budget_validation():
    with pytest.raises(ValueError):
        power_budget(-1.0, 10.0)
    with pytest.raises(ValueError):
        power_budget(10.0, 5.0)
