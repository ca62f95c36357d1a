"""Cutoff, mute and region tests."""

import math

import numpy as np
import pytest

from ellipsar.cutoffs import (
    REGION_BAND,
    REGION_BOUNDARY,
    REGION_OUTER,
    REGION_PRECRITICAL,
    bump,
    classify_region,
    in_critical_box,
    mute_f,
    mute_g,
    psi1,
    psi2,
    region_mute,
    select_epsilon,
)
from ellipsar.errors import ModeError, SelectionError
from ellipsar.geometry import (
    AcquisitionConfig,
    critical_axis_points,
    critical_circle,
    critical_times,
    ellipse_points,
    range_ratio_circle,
    ratio_threshold,
    threshold_time,
)

CFG4 = AcquisitionConfig(alpha=-4.0, h=1.0, s_min=0.5, s_max=2.0, t_min=2.0, t_max=16.0)
CFG_WIDE = AcquisitionConfig(alpha=-4.0, h=1.0, s_min=0.05, s_max=2.0, t_min=2.0, t_max=16.0)


# ---------------------------------------------------------------- bump


def test_bump_endpoints_exact():
    assert bump(0.5, 1.0, 2.0) == 1.0
    assert bump(1.0, 1.0, 2.0) == 1.0
    assert bump(2.0, 1.0, 2.0) == 0.0
    assert bump(7.0, 1.0, 2.0) == 0.0


def test_bump_monotone_and_bounded():
    u = np.linspace(0.0, 3.0, 1001)
    w = bump(u, 1.0, 2.0)
    assert np.all(w <= 1.0) and np.all(w >= 0.0)
    assert np.all(np.diff(w) <= 0.0)
    # strictly decreasing away from the ends (at the ends the glue term
    # underflows and the weight saturates in float arithmetic)
    inner = (u > 1.1) & (u < 1.9)
    assert np.all(np.diff(w[inner]) < 0.0)


def test_bump_flat_to_high_order_at_ends():
    # one-sided finite differences of the first derivative stay tiny at the ends
    d = 1e-3
    for u0 in (1.0, 2.0):
        fd = (bump(u0 + d, 1.0, 2.0) - bump(u0 - d, 1.0, 2.0)) / (2 * d)
        assert abs(fd) < 2e-3


def test_bump_rejects_bad_interval():
    with pytest.raises(ValueError):
        bump(1.0, 2.0, 2.0)


# ---------------------------------------------------------------- selection


def test_select_epsilon_satisfies_all_constraints():
    sel = select_epsilon(CFG4)
    b = CFG4.beta
    circ = range_ratio_circle(CFG4, sel.s_ref, sel.k_ref)
    assert circ.kind == "circle"
    assert circ.radius > 12.0 * sel.eps
    assert sel.eps < (b - 1.0) / 6.0
    assert sel.eps < (1.0 - sel.k_ref) / 6.0
    assert sel.eps < 1.0 / 24.0
    assert ratio_threshold(CFG4, sel.s_ref) < sel.k_ref < 1.0
    assert sel.s_ref == CFG4.s_min


def test_select_epsilon_constraints_across_geometries():
    rng = np.random.default_rng(41)
    for _ in range(25):
        alpha = -float(rng.uniform(1.3, 9.0))
        h = float(rng.uniform(0.2, 2.0))
        cfg = AcquisitionConfig(alpha=alpha, h=h, s_min=0.1, s_max=9.0)
        s1 = abs(cfg.s0) * float(rng.uniform(1.05, 3.0))
        sel = select_epsilon(cfg, s_start=s1)
        circ = range_ratio_circle(cfg, sel.s_ref, sel.k_ref)
        assert circ.radius > 12.0 * sel.eps
        assert sel.eps < (cfg.beta - 1.0) / 6.0
        assert sel.eps < (1.0 - sel.k_ref) / 6.0
        assert sel.eps < 1.0 / 24.0


def test_select_epsilon_infeasible_modes():
    with pytest.raises(SelectionError):
        select_epsilon(AcquisitionConfig(alpha=2.0, h=1.0, s_min=0.5, s_max=2.0))
    with pytest.raises(SelectionError, match="alpha' = 1/alpha"):
        select_epsilon(AcquisitionConfig(alpha=-0.5, h=1.0, s_min=0.5, s_max=2.0))
    with pytest.raises(SelectionError):
        select_epsilon(CFG4, s_start=0.25)  # below the circle onset 0.3


# ---------------------------------------------------------------- collars


def test_psi1_support():
    sel = select_epsilon(CFG4)
    assert psi1(sel, 0.0) == 1.0
    assert psi1(sel, 0.99 * sel.eps) == 1.0
    assert psi1(sel, 2.01 * sel.eps) == 0.0
    assert psi1(sel, -2.01 * sel.eps) == 0.0
    mid = psi1(sel, 1.5 * sel.eps)
    assert 0.0 < mid < 1.0


def test_psi2_is_one_on_the_critical_circle():
    sel = select_epsilon(CFG4)
    c = critical_circle(CFG4, 1.0)
    theta = np.linspace(0.0, 2.0 * math.pi, 64)
    x1 = c.center_x1 + c.radius * np.cos(theta)
    x2 = c.radius * np.sin(theta)
    assert np.all(psi2(CFG4, sel, 1.0, x1, x2) == 1.0)
    # far off the circle the collar is dead
    assert psi2(CFG4, sel, 1.0, 20.0, 0.5) == 0.0


def test_critical_box_contains_exactly_the_double_degeneracies():
    sel = select_epsilon(CFG4)
    xl, xr = critical_axis_points(CFG4, 1.0)
    assert in_critical_box(CFG4, sel, 1.0, xl, 0.0)
    assert in_critical_box(CFG4, sel, 1.0, xr, 0.0)
    c = critical_circle(CFG4, 1.0)
    # on the circle but off the plane: outside
    assert not in_critical_box(CFG4, sel, 1.0, c.center_x1, c.radius)
    # on the plane but off the circle: outside
    assert not in_critical_box(CFG4, sel, 1.0, c.center_x1, 0.0)


# ---------------------------------------------------------------- data mutes


def test_mute_f_threshold_and_window():
    s = 1.0
    thr = threshold_time(CFG4, s)
    assert mute_f(CFG4, s, thr) == 0.0
    assert mute_f(CFG4, s, thr * 1.0005) == 0.0
    assert mute_f(CFG4, s, thr * 1.0025) == 1.0
    assert mute_f(CFG4, s, 16.0) == 0.0
    assert mute_f(CFG4, s, 15.9) < 1.0
    assert mute_f(CFG4, s, 10.0) == 1.0
    t = np.linspace(2.0, 16.0, 777)
    w = mute_f(CFG4, s, t)
    assert w.shape == t.shape
    assert np.all((w >= 0.0) & (w <= 1.0))


def test_mute_g_zero_at_critical_times():
    # the ellipse at either critical time passes through an avoided point,
    # which is the center of the critical box
    sel = select_epsilon(CFG4)
    t_lo, t_hi = critical_times(CFG4, 1.0)
    assert mute_g(CFG4, sel, 1.0, t_lo) == 0.0
    assert mute_g(CFG4, sel, 1.0, t_hi) == 0.0


def test_mute_g_one_in_mid_band_and_below_threshold():
    sel = select_epsilon(CFG4)
    assert mute_g(CFG4, sel, 1.0, 10.0) == 1.0
    # at mid band the ellipse crosses the circle far from the plane and
    # crosses the plane far from the circle
    pts = ellipse_points(CFG4, 1.0, 10.0, 512)
    assert mute_g(CFG4, sel, 1.0, 2.0) == 1.0  # below threshold: no ellipse
    t = np.array([5.0, 10.0, critical_times(CFG4, 1.0)[0]])
    w = mute_g(CFG4, sel, 1.0, t)
    assert w.shape == (3,)
    assert w[0] == 1.0 and w[1] == 1.0 and w[2] == 0.0


def test_mute_g_trivial_modes():
    cfg_pos = AcquisitionConfig(alpha=2.0, h=1.0, s_min=0.5, s_max=2.0)
    assert mute_g(cfg_pos, None, 1.0, 5.0) == 1.0
    cfg_cm = AcquisitionConfig(alpha=-1.0, h=1.0, s_min=0.5, s_max=2.0)
    assert mute_g(cfg_cm, None, 1.0, 5.0) == 1.0
    with pytest.raises(ValueError):
        mute_g(CFG4, None, 1.0, 10.0)


# ---------------------------------------------------------------- regions


def test_classify_region_frozen_cases():
    assert classify_region(CFG_WIDE, 0.2, 5.0) == REGION_PRECRITICAL
    assert classify_region(CFG_WIDE, 1.0, 6.0) == REGION_BAND
    assert classify_region(CFG_WIDE, 1.0, 15.5) == REGION_OUTER
    assert classify_region(CFG_WIDE, 1.0, 5.0) == REGION_OUTER
    t_lo, t_hi = critical_times(CFG_WIDE, 1.0)
    assert classify_region(CFG_WIDE, 1.0, t_lo) == REGION_BOUNDARY
    assert classify_region(CFG_WIDE, 1.0, t_hi * (1.0 + 5e-7)) == REGION_BOUNDARY
    assert classify_region(CFG_WIDE, 1.0, t_lo * (1.0 + 5e-6)) == REGION_BAND
    assert classify_region(CFG_WIDE, 0.3, 6.0) == REGION_BOUNDARY


def test_classify_region_rejects_modes():
    with pytest.raises(ModeError):
        classify_region(AcquisitionConfig(alpha=2.0, h=1.0, s_min=0.5, s_max=2.0), 1.0, 6.0)
    with pytest.raises(ModeError):
        classify_region(AcquisitionConfig(alpha=-1.0, h=1.0, s_min=0.5, s_max=2.0), 1.0, 6.0)


def test_region_mute_support_is_inside_the_region():
    rng = np.random.default_rng(43)
    labels = {"o1": REGION_PRECRITICAL, "o2": REGION_BAND, "o3": REGION_OUTER}
    for key, want in labels.items():
        hits = 0
        for _ in range(400):
            s = float(rng.uniform(CFG_WIDE.s_min, CFG_WIDE.s_max))
            t = float(rng.uniform(CFG_WIDE.t_min, CFG_WIDE.t_max))
            w = region_mute(CFG_WIDE, key, s, t)
            assert 0.0 <= w <= 1.0
            if w > 0.0:
                assert classify_region(CFG_WIDE, s, t) == want
                hits += 1
        assert hits > 10, f"mute {key} never active in the sampled window"


def test_region_mute_plateaus():
    # mid precritical slow time: full weight regardless of t
    assert region_mute(CFG_WIDE, "o1", 0.175, 9.0) == 1.0
    # center of the band
    t_lo, t_hi = critical_times(CFG_WIDE, 1.0)
    assert region_mute(CFG_WIDE, "o2", 1.0, 0.5 * (t_lo + t_hi)) == 1.0
    # center of the upper outer band
    assert region_mute(CFG_WIDE, "o3", 1.0, 0.5 * (t_hi + CFG_WIDE.t_max)) == 1.0
    assert region_mute(CFG_WIDE, "none", 1.0, 9.0) == 1.0


def test_region_mute_vector_and_aliases():
    t = np.linspace(2.0, 16.0, 301)
    w_o2 = region_mute(CFG_WIDE, "o2", 1.0, t)
    w_band = region_mute(CFG_WIDE, "band", 1.0, t)
    assert np.array_equal(w_o2, w_band)
    with pytest.raises(ValueError):
        region_mute(CFG_WIDE, "o9", 1.0, 9.0)
    with pytest.raises(ModeError):
        region_mute(AcquisitionConfig(alpha=-1.0, h=1.0, s_min=0.5, s_max=2.0), "o2", 1.0, 9.0)
