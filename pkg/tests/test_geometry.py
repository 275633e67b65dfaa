import math

import numpy as np
import pytest

from robinlab.geometry import DomainSpec, field_constants, star_constants_on_curve, steiner_volume, summarize


def test_disk_summary():
    g = summarize(DomainSpec.disk(1.0))
    assert (g.V, g.S) == pytest.approx((math.pi, 2 * math.pi))
    assert g.rho == pytest.approx(2 * math.sqrt(math.pi))
    assert (g.t_plus, g.delta0, g.delta1, g.kappa_max) == pytest.approx((1, 1, 1, 1))
    assert summarize(DomainSpec.disk(2.0)).rho == pytest.approx(2 * math.sqrt(math.pi), rel=1e-14)


def test_square_summary():
    g = summarize(DomainSpec.rectangle(1.0, 1.0))
    assert (g.V, g.S, g.rho, g.inradius) == pytest.approx((1, 4, 4, 0.5))
    assert g.diameter == pytest.approx(math.sqrt(2))
    assert g.kappa_max is None and g.t_plus is None


def test_smoothed_polygon_summary_matches_shapely_buffer():
    from shapely.geometry import Polygon

    verts = [(0, 0), (3, 0), (3, 2), (0, 2)]
    spec = DomainSpec.smoothed_polygon(verts, 0.4)
    g = summarize(spec)
    # erode by rc then dilate by rc gives the rounded rectangle
    p = Polygon(verts).buffer(-0.4, join_style="mitre").buffer(0.4, quad_segs=2048)
    assert g.V == pytest.approx(p.area, rel=1e-6)
    assert g.S == pytest.approx(p.length, rel=1e-6)
    assert g.t_plus == pytest.approx(0.4)


@pytest.mark.parametrize("spec", [DomainSpec.disk(0.7, h=-1.0), DomainSpec.rectangle(2, 1, h=0.5),
                                  DomainSpec.smoothed_polygon([(0, 0), (2, 0), (1, 1.5)], 0.2, h=-0.3)])
@pytest.mark.parametrize("t", [0.1, 3.0])
def test_scale_covariance(spec, t):
    g, gt = summarize(spec), summarize(spec.scaled(t))
    assert gt.V == pytest.approx(t * t * g.V, rel=1e-12)
    assert gt.S == pytest.approx(t * g.S, rel=1e-12)
    assert gt.rho == pytest.approx(g.rho, rel=1e-12)
    if g.t_plus is not None:
        assert gt.t_plus == pytest.approx(t * g.t_plus, rel=1e-12)
    assert spec.scaled(t).h.H() == pytest.approx(spec.h.H() / t, rel=1e-12)


def test_rejects_bad_domains():
    with pytest.raises(ValueError):
        DomainSpec.convex_polygon([(0, 0), (2, 0), (1, 0.2), (1, 2)])
    with pytest.raises(ValueError):
        DomainSpec.convex_polygon([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(ValueError):
        DomainSpec.disk(0.0)


def test_steiner():
    sq = DomainSpec.rectangle(1, 1)
    assert steiner_volume(sq, 0.5) == pytest.approx(1 + 2 + math.pi / 4)
    assert steiner_volume(DomainSpec.disk(1.0), 1.0) == pytest.approx(4 * math.pi)
    assert steiner_volume(sq, 0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        steiner_volume(sq, -0.1)


def test_star_constants_disk_and_square():
    fc = field_constants(DomainSpec.disk(1.0))
    assert (fc.gamma_F, fc.Gamma1, fc.Gamma2) == pytest.approx((1, 2, 2))
    fc = field_constants(DomainSpec.rectangle(1, 1, origin=(-0.5, -0.5)))
    assert (fc.gamma_F, fc.Gamma1, fc.Gamma2) == pytest.approx((0.5, 4, 2 * math.sqrt(2)))


def test_star_constants_ellipse():
    gam, G1, G2, _ = star_constants_on_curve(lambda s: np.column_stack([2 * np.cos(s), np.sin(s)]),
                                             lambda s: np.column_stack([-2 * np.sin(s), np.cos(s)]))
    # x·nu = 2/|(cos t, 2 sin t)|, minimum 1 at t = pi/2
    th = np.linspace(0, 2 * np.pi, 200001)
    brute = np.min(2 / np.hypot(np.cos(th), 2 * np.sin(th)))
    assert gam == pytest.approx(brute, rel=1e-8)
    assert (gam, G1, G2) == pytest.approx((1, 2, 4), rel=1e-7)


def test_star_constants_scaling():
    spec = DomainSpec.smoothed_polygon([(0, 0), (2, 0), (2, 1), (0, 1)], 0.25)
    a, b = field_constants(spec), field_constants(spec.scaled(3.0))
    assert b.Gamma2 == pytest.approx(a.Gamma2, rel=1e-10)
    assert b.Gamma1 == pytest.approx(a.Gamma1 / 3, rel=1e-10)


def test_not_star_shaped_rejected():
    with pytest.raises(ValueError):
        field_constants(DomainSpec.disk(1.0), center=(2.0, 0.0))


def test_round_trip_json():
    spec = DomainSpec.smoothed_polygon([(0, 0), (2, 0), (1, 1.5)], 0.2, h=[0.1, -0.2, 0.3, 0.0, 0.0, 1.0])
    assert DomainSpec.from_json(spec.to_json()) == spec
