import math

import numpy as np
import pytest
from scipy import special

from robinlab import bounds, spectra
from robinlab.geometry import DomainSpec, field_constants, summarize

J0 = special.jn_zeros(0, 1)[0]


def test_universal_constants_n2():
    u = bounds.universal_constants(2)
    assert u["omega_n"] == pytest.approx(math.pi)
    assert u["j_bessel"] == pytest.approx(J0, abs=1e-12)
    assert u["gamma_n"] == pytest.approx(4 / J0 ** 2, abs=1e-10)
    assert u["gamma_n"] == pytest.approx(0.69166, abs=1e-5)
    assert u["fk_product"] == pytest.approx(J0 ** 2 * math.pi, rel=1e-12)


def test_universal_constants_n3():
    u = bounds.universal_constants(3)
    assert u["j_bessel"] == pytest.approx(math.pi, abs=1e-12)
    assert u["gamma_n"] == pytest.approx(4.5 / math.pi ** 2, rel=1e-10)


def test_gamma_below_one_and_decreasing():
    g = [bounds.universal_constants(n)["gamma_n"] for n in range(2, 11)]
    assert all(x < 1 for x in g)
    assert all(a > b for a, b in zip(g, g[1:]))
    for n in range(2, 11):
        # first zero of J_{(n-2)/2} from scipy's real-order Bessel function
        nu = (n - 2) / 2
        from scipy.optimize import brentq
        x = np.linspace(0.5, 12, 2000)
        v = special.jv(nu, x)
        i = np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0][0]
        j = brentq(lambda t: special.jv(nu, t), x[i], x[i + 1], xtol=1e-15)
        assert bounds.universal_constants(n)["j_bessel"] == pytest.approx(j, rel=1e-11)


def test_universal_constants_rejects_n1():
    with pytest.raises(ValueError):
        bounds.universal_constants(1)


def test_rayleigh_bound():
    assert bounds.rayleigh_bound(7.5, 3.0, 5.0, 0.0) == 7.5
    assert bounds.rayleigh_bound(4, 2, 2, 1) == pytest.approx(10 + 4 * math.sqrt(6))
    assert bounds.rayleigh_bound(0, 2, 2, 1) == pytest.approx((math.sqrt(2) + 2) ** 2)
    with pytest.raises(ValueError):
        bounds.rayleigh_bound(-3, 2, 2, 1)


@pytest.mark.parametrize("mu", [-2.5, -1.0, 0.0, 3.0, 40.0])
def test_quadratic_rayleigh_form(mu):
    G1, G2, H = 2.0, 2.0, 1.0
    x = bounds.rayleigh_bound_quadratic(mu, G1, G2, H)
    y = math.sqrt(x)
    # positive root of y^2 - G2 H y - (mu + G1 H) = 0
    assert y * y - G2 * H * y - (mu + G1 * H) == pytest.approx(0.0, abs=1e-10)
    if mu + G1 * H >= 0:
        assert x <= bounds.rayleigh_bound(mu, G1, G2, H) + 1e-12


def test_robin_eig_lower():
    assert bounds.robin_eig_lower(8.0, 0.5, 2, 1, 0.0) == pytest.approx(4.0)
    assert bounds.robin_eig_lower(10.0, 0.5, 2, 1, 1) == pytest.approx(1.0)
    for eta in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            bounds.robin_eig_lower(10.0, eta, 2, 1, 1)


def test_robin_eig_lower_on_disk_h_minus_one():
    rob = spectra.disk_robin_spectrum(1.0, -1.0, 50).expanded()[:50]
    neu = spectra.disk_robin_spectrum(1.0, 0.0, 50).expanded()[:50]
    fc = field_constants(DomainSpec.disk(1.0, h=-1.0))
    for k in range(50):
        eta, best = bounds.robin_eig_lower_best(neu[k], fc.K1, fc.K2, fc.H)
        assert rob[k] >= best - 1e-9
        for e in np.linspace(0.05, 0.95, 19):
            assert bounds.robin_eig_lower(neu[k], e, fc.K1, fc.K2, fc.H) <= best + 1e-9


def test_robin_count_upper():
    neu = spectra.disk_robin_spectrum(1.0, 0.0, 400)
    count = lambda m: spectra.counting_function(neu, m)
    assert bounds.robin_count_upper(30.0, 0.5, 2, 1, 0.0, count) == count(60.0)
    assert bounds.robin_count_upper(-4.0, 0.5, 2, 1, 0.0, count) == 0
    rob = spectra.disk_robin_spectrum(1.0, -1.0, 100)
    exact = spectra.counting_function(rob, 50.0)
    for eta in np.linspace(0.1, 0.9, 9):
        assert bounds.robin_count_upper(50.0, float(eta), 2, 1, 1, count) >= exact


def test_neumann_count_convex():
    sq = DomainSpec.rectangle(1, 1)
    assert bounds.neumann_count_convex(math.pi ** 2, sq) == pytest.approx(2 * (5 + math.pi))
    disk = DomainSpec.disk(1.0)
    assert bounds.neumann_count_convex(100.0, disk) == pytest.approx(2 / math.pi ** 2 * 100 * math.pi * (1 + math.pi / 10) ** 2)
    assert bounds.neumann_count_convex(100.0 / 9, DomainSpec.disk(3.0)) == pytest.approx(
        bounds.neumann_count_convex(100.0, disk), rel=1e-12)


def test_neumann_count_convex_c2():
    v = bounds.neumann_count_convex_c2(100.0, math.pi, 2 * math.pi, 1.0)
    assert v == pytest.approx(200 / math.pi + 4 * math.pi * (10 / math.pi + 0.5))
    assert bounds.neumann_count_convex_c2(1e-14, math.pi, 2 * math.pi, 1.0) == pytest.approx(2 * math.pi, rel=1e-6)
    with pytest.raises(ValueError):
        bounds.neumann_count_convex_c2(10.0, 1.0, 4.0, None)


def test_cs_bounds_disk():
    g = summarize(DomainSpec.disk(1.0))
    assert bounds.cs_eig_bound(g.V, g.delta1, g.rho, 0.0) == pytest.approx(17 * math.pi)
    assert bounds.cs_count_bound(g.V, g.t_plus, g.rho, 0.0) == pytest.approx(17 * math.pi ** 2)
    assert bounds.negative_count_bound(g.V, g.t_plus, g.rho, 1.0) == pytest.approx(6 * math.pi)
    with pytest.raises(ValueError):
        bounds.cs_eig_bound(-1.0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("t", [0.1, 0.5, 2.0, 10.0])
def test_cs_scaling(t):
    spec = DomainSpec.disk(1.0, h=-1.0)
    g, gt = summarize(spec), summarize(spec.scaled(t))
    H, Ht = spec.h.H(), spec.scaled(t).h.H()
    e, et = bounds.cs_eig_bound(g.V, g.delta1, g.rho, H), bounds.cs_eig_bound(gt.V, gt.delta1, gt.rho, Ht)
    c, ct = bounds.cs_count_bound(g.V, g.t_plus, g.rho, H), bounds.cs_count_bound(gt.V, gt.t_plus, gt.rho, Ht)
    assert et == pytest.approx(e / t ** 2, rel=1e-10)
    assert ct == pytest.approx(c, rel=1e-10)


def test_ball_of_eigenvalue():
    assert bounds.ball_of_eigenvalue(J0 ** 2) == pytest.approx(math.pi)
    assert bounds.ball_of_eigenvalue(4 * 7.0) == pytest.approx(bounds.ball_of_eigenvalue(7.0) / 4)
    with pytest.raises(ValueError):
        bounds.ball_of_eigenvalue(0.0)
    mu = spectra.disk_robin_spectrum(1.0, "dirichlet", 2000).expanded()[:2000]
    k = np.arange(1, 2001)
    ratio = np.array([bounds.ball_of_eigenvalue(m) for m in mu]) * k / math.pi
    assert ratio.max() < 1.5


def test_calibrate_constant():
    g = summarize(DomainSpec.disk(1.0))
    inp = {"V": g.V, "delta1": g.delta1, "rho": g.rho, "H": 0.0}
    assert bounds.calibrate_constant([(inp, 17 * math.pi)], "cs_eig")["C"] == pytest.approx(1.0)
    # Courant-sharp disk eigenvalues: the largest is j_{2,1}^2
    sharp = [special.jn_zeros(0, 1)[0] ** 2, special.jn_zeros(1, 1)[0] ** 2, special.jn_zeros(2, 1)[0] ** 2]
    res = bounds.calibrate_constant([(inp, m) for m in sharp], "cs_eig")
    assert res["C"] <= 1 and res["argmax"] == 2
    assert res["C"] == pytest.approx(sharp[2] / (17 * math.pi))
    two = bounds.calibrate_constant([(inp, 10.0), (inp, 30.0)], "cs_eig")
    assert two["C"] == pytest.approx(max(two["ratios"]))
    with pytest.raises(ValueError):
        bounds.calibrate_constant([], "cs_eig")


def test_bound_table_scale_checks():
    rows = bounds.bound_table(DomainSpec.disk(1.0, h=-1.0))
    names = {r.name for r in rows}
    for want in ("robin_count_upper", "neumann_count_convex_c2", "cs_eig_bound", "cs_count_bound"):
        assert want in names
    assert any(n.startswith("robin_eig_lower") for n in names)
    assert max(r.scale_check for r in rows) < 1e-10


def test_distance_field_family():
    assert bounds.distance_field_bound(0.5, 2.0) == pytest.approx(4.0)
    res = bounds.calibrate_constant([({"delta0": 0.5}, 3.0), ({"delta0": 0.25}, 2.0)], "distance_field")
    assert res["C"] == pytest.approx(1.5) and res["argmax"] == 0
    with pytest.raises(ValueError):
        bounds.calibrate_constant([({"delta0": 0.5}, 3.0)], "unknown")
