import math

import numpy as np
import pytest
from scipy import special
from scipy.optimize import brentq

from robinlab import spectra


def test_interval_neumann():
    sp = spectra.interval_robin_spectrum(1.0, 0.0, 0.0, 4)
    np.testing.assert_allclose(sp.expanded(), [0, math.pi ** 2, 4 * math.pi ** 2, 9 * math.pi ** 2], atol=1e-9)


def test_interval_negative_ground_state():
    w = brentq(lambda w: w * math.tanh(w / 2) - 1.0, 1e-6, 10.0, xtol=1e-14)
    sp = spectra.interval_robin_spectrum(1.0, -1.0, -1.0, 1)
    assert sp.expanded()[0] == pytest.approx(-w * w, rel=1e-9)
    assert sp.expanded()[0] == pytest.approx(-2.382, abs=1e-3)


def test_interval_scaling():
    np.testing.assert_allclose(spectra.interval_robin_spectrum(math.pi, 0.0, 0.0, 2).expanded(), [0, 1], atol=1e-10)


def test_rectangle_examples():
    sp = spectra.rectangle_spectrum(1.0, 1.0, 0.0, 4)
    pi2 = math.pi ** 2
    np.testing.assert_allclose(sp.expanded(), [0, pi2, pi2, 2 * pi2], atol=1e-9)
    labels = {tuple(r.label[1:]) for r in sp.records}
    assert labels == {(0, 0), (1, 0), (0, 1), (1, 1)}
    np.testing.assert_allclose(spectra.rectangle_spectrum(1, 1, "dirichlet", 3).expanded(), [2 * pi2, 5 * pi2, 5 * pi2])
    np.testing.assert_allclose(spectra.rectangle_spectrum(2, 1, 0.0, 3).expanded(), [0, pi2 / 4, pi2], atol=1e-9)


def test_rectangle_rejects_piecewise_h():
    with pytest.raises((ValueError, TypeError)):
        spectra.rectangle_spectrum(1, 1, [0.0, 1.0, 0.0, 1.0], 3)


def test_disk_neumann_against_bessel_derivative_zeros():
    sp = spectra.disk_robin_spectrum(1.0, 0.0, 40)
    ref = [0.0]
    for m in range(0, 30):
        for z in special.jnp_zeros(m, 10):
            ref += [z * z] * (1 if m == 0 else 2)
    ref = np.sort(ref)
    mu = sp.expanded()
    np.testing.assert_allclose(mu, ref[:len(mu)], rtol=1e-10, atol=1e-12)
    assert mu[1] == pytest.approx(1.84118 ** 2, rel=1e-4)
    assert sp.records[1].multiplicity == 2


def test_disk_dirichlet_ground_state():
    sp = spectra.disk_robin_spectrum(1.0, "dirichlet", 1)
    assert sp.expanded()[0] == pytest.approx(special.jn_zeros(0, 1)[0] ** 2, rel=1e-12)


@pytest.mark.parametrize("h", [0.5, 1.0, 3.0])
def test_disk_positive_robin_secular(h):
    k = brentq(lambda k: k * special.jvp(0, k) + h * special.jv(0, k), 1e-6, special.jn_zeros(0, 1)[0], xtol=1e-15)
    mu1 = spectra.disk_robin_spectrum(1.0, h, 1).expanded()[0]
    assert mu1 == pytest.approx(k * k, rel=1e-10)
    if h == 1.0:
        assert mu1 == pytest.approx(1.58, abs=0.01)


@pytest.mark.parametrize("h", [-0.5, -1.0, -2.0])
def test_disk_negative_robin_modified_bessel(h):
    # negative eigenvalue -kappa^2 solves kappa I_m'(kappa) + h I_m(kappa) = 0
    sp = spectra.disk_robin_spectrum(1.0, h, 30)
    mu = sp.expanded()
    neg = []
    for m in range(0, 10):
        f = lambda s: s * special.ivp(m, s) + h * special.iv(m, s)
        if f(1e-9 if m else 1e-6) < 0 and f(10.0) > 0:
            s = brentq(f, 1e-9, 10.0, xtol=1e-15)
            neg += [-s * s] * (1 if m == 0 else 2)
    np.testing.assert_allclose(np.sort(mu[mu < 0]), np.sort(neg), rtol=1e-9)


def test_disk_robin_against_scipy_secular_all_orders():
    h = 1.3
    sp = spectra.disk_robin_spectrum(1.0, h, 60)
    ref = []
    for m in range(25):
        f = lambda k: k * special.jvp(m, k) + h * special.jv(m, k)
        grid = np.linspace(1e-6, 30.0, 6001)
        v = f(grid)
        for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
            r = brentq(f, grid[i], grid[i + 1], xtol=1e-15)
            ref += [r * r] * (1 if m == 0 else 2)
    ref = np.sort(ref)
    mu = sp.expanded()
    np.testing.assert_allclose(mu, ref[:len(mu)], rtol=1e-9)


def test_disk_monotone_in_h():
    mus = [spectra.disk_robin_spectrum(1.0, h, 10).expanded()[:10] for h in (-1.0, 0.0, 1.0, 10.0)]
    for a, b in zip(mus, mus[1:]):
        assert np.all(a < b + 1e-12)
    assert np.all(mus[-1] < spectra.disk_robin_spectrum(1.0, "dirichlet", 10).expanded()[:10])


def test_counting_function():
    neu = spectra.rectangle_spectrum(1, 1, 0.0, 10)
    assert spectra.counting_function(neu, 1.0) == 1
    dirichlet = spectra.rectangle_spectrum(1, 1, "dirichlet", 10)
    brute = sum(1 for i in range(1, 10) for j in range(1, 10) if math.pi ** 2 * (i * i + j * j) < 50)
    assert spectra.counting_function(dirichlet, 50.0) == brute == 3
    assert spectra.counting_function(dirichlet, dirichlet.expanded()[0]) == 0
    with pytest.raises(ValueError):
        spectra.counting_function(dirichlet, dirichlet.complete_below * 2)


def test_weyl_remainder():
    dirichlet = spectra.rectangle_spectrum(1, 1, "dirichlet", 10)
    assert spectra.weyl_remainder(dirichlet, 50.0, 1.0) == pytest.approx(50 / (4 * math.pi) - 3, rel=1e-12)
    neu = spectra.disk_robin_spectrum(1.0, 0.0, 60)
    n = 1 + sum((1 if m == 0 else 2) * int(np.sum(special.jnp_zeros(m, 10) ** 2 < 100)) for m in range(12))
    assert spectra.weyl_remainder(neu, 100.0, math.pi) == pytest.approx(25.0 - n, rel=1e-12)
    assert spectra.weyl_remainder(dirichlet, 1e-9, 1.0) == pytest.approx(0.0, abs=1e-9)


def test_nodal_count_analytic():
    assert spectra.nodal_count_analytic(("rect", 2, 1)) == 6
    assert spectra.nodal_count_analytic(("disk", 1, 0)) == 2
    assert spectra.nodal_count_analytic(("disk", 0, 1)) == 2
    assert spectra.nodal_count_analytic(("disk", 0, 0)) == 1
    with pytest.raises(ValueError):
        spectra.nodal_count_analytic(("fem", 3))


def test_serialisation_round_trip():
    sp = spectra.disk_robin_spectrum(1.0, -1.0, 12)
    back = spectra.Spectrum.from_json(sp.to_json())
    np.testing.assert_array_equal(back.expanded(), sp.expanded())
    back = spectra.Spectrum.from_csv(sp.to_csv())
    np.testing.assert_array_equal(back.expanded(), sp.expanded())
    assert back.complete_below == sp.complete_below


def test_complete_below_respected():
    sp = spectra.disk_robin_spectrum(1.0, 0.5, 25)
    assert len(sp) >= 25
    assert np.all(sp.expanded() < sp.complete_below)
    big = spectra.disk_robin_spectrum(1.0, 0.5, 200).expanded()
    assert np.sum(big < sp.complete_below) == len(sp)
