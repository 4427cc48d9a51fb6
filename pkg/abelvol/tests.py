import numpy as np
import pytest
from . import elliptic, fuchsian, monodromy, abelian, section, stability
from .common import SpinProximityError

def _curve(m=2.5):
    return elliptic.curve_from_tau(elliptic.tau_from_m(m))

def test_torus_local_monodromy():
    rng = np.random.RandomState(0)
    curve = _curve()
    w = fuchsian.Weights(fuchsian.EXAMPLE)
    for xi, alpha in [(.3 + .2j, 0.), (-.4 + .5j, .3 - .2j), (.5 - .3j, complex(*rng.normal(size=2)))]:
        conn = abelian.abelian_connection(w, curve, xi, alpha)
        rep = monodromy.torus_monodromy(conn, rtol=1e-10)
        errors = monodromy.local_eigenvalue_errors(rep.generators[2:], w.hat)
        assert errors.max() < 1e-6

def test_quarter_weights_cycles():
    # β vanishes, so the A and B cycles transport diagonally
    curve = _curve()
    xi, alpha = .3 + .2j, .1 - .4j
    conn = abelian.abelian_connection([.25]*4, curve, xi, alpha)
    rep = monodromy.torus_monodromy(conn, rtol=1e-11)
    a = alpha - xi
    b = alpha*curve.tau - xi*np.conj(curve.tau)
    np.testing.assert_allclose(rep['A'], np.diag([np.exp(-a), np.exp(a)]), atol=1e-9)
    np.testing.assert_allclose(rep['B'], np.diag([np.exp(-b), np.exp(b)]), atol=1e-9)

def test_shifts_are_gauge_equivalent():
    curve = _curve()
    k = np.pi/curve.tau.imag
    w = fuchsian.Weights(fuchsian.EXAMPLE)
    xi, alpha = .3 + .2j, .2 + .1j
    before = section.cycle_traces(w, curve, xi, alpha, rtol=1e-10)
    for dxi, dalpha in [(k, k), (k*curve.tau, k*np.conj(curve.tau))]:
        after = section.cycle_traces(w, curve, xi + dxi, alpha + dalpha, rtol=1e-10)
        np.testing.assert_allclose(after, before, atol=1e-6)

def test_sphere_traces_real_for_su2_data():
    # With every ρ = 1/4 at λ = 0 the monodromy is generated by order-4 elements
    rep = monodromy.sphere_monodromy(fuchsian.fuchsian_system([.25]*4, 2.5, .4 + .2j))
    np.testing.assert_allclose(monodromy.local_eigenvalue_errors(rep.generators, [.25]*4), 0, atol=1e-7)

def test_stable_u_have_torus_points():
    curve = _curve()
    w = fuchsian.Weights(fuchsian.EXAMPLE)
    for u in [.4 + .2j, -.3 + .5j, 2. - 1j]:
        assert stability.classify_parabolic_structure(w, u, curve.m).verdict == 'stable'
        xi = abelian.u_to_xi(u, +1, curve)
        u2, _ = abelian.xi_to_u(xi, curve)
        np.testing.assert_allclose(u2, u, rtol=1e-8)

def test_seed_rejects_spin_points():
    curve = _curve()
    with pytest.raises(SpinProximityError):
        section.seed_from_spin_expansion(fuchsian.EXAMPLE, curve, abelian.spin_gammas(curve)[2])
