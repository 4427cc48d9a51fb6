"""Abelianization of the Fuchsian systems on the elliptic double cover C/Γ → CP¹.

A parabolic structure u determines, via the eigenline bundle of its Higgs field, a point x of the torus and
the Jacobian coordinate ξ = 2πi/(τ-τ̄)·x. The abelianized connection is

    d + [[α, β⁻], [β⁺, -α]] dw + [[-ξ, 0], [0, ξ]] dw̄

with β± built from the doubly periodic sections t_{∓2x} so that it has simple poles at the half-periods wᵢ,
with residues whose product is (2ρᵢ - 1/2)².
"""
import numpy as np
from logging import getLogger
from rebar import arrdict
from . import common, elliptic, fuchsian, constants
from .common import SpinProximityError, PoleError

log = getLogger(__name__)

U_VALUES = ('m', 0., 1., np.inf)

class SpinPoint(arrdict.namedarrtuple('SpinPoint', ('index', 'gamma', 'mu', 'u_value'))):
    pass

def mu_table(weights):
    r0, r1, r2, r3 = fuchsian.as_weights(weights).rho
    return np.abs([1 - (r0 + r1 + r2 + r3), r0 + r1 - r2 - r3, r0 + r2 - r1 - r3, r0 - r1 - r2 + r3])

def spin_gammas(curve):
    """Representatives of the four classes of (1/2)Λ: 0, πi/(τ-τ̄), πi(1+τ)/(τ-τ̄), πiτ/(τ-τ̄)."""
    return elliptic.xi_from_x(curve.half_points, curve.lattice)

def spin_mu(weights, gamma_class, curve=None):
    mu = mu_table(weights)[gamma_class]
    u = U_VALUES[gamma_class]
    gamma = None
    if curve is not None:
        gamma = complex(spin_gammas(curve)[gamma_class])
        u = curve.m if u == 'm' else u
    return SpinPoint(index=gamma_class, gamma=gamma, mu=float(mu), u_value=u)

def spin_points(weights, curve):
    return [spin_mu(weights, i, curve) for i in range(4)]

def exclusion_radius(curve, fraction=constants.SPIN_EXCLUSION):
    return fraction*min(abs(p) for p in curve.lattice.dual_periods)

def spin_distance(xi, curve):
    """Distance from ξ to the nearest point of (1/2)Λ."""
    periods = curve.lattice.dual_periods
    return np.min([common.distance(xi, g, periods) for g in spin_gammas(curve)], 0)

def check_spin(xi, curve, radius=None):
    radius = exclusion_radius(curve) if radius is None else radius
    d = spin_distance(xi, curve)
    if np.any(d < radius):
        raise SpinProximityError(f'ξ={xi} is within {radius:.3g} of a spin point')

def u_to_curve_point(u, v, m, tol=1e-10):
    u, v, m = complex(u), complex(v), complex(m)
    if abs(v**2 - u*(u - 1)*(u - m)) > tol*max(1, abs(v)**2):
        raise ValueError(f'(u, v) = ({u}, {v}) is off the spectral curve')
    if u == m:
        raise SpinProximityError('u = m maps to the spin point w₀')
    z = (m - m*u)/(m - u)
    y = m*(m - 1)*v/(u - m)**2
    return z, y

def curve_point_to_u(z, y, m):
    z, y, m = complex(z), complex(y), complex(m)
    if z == m:
        raise SpinProximityError('z = m maps to u = ∞')
    u = m*(1 - z)/(m - z)
    v = m*(m - 1)*y/(z - m)**2
    return u, v

def spectral_v(u, m, sign=+1):
    u = complex(u)
    return sign*np.sqrt(u*(u - 1)*(u - m))

def reduce_xi(xi, curve):
    r, _, _ = common.reduce(xi, curve.lattice.dual_periods)
    return r

def u_to_xi(u, sign, curve):
    """The Jacobian point of the parabolic structure u, on the sheet picked by ``sign``. The two sheets give
    ξ and -ξ."""
    if np.isinf(u):
        return complex(spin_gammas(curve)[3])
    v = spectral_v(u, curve.m, sign)
    z, y = u_to_curve_point(u, v, curve.m, tol=1e-8)
    x = elliptic.abel_invert(z, y, curve)
    return complex(reduce_xi(elliptic.xi_from_x(x, curve.lattice), curve))

def xi_to_u(xi, curve):
    """Inverse of :func:`u_to_xi`; returns ``(u, v)``."""
    x = elliptic.x_from_xi(xi, curve.lattice)
    z, y = elliptic.curve_coords(x, curve)
    return curve_point_to_u(z, y, curve.m)

def higgs_alpha_slope(u, v, curve):
    """dα/dλ: how fast adding λΨ to the connection moves the abelian coordinate α."""
    return constants.HIGGS_SLOPE_SIGN*2*v*curve.sqrt_p12

def _c(lattice):
    tau = lattice.tau
    return 2j*np.pi/(np.conj(tau) - tau)

def beta_coefficients(weights, xi, curve):
    """The coefficients (α⁺ᵢ, α⁻ᵢ) of β± = Σᵢ α±ᵢ t_{∓2x}(w - wᵢ)."""
    weights = fuchsian.as_weights(weights)
    check_spin(xi, curve)
    lattice = curve.lattice
    x = complex(elliptic.x_from_xi(xi, lattice))
    wi = curve.half_points
    D = wi - np.conj(wi)
    c = _c(lattice)
    dtheta0 = elliptic.theta_eval(0., lattice, 1)
    [tp] = elliptic.theta_derivatives(wi + x, lattice)
    [tm] = elliptic.theta_derivatives(wi - x, lattice)
    # The exponential makes each coefficient independent of the representative chosen for wᵢ
    plus = np.exp(-2*c*x*D)*tp/tm*dtheta0/elliptic.theta_eval(2*x, lattice)*weights.hat
    minus = np.exp(2*c*x*D)*tm/tp*dtheta0/elliptic.theta_eval(-2*x, lattice)*weights.hat
    return plus, minus

class AbelianConnection(arrdict.namedarrtuple('AbelianConnection', ('curve', 'weights', 'alpha', 'xi', 'beta_plus', 'beta_minus'))):

    @property
    def x(self):
        return complex(elliptic.x_from_xi(self.xi, self.curve.lattice))

    def form(self, w):
        """(dw, dw̄) coefficient matrices at ``w``. A batch of α gives a batch of dw coefficients."""
        bp, bm = beta_eval(self, w)
        alpha = np.asarray(self.alpha, dtype=complex)
        A = np.zeros(alpha.shape + (2, 2), dtype=complex)
        A[..., 0, 0] = alpha
        A[..., 1, 1] = -alpha
        A[..., 0, 1] = bm
        A[..., 1, 0] = bp
        B = np.array([[-self.xi, 0], [0, self.xi]], dtype=complex)
        return A, B

def abelian_connection(weights, curve, xi, alpha):
    weights = fuchsian.as_weights(weights)
    xi = complex(xi)
    plus, minus = beta_coefficients(weights, xi, curve)
    alpha = complex(alpha) if np.ndim(alpha) == 0 else np.asarray(alpha, dtype=complex)
    return AbelianConnection(curve=curve, weights=weights, alpha=alpha, xi=xi, beta_plus=plus, beta_minus=minus)

def beta_eval(conn, w):
    """(β⁺(w), β⁻(w))."""
    lattice = conn.curve.lattice
    x = conn.x
    shifted = complex(w) - conn.curve.half_points
    bp = (conn.beta_plus*elliptic.t_section(-2*x, shifted, lattice)).sum()
    bm = (conn.beta_minus*elliptic.t_section(2*x, shifted, lattice)).sum()
    return bp, bm

def abelian_connection_form(conn, w):
    return conn.form(w)

def residues(conn):
    """Residues of β⁺ and β⁻ at the four half-periods."""
    lattice = conn.curve.lattice
    x = conn.x
    d0 = elliptic.theta_eval(0., lattice, 1)
    rp = conn.beta_plus*elliptic.theta_eval(2*x, lattice)/d0
    rm = conn.beta_minus*elliptic.theta_eval(-2*x, lattice)/d0
    return rp, rm

def residue_matrix(conn, i):
    rp, rm = residues(conn)
    return np.array([[0, rm[i]], [rp[i], 0]])

def residue_map_condition(curve, xi, eps=1e-7):
    """Condition number of the map from coefficient vectors to the residues of Σᵢ cᵢ t_{-2x}(w - wᵢ) at the four
    half-periods, with the residues read off numerically as ε·t(wⱼ + ε - wᵢ)."""
    check_spin(xi, curve)
    lattice = curve.lattice
    x = complex(elliptic.x_from_xi(xi, lattice))
    wi = curve.half_points
    R = np.empty((4, 4), dtype=complex)
    for j in range(4):
        R[j] = eps*elliptic.t_section(-2*x, wi[j] + eps - wi, lattice)
    return np.linalg.cond(R)

#########
# TESTS #
#########

def _curve(m=2.5):
    return elliptic.curve_from_tau(elliptic.tau_from_m(m))

def test_mu_table():
    np.testing.assert_allclose(mu_table(fuchsian.EXAMPLE), [.1, .2, .1, 0.], atol=1e-15)
    np.testing.assert_allclose(mu_table([.25]*4), 0, atol=1e-15)
    assert (mu_table(np.random.RandomState(0).uniform(.01, .49, 4)) >= 0).all()

def test_spin_points():
    curve = _curve()
    pts = spin_points(fuchsian.EXAMPLE, curve)
    k = np.pi/curve.tau.imag
    np.testing.assert_allclose([p.gamma for p in pts], [0, k/2, k*(1 + curve.tau)/2, k*curve.tau/2])
    assert [p.u_value for p in pts][1:] == [0., 1., np.inf]
    assert pts[0].u_value == curve.m

def test_curve_point_maps():
    m = 3.
    assert u_to_curve_point(0, 0, m) == (1, 0)
    assert u_to_curve_point(1, 0, m) == (0, 0)
    v = spectral_v(2., m)
    z, y = u_to_curve_point(2., v, m)
    assert abs(y**2 - z*(z - 1)*(z - m)) < 1e-9

    assert curve_point_to_u(1, 0, m) == (0, 0)
    assert curve_point_to_u(0, 0, m) == (1, 0)

    u, m = .4 + .3j, 2 + 1j
    v = spectral_v(u, m)
    u2, v2 = curve_point_to_u(*u_to_curve_point(u, v, m), m)
    assert abs(u2 - u) < 1e-9 and abs(v2 - v) < 1e-9

    import pytest
    with pytest.raises(SpinProximityError):
        u_to_curve_point(m, 0, m)

def test_two_to_one():
    curve = _curve()
    periods = curve.lattice.dual_periods
    rng = np.random.RandomState(0)
    for u in rng.normal(size=100) + 1j*rng.normal(size=100):
        a = u_to_xi(u, +1, curve)
        b = u_to_xi(u, -1, curve)
        assert common.distance(a, -b, periods) < 1e-9

def test_xi_roundtrip():
    curve = _curve(-1 + .5j)
    for u in [.4 + .3j, -1.2 + .8j, 3. - 2j]:
        xi = u_to_xi(u, +1, curve)
        u2, v2 = xi_to_u(xi, curve)
        assert abs(u2 - u) < 1e-8*max(1, abs(u))
        np.testing.assert_allclose(v2, spectral_v(u, curve.m), rtol=1e-8)

def test_spin_correspondence():
    curve = _curve()
    periods = curve.lattice.dual_periods
    gammas = spin_gammas(curve)
    for u, i in [(curve.m + 1e-14, 0), (1e-16, 1), (1 + 1e-15, 2), (1e17, 3), (np.inf, 3)]:
        assert common.distance(u_to_xi(u, +1, curve), gammas[i], periods) < 1e-6

def test_quarter_weights_vanish():
    curve = _curve()
    plus, minus = beta_coefficients([.25]*4, .2 + .1j, curve)
    np.testing.assert_allclose(plus, 0)
    np.testing.assert_allclose(minus, 0)

def test_quadratic_residues():
    curve = elliptic.curve_from_tau(elliptic.Lattice(1j))
    w = fuchsian.Weights(fuchsian.EXAMPLE)
    conn = abelian_connection(w, curve, .2 + .1j, 0.)
    eps = 1e-7
    for i, wi in enumerate(curve.half_points):
        bp, bm = beta_eval(conn, wi + eps)
        np.testing.assert_allclose(eps**2*bp*bm, w.hat[i]**2, rtol=1e-4, atol=1e-9)
        rp, rm = residues(conn)
        np.testing.assert_allclose(rp[i]*rm[i], w.hat[i]**2, rtol=1e-12)
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(residue_matrix(conn, i)).real), [-abs(w.hat[i]), abs(w.hat[i])], atol=1e-12)

def test_quadratic_residues_random():
    rng = np.random.RandomState(1)
    for _ in range(50):
        w = fuchsian.Weights(rng.uniform(.01, .49, 4))
        lattice = elliptic.Lattice(complex(rng.uniform(-.5, .5), rng.uniform(.7, 1.5)))
        curve = elliptic.curve_from_tau(lattice)
        s, t = rng.uniform(-.4, .4, 2)
        xi = elliptic.xi_from_x(s + t*lattice.tau, lattice)
        try:
            conn = abelian_connection(w, curve, xi, 0.)
        except SpinProximityError:
            continue
        rp, rm = residues(conn)
        np.testing.assert_allclose(rp*rm, w.hat**2, rtol=1e-9)

def test_residue_numeric():
    curve = _curve()
    conn = abelian_connection(fuchsian.EXAMPLE, curve, .3 + .2j, 0.)
    eps = 1e-7
    rp, rm = residues(conn)
    w3 = curve.half_points[3]
    bp, bm = beta_eval(conn, w3 + eps)
    np.testing.assert_allclose([eps*bm, eps*bp], [rm[3], rp[3]], rtol=1e-4)

def test_coefficients_independent_of_representative():
    # Shifting wᵢ by τ leaves α±ᵢ alone
    curve = _curve()
    xi = .3 + .2j
    plus, minus = beta_coefficients(fuchsian.EXAMPLE, xi, curve)
    shifted = curve.copy()
    shifted['half_points'] = curve.half_points + curve.tau
    plus2, minus2 = beta_coefficients(fuchsian.EXAMPLE, xi, shifted)
    np.testing.assert_allclose(plus2, plus, rtol=1e-10)
    np.testing.assert_allclose(minus2, minus, rtol=1e-10)

def test_connection_form():
    curve = _curve()
    conn = abelian_connection(fuchsian.EXAMPLE, curve, .3 + .2j, .1 - .4j)
    A, B = conn.form(.13 + .27j)
    assert abs(np.trace(A)) < 1e-15 and abs(np.trace(B)) < 1e-15
    np.testing.assert_allclose(np.diag(A), [.1 - .4j, -.1 + .4j])

    batched = abelian_connection(fuchsian.EXAMPLE, curve, .3 + .2j, np.array([0., 1j]))
    A, _ = batched.form(.13 + .27j)
    assert A.shape == (2, 2, 2)

    import pytest
    with pytest.raises(PoleError):
        conn.form(.5)

def test_flatness():
    # ∂̄β⁺ = -2ξβ⁺ and ∂̄β⁻ = 2ξβ⁻
    curve = _curve()
    xi = .3 + .2j
    conn = abelian_connection(fuchsian.EXAMPLE, curve, xi, 0.)
    w, h = .13 + .27j, 1e-5
    f = lambda w: np.array(beta_eval(conn, w))
    dbar = ((f(w + h) - f(w - h)) + 1j*(f(w + 1j*h) - f(w - 1j*h)))/(4*h)
    np.testing.assert_allclose(dbar, [-2*xi*f(w)[0], 2*xi*f(w)[1]], rtol=1e-6)

def test_spin_exclusion():
    import pytest
    curve = _curve()
    with pytest.raises(SpinProximityError):
        beta_coefficients(fuchsian.EXAMPLE, 1e-4, curve)
    with pytest.raises(SpinProximityError):
        beta_coefficients(fuchsian.EXAMPLE, spin_gammas(curve)[2] + 1e-4, curve)

def test_residue_map_condition():
    curve = _curve()
    assert residue_map_condition(curve, .3 + .2j) < 1e6

def test_slope():
    curve = _curve()
    assert higgs_alpha_slope(0., 0., curve) == 0
    np.testing.assert_allclose(higgs_alpha_slope(.4, -.3j, curve), -higgs_alpha_slope(.4, .3j, curve))
