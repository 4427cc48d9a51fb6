"""Trace-free Fuchsian systems on the 4-punctured sphere with punctures (z₀, z₁, z₂, z₃) = (∞, 1, 0, m), their
parabolic Higgs fields and the eigen-sections of the Higgs field on the elliptic double cover."""
import numpy as np
import scipy.linalg
from logging import getLogger
from rebar import arrdict
from . import common
from .common import PoleError

log = getLogger(__name__)

class Weights(arrdict.namedarrtuple('Weights', ('rho',))):

    def __init__(self, rho):
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (4,):
            raise ValueError(f'Need four weights, got {rho}')
        common.finite(rho)
        if not ((0 < rho) & (rho < .5)).all():
            raise ValueError(f'Weights must lie strictly between 0 and 1/2, got {rho}')
        super().__init__(rho=rho)

    @property
    def rho_total(self):
        """ρ = ρ₀ - ρ₁ - ρ₂ - ρ₃, the combination that appears in the residues."""
        r0, r1, r2, r3 = self.rho
        return r0 - r1 - r2 - r3

    @property
    def hat(self):
        """The shifted residues 2ρᵢ - 1/2 of the abelianized connection."""
        return 2*self.rho - .5

    def __eq__(self, other):
        return isinstance(other, Weights) and np.array_equal(self.rho, other.rho)

    __hash__ = None

def as_weights(rho):
    return rho if isinstance(rho, Weights) else Weights(rho)

def residue_matrices(weights, u):
    weights = as_weights(weights)
    u = complex(u)
    common.finite(u)
    r0, r1, r2, r3 = weights.rho
    r = weights.rho_total
    A1 = np.array([[-r1 - r, 2*r1 + r], [-r, r1 + r]], dtype=complex)
    A2 = np.array([[-r2, 0], [r, r2]], dtype=complex)
    A3 = np.array([[-r3, 2*r3*u], [0, r3]], dtype=complex)
    A0 = -(A1 + A2 + A3)
    return np.stack([A0, A1, A2, A3])

class HiggsField(arrdict.namedarrtuple('HiggsField', ('Psi', 'u'))):
    pass

def higgs_matrices(u):
    u = complex(u)
    common.finite(u)
    P1 = np.array([[u, -u], [u, -u]])
    P2 = np.array([[0, 0], [1 - u, 0]], dtype=complex)
    P3 = np.array([[-u, u**2], [-1, u]])
    P0 = -(P1 + P2 + P3)
    return HiggsField(Psi=np.stack([P0, P1, P2, P3]), u=u)

class FuchsianSystem(arrdict.namedarrtuple('FuchsianSystem', ('weights', 'm', 'u', 'lam', 'A'))):

    @property
    def punctures(self):
        """The finite punctures z₁, z₂, z₃."""
        return np.array([1., 0., self.m])

def fuchsian_system(weights, m, u, lam=0.):
    weights = as_weights(weights)
    m, u, lam = complex(m), complex(u), complex(lam)
    common.finite(m, lam)
    if abs(m) < 1e-12 or abs(m - 1) < 1e-12:
        raise ValueError(f'Puncture m={m} collides with 0 or 1')
    A = residue_matrices(weights, u) + lam*higgs_matrices(u).Psi
    return FuchsianSystem(weights=weights, m=m, u=u, lam=lam, A=A)

def check_system(system, tol=1e-12):
    """Raises if the residues aren't trace-free, don't sum to zero, or have eigenvalues other than ±ρᵢ."""
    A = system.A
    scale = max(1, np.abs(A).max())
    if np.abs(np.trace(A, axis1=-2, axis2=-1)).max() > tol*scale:
        raise ValueError('Residues are not trace-free')
    if np.abs(A.sum(0)).max() > tol*scale:
        raise ValueError('Residues do not sum to zero')
    # Eigenvalues of a trace-free 2×2 are ±√(-det)
    dets = np.linalg.det(A)
    if np.abs(dets + system.weights.rho**2).max() > tol*scale**2:
        raise ValueError('Residue eigenvalues differ from ±ρ')

def connection_form(system, z):
    """The dz-coefficient A₁/(z-1) + A₂/z + A₃/(z-m). Broadcasts over ``z``."""
    z = np.asarray(z, dtype=complex)
    d = np.abs(z[..., None] - system.punctures)
    if (d < 1e-14).any():
        raise PoleError(f'z={z} is a puncture')
    _, A1, A2, A3 = system.A
    z = z[..., None, None]
    return A1/(z - 1) + A2/z + A3/(z - system.m)

def higgs_form(higgs, m, z):
    z = np.asarray(z, dtype=complex)[..., None, None]
    _, P1, P2, P3 = higgs.Psi
    return P1/(z - 1) + P2/z + P3/(z - m)

def normalize_line(v):
    """Unit-norm representative of a projective point, with its larger component real-positive."""
    v = np.asarray(v, dtype=complex)
    v = v/np.linalg.norm(v)
    big = v[np.argmax(np.abs(v))]
    return v*np.conj(big)/abs(big)

def eigenlines(u):
    """The positive-eigenvalue lines E₀..E₃ = [1:0], [1:1], [0:1], [u:1] of the residues. ``u = np.inf`` is
    allowed and puts E₃ at [1:0]."""
    u = complex(u)
    E3 = [1, 0] if np.isinf(u) else [u, 1]
    return np.stack([normalize_line(e) for e in ([1, 0], [1, 1], [0, 1], E3)])

def _det(a, b):
    return a[0]*b[1] - a[1]*b[0]

def cross_ratio(a, b, c, d):
    return _det(a, b)*_det(d, c)/(_det(a, d)*_det(b, c))

def eigenline_of(A, rho):
    """The eigenline of the 2×2 ``A`` with eigenvalue ``rho``."""
    M = A - rho*np.eye(2)
    # Kernel of a rank-1 matrix, read off its larger row
    row = M[np.argmax(np.abs(M).sum(1))]
    return normalize_line([-row[1], row[0]])

def higgs_determinant(u, m):
    """c such that det Ψ = c·dz²/(z(z-1)(z-m))."""
    return u*(u - 1)*(m - u)

def eigen_sections(u, v, z, y, m, tol=1e-8):
    """The meromorphic eigen-sections s± of Ψ, with Ψ(z)s± = ±(v/y)s±."""
    u, v, z, y, m = map(complex, (u, v, z, y, m))
    if abs(v**2 - u*(u - 1)*(u - m)) > tol*max(1, abs(v)**2):
        raise ValueError(f'(u, v) = ({u}, {v}) is off the spectral curve')
    if abs(y**2 - z*(z - 1)*(z - m)) > tol*max(1, abs(y)**2):
        raise ValueError(f'(z, y) = ({z}, {y}) is off the elliptic curve')
    P = (m - 1)*u*z
    Q = -u*z + m*(-1 + u + z)
    s = np.array([[P - v*y, Q], [P + v*y, Q]])
    if (np.abs(s).max(1) < 1e-14*max(1, abs(P), abs(v*y))).any():
        raise PoleError(f'Eigen-section vanishes at z={z}; move the sample point')
    return s

def higgs_space(u):
    """The space of trace-free residue 4-tuples with Ψᵢ Eᵢ = 0 and ΣΨᵢ = 0. Returns its dimension and an
    orthonormal basis, each row holding (Ψ₁, Ψ₂, Ψ₃) as [[a, b], [c, -a]] coefficients."""
    E = eigenlines(u)
    # Unknowns (a_i, b_i, c_i) for i = 1, 2, 3; Ψ E = (a e₀ + b e₁, c e₀ - a e₁)
    rows = []
    for i in range(1, 4):
        e0, e1 = E[i]
        block = np.zeros((2, 9), dtype=complex)
        block[0, 3*(i-1):3*i] = [e0, e1, 0]
        block[1, 3*(i-1):3*i] = [-e1, 0, e0]
        rows.extend(block)
    # Ψ₀ = -ΣΨᵢ annihilates E₀
    e0, e1 = E[0]
    rows.append(np.tile([e0, e1, 0], 3))
    rows.append(np.tile([-e1, 0, e0], 3))
    null = scipy.linalg.null_space(np.array(rows), rcond=1e-10)
    return null.shape[1], null.T

def _curve_derivative(z, y, m):
    return (3*z**2 - 2*(m + 1)*z + m)/(2*y)

def frame_connection(system, v, z, y):
    """The dz-coefficient of the connection in the frame (s⁺, s⁻): S⁻¹(dS/dz + A(z)S)."""
    u, m = system.u, system.m
    S = eigen_sections(u, v, z, y, m).T
    dy = _curve_derivative(z, y, m)
    dS = np.array([[(m - 1)*u - v*dy, (m - 1)*u + v*dy], [m - u, m - u]])
    return np.linalg.solve(S, dS + connection_form(system, z) @ S)

def spin_limits(weights, m):
    """Limits of v·y·Ω₁₁ in the eigen-section frame as u → 0, 1, m."""
    r0, r1, r2, r3 = as_weights(weights).rho
    return {
        0: m*(-r0 - r1 + r2 + r3)/2,
        1: (m - 1)*(r0 - r1 + r2 - r3)/2,
        'm': m*(m - 1)*(r0 + r1 + r2 + r3 - 1)/2}

#########
# TESTS #
#########

EXAMPLE = (.3, .25, .2, .15)

def random_system(rng):
    rho = rng.uniform(.01, .49, 4)
    m = complex(*rng.normal(size=2))
    u = complex(*rng.normal(size=2))
    lam = complex(*rng.normal(size=2))
    return fuchsian_system(rho, m, u, lam)

def test_weights_validation():
    import pytest
    Weights(EXAMPLE)
    for bad in [(.5, .2, .2, .2), (0, .2, .2, .2), (.2, .2, .2), (np.nan, .2, .2, .2)]:
        with pytest.raises(ValueError):
            Weights(bad)

def test_residue_matrices():
    w = Weights(EXAMPLE)
    A = residue_matrices(w, 2.)
    r = w.rho_total
    np.testing.assert_allclose(A[2], [[-.2, 0], [r, .2]])
    np.testing.assert_allclose(A[0], -A[1:].sum(0))
    np.testing.assert_allclose(np.linalg.det(A[1]), -.25**2)

def test_random_systems():
    rng = np.random.RandomState(0)
    for _ in range(100):
        check_system(random_system(rng))

def test_higgs_matrices():
    u = .7 - .4j
    P = higgs_matrices(u).Psi
    np.testing.assert_allclose(P[2] @ [0, 1], 0)
    np.testing.assert_allclose(P[3] @ [u, 1], 0, atol=1e-15)
    np.testing.assert_allclose(P[0], -P[1:].sum(0))
    np.testing.assert_allclose(np.trace(P, axis1=1, axis2=2), 0)
    E = eigenlines(u)
    np.testing.assert_allclose(np.einsum('ijk,ik->ij', P, E), 0, atol=1e-15)

def test_connection_form():
    s = fuchsian_system(EXAMPLE, 3, 2)
    A = s.A
    np.testing.assert_allclose(connection_form(s, 2.), A[1]/1 + A[2]/2 + A[3]/(-1))

    # Residues at 1 and at ∞
    eps = 1e-7
    np.testing.assert_allclose(eps*connection_form(s, 1 + eps), A[1], atol=1e-6)
    R = 1e8
    np.testing.assert_allclose(-R*connection_form(s, R), A[0], atol=1e-6)

    import pytest
    with pytest.raises(PoleError):
        connection_form(s, 3.)

def test_eigenlines():
    u = .4 + .2j
    E = eigenlines(u)
    np.testing.assert_allclose(cross_ratio(*E), u)
    np.testing.assert_allclose(E[3], normalize_line([u, 1]))

    # The eigenline for +ρ doesn't move with λ
    s = fuchsian_system(EXAMPLE, 2.5, u, lam=5.)
    for i in range(4):
        np.testing.assert_allclose(eigenline_of(s.A[i], s.weights.rho[i]), E[i], atol=1e-12)

def test_higgs_determinant():
    assert higgs_determinant(0, 3) == 0
    assert higgs_determinant(3, 3) == 0
    z = 2.
    np.testing.assert_allclose(np.linalg.det(higgs_form(higgs_matrices(2), 3, z)), -1)

    rng = np.random.RandomState(1)
    u, m = 1.3 - .2j, 2.5 + .5j
    higgs = higgs_matrices(u)
    for z in rng.normal(size=10) + 1j*rng.normal(size=10):
        expected = higgs_determinant(u, m)/(z*(z - 1)*(z - m))
        np.testing.assert_allclose(np.linalg.det(higgs_form(higgs, m, z)), expected, rtol=1e-10)

def test_higgs_eigenvalues():
    u, m = 1.3 - .2j, 2.5 + .5j
    higgs = higgs_matrices(u)
    for z in [.3 + .7j, -1.2 + .1j, 4. - 2j]:
        ev = np.linalg.eigvals(higgs_form(higgs, m, z))
        expected = u*(u - 1)*(u - m)/(z*(z - 1)*(z - m))
        np.testing.assert_allclose(ev.sum(), 0, atol=1e-10)
        np.testing.assert_allclose(ev[0]**2, expected, rtol=1e-10)

def test_eigen_sections():
    u, m, z = 2., 3., 4.
    v, y = np.sqrt(2*1*(2 - 3) + 0j), np.sqrt(4*3*1 + 0j)
    sp, sm = eigen_sections(u, v, z, y, m)
    Psi = higgs_form(higgs_matrices(u), m, z)
    mu = v/y
    assert np.linalg.norm(Psi @ sp - mu*sp) < 1e-8*np.linalg.norm(sp)
    assert np.linalg.norm(Psi @ sm + mu*sm) < 1e-8*np.linalg.norm(sm)

    swapped = eigen_sections(u, -v, z, y, m)
    np.testing.assert_allclose(swapped, [sm, sp])

    # Branch point: both sections coincide
    sp, sm = eigen_sections(u, v, 1., 0., m)
    np.testing.assert_allclose(sp, sm)

def test_higgs_space():
    for u in [.4 + .2j, 2.3, -1 + 1j]:
        dim, basis = higgs_space(u)
        assert dim == 1
        P = higgs_matrices(u).Psi[1:]
        coeffs = np.array([[p[0, 0], p[0, 1], p[1, 0]] for p in P]).flatten()
        # Ψ is in the span
        proj = basis.conj() @ coeffs
        np.testing.assert_allclose(np.abs(proj)[0], np.linalg.norm(coeffs), rtol=1e-10)

def test_frame_connection_diagonalizes_higgs():
    u, m, lam = .6 + .3j, 2.5, .7
    s0 = fuchsian_system(EXAMPLE, m, u)
    s1 = fuchsian_system(EXAMPLE, m, u, lam)
    z = 1.7 + .9j
    v = np.sqrt(u*(u - 1)*(u - m))
    y = np.sqrt(z*(z - 1)*(z - m))
    diff = frame_connection(s1, v, z, y) - frame_connection(s0, v, z, y)
    np.testing.assert_allclose(diff, lam*np.diag([v/y, -v/y]), atol=1e-10)

def test_frame_connection_spin_limits():
    m = 3.
    limits = spin_limits(EXAMPLE, m)
    for key, u0 in [(0, 0.), (1, 1.), ('m', m)]:
        u = u0 + 1e-10*(1 + 1j)
        v = np.sqrt(u*(u - 1)*(u - m))
        system = fuchsian_system(EXAMPLE, m, u)
        for z in [1.7 + .9j, -.4 + .3j]:
            y = np.sqrt(z*(z - 1)*(z - m))
            omega = frame_connection(system, v, z, y)
            np.testing.assert_allclose(v*y*omega[0, 0], limits[key], rtol=1e-3)
