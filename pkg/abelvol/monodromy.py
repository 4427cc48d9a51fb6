"""Monodromy of rank-2 connections d + A dp + B dp̄ by integrating the transport equation dΦ = -(A dp + B dp̄)Φ
along piecewise line/arc loops, and unitarizability tests via invariant Hermitian forms."""
import numpy as np
import scipy.linalg
import scipy.optimize
from itertools import permutations
from functools import cmp_to_key
from scipy.integrate import solve_ivp
from logging import getLogger
from rebar import arrdict
from . import fuchsian, constants
from .common import IntegrationError

log = getLogger(__name__)

class Line:

    def __init__(self, a, b):
        self.a, self.b = complex(a), complex(b)

    def __call__(self, t):
        return self.a + t*(self.b - self.a), self.b - self.a

    def reversed(self):
        return Line(self.b, self.a)

    def points(self, n=64):
        return self.a + np.linspace(0, 1, n)*(self.b - self.a)

    def __repr__(self):
        return f'Line({self.a:.3f}, {self.b:.3f})'

class Arc:

    def __init__(self, center, radius, start, end):
        self.center, self.radius = complex(center), float(radius)
        self.start, self.end = float(start), float(end)

    def __call__(self, t):
        dθ = self.end - self.start
        e = self.radius*np.exp(1j*(self.start + t*dθ))
        return self.center + e, 1j*dθ*e

    def reversed(self):
        return Arc(self.center, self.radius, self.end, self.start)

    def points(self, n=64):
        return self.center + self.radius*np.exp(1j*np.linspace(self.start, self.end, n))

    def __repr__(self):
        return f'Arc({self.center:.3f}, {self.radius:.3f}, {self.start:.3f}, {self.end:.3f})'

class LoopSpec(arrdict.namedarrtuple('LoopSpec', ('base_point', 'path', 'enclosed'))):
    pass

class MonodromyRep(arrdict.namedarrtuple('MonodromyRep', ('generators', 'names', 'base_point', 'rtol', 'order', 'defect'))):

    def __getitem__(self, x):
        if isinstance(x, str) and x not in self and x in self.names:
            return self.generators[self.names.index(x)]
        return super().__getitem__(x)

class HermitianForm(arrdict.namedarrtuple('HermitianForm', ('H', 'definiteness', 'dimension'))):
    pass

def reverse(path):
    return [s.reversed() for s in path[::-1]]

def path_points(path, n=64):
    return np.concatenate([s.points(n) for s in path])

def routed_line(a, b, obstacles, radius):
    """Straight path from ``a`` to ``b``, with a semicircular detour on the left around every obstacle
    closer than ``radius`` to it."""
    a, b = complex(a), complex(b)
    d = (b - a)/abs(b - a)
    φ = np.angle(d)
    length = abs(b - a)
    detours = []
    for o in np.atleast_1d(obstacles):
        rel = (o - a)/d
        s, δ = rel.real, rel.imag
        if 0 < s < length and abs(δ) < radius:
            detours.append((s, radius + abs(δ)))
    segments, prev = [], a
    for s, R in sorted(detours):
        p0 = a + s*d
        segments.append(Line(prev, p0 - R*d))
        segments.append(Arc(p0, R, φ + np.pi, φ))
        prev = p0 + R*d
    segments.append(Line(prev, b))
    return segments

def lasso(center, base, radius, obstacles=()):
    """A loop from ``base`` once counterclockwise around ``center``, tails routed around ``obstacles``."""
    d = (complex(center) - complex(base))/abs(complex(center) - complex(base))
    end = center - radius*d
    tail = routed_line(base, end, obstacles, radius)
    start = np.angle(-d)
    circle = Arc(center, radius, start, start + 2*np.pi)
    return tail + [circle] + reverse(tail)

def check_clearance(path, punctures, clearance):
    pts = path_points(path)
    d = np.abs(pts[:, None] - np.asarray(punctures)[None]).min()
    if d <= clearance:
        raise IntegrationError(f'Loop passes within {d:.3g} of a puncture, clearance is {clearance:.3g}')

def _transport_segment(evaluator, segment, Phi, rtol, atol):
    shape = Phi.shape

    def rhs(t, y):
        p, dp = segment(t)
        A, B = evaluator(p)
        M = A*dp if B is None else A*dp + B*np.conj(dp)
        return -(M @ y.reshape(shape)).ravel()

    sol = solve_ivp(rhs, (0., 1.), Phi.ravel(), method='RK45', rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f'Transport along {segment} failed: {sol.message}')
    end = sol.y[:, -1].reshape(shape)
    if not np.isfinite(end).all():
        raise IntegrationError(f'Transport along {segment} went non-finite')
    return end

def parallel_transport(evaluator, path, rtol=constants.RTOL, atol=constants.ATOL):
    """Solution operator of dΦ = -(A dp + B dp̄)Φ along ``path``. ``evaluator(p)`` returns ``(A, B)``, with ``B``
    None for a holomorphic connection; any leading batch dimensions of ``A`` carry through."""
    p0, _ = path[0](0.)
    A, _ = evaluator(p0)
    Phi = np.broadcast_to(np.eye(2, dtype=complex), np.shape(A)).copy()
    for segment in path:
        Phi = _transport_segment(evaluator, segment, Phi, rtol, atol)
    return Phi

def product_defect(generators, order):
    P = np.eye(2)
    for i in order:
        P = P @ generators[i]
    return float(np.abs(P - np.eye(2)).max())

def calibrate_product_order(generators):
    """The ordering of the generators whose product is nearest the identity, and the distance. Only a check on
    :func:`lasso_order`."""
    best, defect = None, np.inf
    for order in permutations(range(len(generators))):
        d = product_defect(generators, order)
        if d < defect:
            best, defect = order, d
    return best, float(defect)

def lasso_order(punctures, base, radius):
    """The order in which the sphere generators multiply to the identity: lassos by decreasing tail angle at
    ``base``, then the loop around ∞. A tail that detours around another puncture passes it on the left."""
    punctures = np.asarray(punctures, dtype=complex)
    theta = np.mod(np.angle(punctures - base), 2*np.pi)

    def detours(i, j):
        d = (punctures[i] - base)/abs(punctures[i] - base)
        rel = (punctures[j] - base)/d
        return 0 < rel.real < abs(punctures[i] - base) - radius and abs(rel.imag) < radius

    def compare(i, j):
        if detours(i, j):
            return 1
        if detours(j, i):
            return -1
        return int(np.sign(theta[i] - theta[j]))

    increasing = sorted(range(len(punctures)), key=cmp_to_key(compare))
    return tuple(i + 1 for i in increasing[::-1]) + (0,)

def _lasso_radius(system):
    finite = system.punctures
    return .2*min(abs(a - b) for i, a in enumerate(finite) for b in finite[i+1:])

def sphere_loops(system, base_point=None):
    finite = system.punctures
    radius = _lasso_radius(system)
    sep = 5*radius
    base = 2 + abs(system.m) if base_point is None else complex(base_point)

    loops = []
    # Clockwise around everything finite is counterclockwise around ∞
    R = 2*max(abs(base), np.abs(finite).max() + 1)
    out = Line(base, R)
    big = [out, Arc(0., R, 0., -2*np.pi), out.reversed()]
    loops.append(LoopSpec(base_point=base, path=big, enclosed=0))
    for i, z in enumerate(finite, 1):
        others = [o for o in finite if o != z]
        loops.append(LoopSpec(base_point=base, path=lasso(z, base, radius, others), enclosed=i))

    clearance = constants.CLEARANCE*sep
    for loop in loops:
        check_clearance(loop.path, finite, clearance)
    return loops

def sphere_monodromy(system, base_point=None, rtol=constants.RTOL):
    def evaluator(p):
        return fuchsian.connection_form(system, p), None

    loops = sphere_loops(system, base_point)
    generators = np.stack([parallel_transport(evaluator, l.path, rtol=rtol) for l in loops])
    order = lasso_order(system.punctures, loops[0].base_point, _lasso_radius(system))
    defect = product_defect(generators, order)
    if defect > 1e-6:
        searched, best = calibrate_product_order(generators)
        log.warning(f'Sphere product relation in the order {order} only holds to {defect:.2e}; {searched} gets {best:.2e}')
    return MonodromyRep(
        generators=generators, names=['M0', 'M1', 'M2', 'M3'],
        base_point=loops[0].base_point, rtol=rtol, order=order, defect=defect)

def torus_loops(lattice, poles):
    tau = lattice.tau
    base = (1 + tau)/4
    sep = min(.5, abs(tau)/2, abs(1 + tau)/2, abs(1 - tau)/2)
    radius = .2*sep
    translates = np.array([p + j + k*tau for p in poles for j in (-1, 0, 1, 2) for k in (-1, 0, 1, 2)])

    loops = [
        LoopSpec(base_point=base, path=[Line(base, base + 1)], enclosed=None),
        LoopSpec(base_point=base, path=[Line(base, base + tau)], enclosed=None)]
    for i, p in enumerate(poles):
        others = translates[np.abs(translates - p) > 1e-12]
        loops.append(LoopSpec(base_point=base, path=lasso(p, base, radius, others), enclosed=i))

    clearance = constants.CLEARANCE*sep
    for loop in loops:
        check_clearance(loop.path, translates, clearance)
    return loops

def torus_monodromy(conn, rtol=constants.RTOL):
    """Monodromy of an abelianized connection around the A and B cycles and the four poles. ``conn`` needs
    a ``form(w)`` method returning the (dw, dw̄) coefficients, and a ``curve``."""
    loops = torus_loops(conn.curve.lattice, conn.curve.half_points)
    generators = np.stack([parallel_transport(conn.form, l.path, rtol=rtol) for l in loops], -3)
    return MonodromyRep(
        generators=generators, names=['A', 'B', 'N0', 'N1', 'N2', 'N3'],
        base_point=loops[0].base_point, rtol=rtol, order=None, defect=None)

def cycle_traces(rep):
    return {n: complex(np.trace(g)) for n, g in zip(rep.names, rep.generators)}

def _hermitian_basis():
    return np.array([
        [[1, 0], [0, 0]],
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[0, 0], [0, 1]]], dtype=complex)

def _definiteness(H, tol=constants.DEFINITE_TOL):
    ev = np.linalg.eigvalsh(H)
    scale = np.abs(ev).max()
    if (ev > tol*scale).all():
        return 'positive'
    if (ev < -tol*scale).all():
        return 'negative'
    if (np.abs(ev) <= tol*scale).any():
        return 'degenerate'
    return 'indefinite'

def _most_definite(null):
    """Searches a ≥2-dimensional space of invariant forms for the one with the largest smallest eigenvalue."""
    basis = np.einsum('kn,kij->nij', null, _hermitian_basis())

    def loss(c):
        H = np.einsum('n,nij->ij', c, basis)
        ev = np.linalg.eigvalsh(H)
        return -ev[0]/np.linalg.norm(c)

    best = None
    rng = np.random.RandomState(0)
    for c0 in np.concatenate([np.eye(len(basis)), rng.normal(size=(4, len(basis)))]):
        sol = scipy.optimize.minimize(loss, c0, method='Nelder-Mead', options={'xatol': 1e-12, 'fatol': 1e-14})
        if best is None or sol.fun < best.fun:
            best = sol
    return np.einsum('n,nij->ij', best.x, basis)

def invariant_hermitian_form(rep, null_tol=constants.SVD_NULL, gap=constants.SVD_GAP):
    """A Hermitian H with M†HM = H for every generator, or None if there isn't a definite or one-dimensional
    family of them."""
    basis = _hermitian_basis()
    rows = []
    for M in rep.generators:
        images = np.einsum('ji,njk,kl->nil', M.conj(), basis, M) - basis
        images = images.reshape(4, -1).T
        rows.extend([images.real, images.imag])
    L = np.concatenate(rows)
    _, s, vh = np.linalg.svd(L)
    if s[-1] > null_tol*s[0]:
        return None

    dim = int((s < gap*s[0]).sum())
    if dim == 1:
        H = np.einsum('n,nij->ij', vh[-1], basis)
    else:
        H = _most_definite(vh[-dim:].T)

    if np.trace(H).real < 0:
        H = -H
    H = H/np.abs(np.linalg.eigvalsh(H)).max()
    definiteness = _definiteness(H)
    if dim > 1 and definiteness != 'positive':
        return None
    return HermitianForm(H=H, definiteness=definiteness, dimension=dim)

def is_irreducible(rep, tol=1e-8):
    """False iff all generators share an eigenvector."""
    gens = [g for g in rep.generators if np.abs(g - g[0, 0]*np.eye(2)).max() > tol*max(1, np.abs(g).max())]
    if not gens:
        return False
    _, vecs = np.linalg.eig(gens[0])
    for v in vecs.T:
        shared = True
        for g in gens:
            w = g @ v
            if abs(w[0]*v[1] - w[1]*v[0]) > tol*np.linalg.norm(w)*np.linalg.norm(v):
                shared = False
                break
        if shared:
            return False
    return True

def local_eigenvalue_errors(generators, exponents):
    """How far each generator's eigenvalues are from e^{±2πi·exponent}."""
    errors = []
    for M, e in zip(generators, exponents):
        ev = np.linalg.eigvals(M)
        a, b = np.exp(2j*np.pi*e), np.exp(-2j*np.pi*e)
        errors.append(min(max(abs(ev[0] - a), abs(ev[1] - b)), max(abs(ev[0] - b), abs(ev[1] - a))))
    return np.array(errors)

def trace_conditions(rep):
    """Traces that are real for a unitarizable rep: A, B and AB on the torus, and three pairwise products on
    the sphere."""
    if 'A' in rep.names:
        A, B = rep['A'], rep['B']
        return np.array([np.trace(A), np.trace(B), np.trace(A @ B)])
    M0, M1, M2, _ = rep.generators
    return np.array([np.trace(M0 @ M1), np.trace(M0 @ M2), np.trace(M1 @ M2)])

def unitarizability_residual(rep):
    r = float(np.linalg.norm(trace_conditions(rep).imag))
    if r >= constants.UNITARY_THRESHOLD:
        return r
    H = invariant_hermitian_form(rep)
    if H is None:
        return r + 1.
    ev = np.linalg.eigvalsh(H.H)
    return r + max(0., -ev[0]/np.abs(ev).max())

def status(rep):
    if np.linalg.norm(trace_conditions(rep).imag) >= constants.UNITARY_THRESHOLD:
        return 'non-unitarizable (complex trace)', None
    H = invariant_hermitian_form(rep)
    if H is None or H.definiteness != 'positive':
        return 'real-trace-indefinite', H
    if is_irreducible(rep):
        return 'unitarizable', H
    return 'reducible-unitary', H

#########
# TESTS #
#########

def _rep(*generators, names=None):
    generators = np.stack(generators)
    names = names or [f'M{i}' for i in range(len(generators))]
    return MonodromyRep(generators=generators, names=names, base_point=0., rtol=None, order=None, defect=None)

def _random_su2(rng):
    a, b = rng.normal(size=2) + 1j*rng.normal(size=2)
    n = np.sqrt(abs(a)**2 + abs(b)**2)
    a, b = a/n, b/n
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]])

def test_transport_trivial():
    zero = lambda p: (np.zeros((2, 2), dtype=complex), None)
    path = lasso(0., 2., .5)
    np.testing.assert_allclose(parallel_transport(zero, path), np.eye(2), atol=1e-14)

def test_transport_composition_and_reversal():
    system = fuchsian.fuchsian_system(fuchsian.EXAMPLE, 2.5, .4 + .2j, .3)
    ev = lambda p: (fuchsian.connection_form(system, p), None)
    p1 = [Line(4., 3 + 1j)]
    p2 = [Arc(1.5 + 1j, 1.5, 0., np.pi/2)]
    T1 = parallel_transport(ev, p1)
    T2 = parallel_transport(ev, p2)
    np.testing.assert_allclose(parallel_transport(ev, p1 + p2), T2 @ T1, atol=1e-9)
    np.testing.assert_allclose(parallel_transport(ev, reverse(p1)), np.linalg.inv(T1), atol=1e-8)
    assert abs(np.linalg.det(T1) - 1) < 1e-9

def test_batched_transport():
    system = fuchsian.fuchsian_system(fuchsian.EXAMPLE, 2.5, .4 + .2j)
    lams = np.array([0., .5, 1j])
    As = fuchsian.residue_matrices(system.weights, system.u)[None] + lams[:, None, None, None]*fuchsian.higgs_matrices(system.u).Psi[None]
    def batched(p):
        _, A1, A2, A3 = As.transpose(1, 0, 2, 3)
        return A1/(p - 1) + A2/p + A3/(p - system.m), None
    path = lasso(0., 4., .3, [1., 2.5])
    Ts = parallel_transport(batched, path)
    for lam, T in zip(lams, Ts):
        s = fuchsian.fuchsian_system(system.weights, system.m, system.u, lam)
        single = parallel_transport(lambda p: (fuchsian.connection_form(s, p), None), path)
        np.testing.assert_allclose(T, single, atol=1e-8)

def test_sphere_monodromy():
    w = fuchsian.Weights(fuchsian.EXAMPLE)
    for m, u, lam in [(2.5, .4 + .2j, 0.), (2. + 1j, -.3 + .5j, .7 - .2j)]:
        rep = sphere_monodromy(fuchsian.fuchsian_system(w, m, u, lam))
        np.testing.assert_allclose(np.trace(rep.generators, axis1=1, axis2=2), 2*np.cos(2*np.pi*w.rho), atol=1e-7)
        np.testing.assert_allclose(np.linalg.det(rep.generators), 1, atol=1e-9)
        assert rep.defect < 1e-7

def test_quarter_weights_traceless():
    rep = sphere_monodromy(fuchsian.fuchsian_system([.25]*4, 2.5, .4 + .2j))
    np.testing.assert_allclose(np.trace(rep.generators, axis1=1, axis2=2), 0, atol=1e-7)

def test_local_classes_independent_of_lambda():
    w = fuchsian.Weights(fuchsian.EXAMPLE)
    for lam in np.linspace(0, 1 + 1j, 3):
        rep = sphere_monodromy(fuchsian.fuchsian_system(w, 2.5, .4 + .2j, lam))
        np.testing.assert_allclose(np.trace(rep.generators, axis1=1, axis2=2), 2*np.cos(2*np.pi*w.rho), atol=1e-7)

def test_base_point_independence():
    system = fuchsian.fuchsian_system(fuchsian.EXAMPLE, 2.5, .4 + .2j, .2)
    a = sphere_monodromy(system)
    b = sphere_monodromy(system, base_point=5.)
    np.testing.assert_allclose(np.trace(a.generators, axis1=1, axis2=2), np.trace(b.generators, axis1=1, axis2=2), atol=1e-7)

def test_tolerance_scaling():
    system = fuchsian.fuchsian_system(fuchsian.EXAMPLE, 2.5, .4 + .2j, .2)
    a = sphere_monodromy(system, rtol=1e-10)
    b = sphere_monodromy(system, rtol=5e-11)
    assert np.abs(a.generators - b.generators).max() < 100*1e-10

def test_invariant_form_su2():
    rng = np.random.RandomState(0)
    rep = _rep(*[_random_su2(rng) for _ in range(3)])
    H = invariant_hermitian_form(rep)
    assert H.definiteness == 'positive'
    np.testing.assert_allclose(H.H, np.eye(2), atol=1e-10)
    assert is_irreducible(rep)
    assert unitarizability_residual(rep) < 1e-10

    # Conjugation moves the form to C^{-†} H C^{-1}
    C = np.array([[1, 2 + 1j], [.5, 3]])
    Ci = np.linalg.inv(C)
    conj = _rep(*[C @ g @ Ci for g in rep.generators])
    H2 = invariant_hermitian_form(conj)
    assert H2.definiteness == 'positive'
    expected = Ci.conj().T @ Ci
    expected = expected/np.abs(np.linalg.eigvalsh(expected)).max()
    np.testing.assert_allclose(H2.H, expected, atol=1e-8)

def test_invariant_form_absent():
    g = np.array([[1 + 1j, 1], [0, 1/(1 + 1j)]])
    h = np.array([[1, 0], [1, 1]])
    rep = _rep(g, h)
    assert invariant_hermitian_form(rep) is None

def test_residual_definition():
    g = np.array([[np.exp(.05j + .05), 0], [0, np.exp(-.05j - .05)]])
    rep = _rep(g, np.eye(2), names=['A', 'B'])
    # tr A and tr AB carry the same imaginary part
    np.testing.assert_allclose(unitarizability_residual(rep), np.sqrt(2)*abs(np.trace(g).imag))

def test_lasso_order():
    # Seen from the base, 1 + i is above 1 - i
    assert lasso_order([1 + 1j, 1 - 1j, -5 + 4j], 4., .1) == (2, 1, 3, 0)
    # Collinear punctures: the tail to the farther one swings under the nearer
    assert lasso_order([1., 0., 2.5], 4.5, .2) == (2, 1, 3, 0)

def test_frozen_order_holds():
    for m, u in [(2.5, .4 + .2j), (2. + 1j, -.3 + .5j), (-1., .3 - .6j), (.3 + .1j, 2. - 1j)]:
        system = fuchsian.fuchsian_system(fuchsian.EXAMPLE, m, u, .3 - .1j)
        rep = sphere_monodromy(system)
        assert rep.defect < 1e-7
        _, best = calibrate_product_order(rep.generators)
        assert best <= rep.defect

def test_irreducibility():
    d1 = np.diag([1j, -1j])
    d2 = np.diag([np.exp(.3j), np.exp(-.3j)])
    assert not is_irreducible(_rep(d1, d2))
    assert not is_irreducible(_rep(d1, np.eye(2), np.eye(2)))
    assert is_irreducible(_rep(d1, np.array([[0, 1], [-1, 0]])))

def test_reducible_unitary():
    d1 = np.diag([np.exp(.3j), np.exp(-.3j)])
    d2 = np.diag([np.exp(1.1j), np.exp(-1.1j)])
    rep = _rep(d1, d2, names=['A', 'B'])
    H = invariant_hermitian_form(rep)
    assert H.definiteness == 'positive' and H.dimension == 2
    assert status(rep)[0] == 'reducible-unitary'

def test_complex_trace_status():
    system = fuchsian.fuchsian_system(fuchsian.EXAMPLE, 2.5, .4 + .2j, 3 + 2j)
    rep = sphere_monodromy(system)
    assert status(rep)[0] == 'non-unitarizable (complex trace)'
