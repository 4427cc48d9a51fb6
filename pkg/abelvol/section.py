"""The Mehta–Seshadri section ξ ↦ α^MS(ξ): for each Jacobian point ξ, the unique α making the abelianized
connection unitarizable.

Solving is Gauss-Newton on Im tr M_A = Im tr M_B = Im tr M_A M_B = 0, with α as the complex unknown. On the lines
through spin points the first two conditions hold along a whole curve, and the third picks the unitary point on
it. Traces are holomorphic in α, so one batched transport of (α, α+h, α-h) gives the full real Jacobian. Grids are
solved outwards from an anchor in rings of increasing index distance, each sample seeded from its solved
neighbours plus the change in the spin-expansion seed between them, and failures are re-solved from both sides.
"""
import numpy as np
from logging import getLogger
from rebar import arrdict, parallel
from . import common, elliptic, fuchsian, abelian, monodromy, stability, constants
from .common import AnchorError, GridConvergenceError, SpinProximityError

log = getLogger(__name__)

class MSSample(arrdict.namedarrtuple('MSSample', ('xi', 'alpha', 'residual', 'hermitian_witness', 'converged', 'status', 'iterations'))):
    pass

class MSGrid(arrdict.namedarrtuple('MSGrid', ('weights', 'curve', 'N', 'radius', 'xi', 'alpha', 'residual', 'converged', 'excluded', 'status', 'meta'))):

    @property
    def fraction(self):
        return self.converged.sum()/max((~self.excluded).sum(), 1)

def _scale(curve):
    """k = 2πi/(τ-τ̄), the real generator of Λ."""
    return np.pi/curve.tau.imag

def log_theta_derivative(xi, curve):
    """Θ'/Θ for Θ(ξ) = ϑ(ξ Im τ/π)."""
    lattice = curve.lattice
    t0, t1 = elliptic.theta_derivatives(elliptic.x_from_xi(xi, lattice), lattice, 1)
    return (lattice.tau.imag/np.pi)*t1/t0

def seed_from_spin_expansion(weights, curve, xi):
    """The spin-point expansion of α^MS with the doubly periodic remainder dropped:
    (Σμ)ξ + (1-Σμ)ξ̄ + Σᵢ k μᵢ/2 (Θ'/Θ(ξ-γᵢ) - Θ'/Θ(-ξ-γᵢ))."""
    abelian.check_spin(xi, curve)
    xi = np.asarray(xi, dtype=complex)
    mu = abelian.mu_table(weights)
    gammas = abelian.spin_gammas(curve)
    k = _scale(curve)
    seed = mu.sum()*xi + (1 - mu.sum())*np.conj(xi)
    for m, g in zip(mu, gammas):
        if m > 0:
            seed = seed + k*m/2*(log_theta_derivative(xi - g, curve) - log_theta_derivative(-xi - g, curve))
    return complex(seed) if seed.ndim == 0 else seed

def cycle_traces(weights, curve, xi, alphas, rtol):
    """tr M_A, tr M_B and tr M_A M_B for each α in ``alphas``; shape ``alphas.shape + (3,)``."""
    conn = abelian.abelian_connection(weights, curve, xi, alphas)
    loops = monodromy.torus_loops(curve.lattice, curve.half_points)[:2]
    A, B = [monodromy.parallel_transport(conn.form, l.path, rtol=rtol) for l in loops]
    tr = lambda M: np.trace(M, axis1=-2, axis2=-1)
    return np.stack([tr(A), tr(B), tr(A @ B)], -1)

def _newton(f, z, tol, max_iter, max_step, step=constants.NEWTON_STEP):
    """Gauss-Newton on Im g(z) = 0 for a holomorphic ``g: C → Cⁿ``, n ≥ 2, evaluated in batches of
    (z, z+h, z-h). Returns the best iterate, its residual and the iteration count.

    Where the first two components only cut out a curve of real-trace solutions, the rest pin the point down."""
    best = (np.inf, z, 0)
    for i in range(max_iter):
        h = step*max(1, abs(z))
        g = f(np.array([z, z + h, z - h]))
        F = g[0].imag
        norm = np.linalg.norm(F)
        if norm < best[0]:
            best = (norm, z, i)
        if norm < tol:
            break
        dg = (g[1] - g[2])/(2*h)
        # Im g(z + a + ib) ≈ Im g + a·Im g' + b·Re g'
        J = np.stack([dg.imag, dg.real], -1)
        δ, _, rank, _ = np.linalg.lstsq(J, -F, rcond=None)
        if rank < 2:
            log.debug(f'Rank-deficient Jacobian at {z}')
            break
        dz = δ[0] + 1j*δ[1]
        if abs(dz) > max_step:
            dz = max_step*dz/abs(dz)
        z = z + dz
    norm, z, i = best
    return z, norm, i

def certify(conn, rtol):
    rep = monodromy.torus_monodromy(conn, rtol=rtol)
    status, H = monodromy.status(rep)
    return rep, status, H, monodromy.unitarizability_residual(rep)

def _solve_once(weights, curve, xi, seed, rtol, tol, max_iter):
    f = lambda alphas: cycle_traces(weights, curve, xi, alphas, rtol)
    max_step = .5*_scale(curve)*min(1, abs(curve.tau))
    alpha, norm, iterations = _newton(f, seed, tol, max_iter, max_step)
    if norm >= constants.UNITARY_THRESHOLD:
        log.debug(f'Newton diverged at ξ={xi:.4f}; best trace residual {norm:.2e}')
        return MSSample(xi=xi, alpha=alpha, residual=float(norm), hermitian_witness=None, converged=False, status='diverged', iterations=iterations)

    conn = abelian.abelian_connection(weights, curve, xi, alpha)
    _, status, H, residual = certify(conn, rtol)
    converged = (status in ('unitarizable', 'reducible-unitary')) and (residual < constants.UNITARY_THRESHOLD)
    return MSSample(xi=xi, alpha=alpha, residual=float(residual), hermitian_witness=H, converged=converged, status=status, iterations=iterations)

def solve_alpha_ms(weights, curve, xi, seed, rtol=1e-10, tol=constants.NEWTON_TOL, max_iter=constants.NEWTON_ITERS, fallbacks=None):
    """Solves for α^MS(ξ) from ``seed``. When that diverges or certifies as anything but unitary, the seeds in
    ``fallbacks`` are tried in turn; by default these are the spin-expansion seed and four points around ``seed``.
    Returns the first certified sample, or the failed one with the smallest residual."""
    weights = fuchsian.as_weights(weights)
    xi, seed = complex(xi), complex(seed)
    common.finite(seed)
    abelian.check_spin(xi, curve)
    if fallbacks is None:
        spread = .05*_scale(curve)
        fallbacks = [seed_from_spin_expansion(weights, curve, xi)] + [seed + spread*np.exp(2j*np.pi*(j + .5)/4) for j in range(4)]

    best = None
    for attempt, s in enumerate([seed, *fallbacks]):
        sample = _solve_once(weights, curve, xi, complex(s), rtol, tol, max_iter)
        if sample.converged:
            return sample
        log.debug(f'Attempt {attempt} at ξ={xi:.4f} ended "{sample.status}"')
        if best is None or sample.residual < best.residual:
            best = sample
    return best

def _solve_worker(rho, tau, xi, seed, rtol, fallbacks=None):
    curve = elliptic.curve_from_tau(elliptic.Lattice(tau))
    try:
        s = solve_alpha_ms(rho, curve, xi, seed, rtol=rtol, fallbacks=fallbacks)
    except SpinProximityError:
        raise
    except Exception as e:
        log.warning(f'Solve at ξ={xi} failed: {e}')
        return dict(alpha=np.nan, residual=np.inf, converged=False, status='diverged')
    return dict(alpha=s.alpha, residual=s.residual, converged=s.converged, status=s.status)

def grid_points(curve, N):
    """ξ on the N×N grid over the Λ-cell centred on zero; index [j, k] has lattice coordinates
    ((2j - N)/2N, (2k - N)/2N)."""
    s = (2*np.arange(N) - N)/(2*N)
    S, T = np.meshgrid(s, s, indexing='ij')
    return _scale(curve)*(S + T*curve.tau)

def default_radius(curve, N, cells=2.):
    k = _scale(curve)
    cell = min(k, k*abs(curve.tau))/N
    return max(cells*cell, abelian.exclusion_radius(curve)*1.01)

def rings(N, anchor):
    """Indices grouped by Chebyshev distance from the anchor, each ring in row-major order."""
    j, k = np.indices((N, N))
    d = np.maximum(np.abs(j - anchor[0]), np.abs(k - anchor[1]))
    return [list(zip(*np.nonzero(d == r))) for r in range(d.max() + 1)]

def _continuation_seeds(idx, converged, alpha, seeds, reach):
    """Seeds for ``idx`` continued from each solved sample within Chebyshev distance ``reach``, nearest first:
    the neighbour's α plus the change in the spin-expansion seed between them."""
    N = converged.shape[0]
    j, k = idx
    near = []
    for dj in range(-reach, reach+1):
        for dk in range(-reach, reach+1):
            jj, kk = j + dj, k + dk
            if (dj or dk) and 0 <= jj < N and 0 <= kk < N and converged[jj, kk]:
                near.append((dj**2 + dk**2, jj, kk))
    return [complex(alpha[jj, kk] + seeds[idx] - seeds[jj, kk]) for _, jj, kk in sorted(near)]

def _solve_all(todo, threads, executor, progress, desc):
    with parallel.parallel(_solve_worker, progress=progress, desc=desc, N=threads, executor=executor) as pool:
        return pool.wait({idx: pool(*args) for idx, args in todo.items()})

def ms_grid(weights, curve, N, radius=None, rtol=1e-10, threads=0, executor='loky', progress=False, refills=2):
    """Solves α^MS over the N×N grid in rings from an anchor, then re-solves any failed sample from its solved
    neighbours on every side, for up to ``refills`` sweeps."""
    if N < 8:
        raise ValueError(f'Grid needs N ≥ 8, got {N}')
    weights = fuchsian.as_weights(weights)
    radius = default_radius(curve, N) if radius is None else radius
    xi = grid_points(curve, N)
    excluded = abelian.spin_distance(xi, curve) < radius

    alpha = np.full((N, N), np.nan, dtype=complex)
    residual = np.full((N, N), np.inf)
    converged = np.zeros((N, N), dtype=bool)
    status = np.full((N, N), 'excluded', dtype=object)
    seeds = np.full((N, N), np.nan, dtype=complex)
    seeds[~excluded] = seed_from_spin_expansion(weights, curve, xi[~excluded])

    anchor = (int(round(3*N/4)), int(round(3*N/4)))
    if excluded[anchor]:
        free = np.argwhere(~excluded)
        anchor = tuple(int(i) for i in free[np.argmin(np.abs(free - anchor).max(1))])

    s = solve_alpha_ms(weights, curve, xi[anchor], seeds[anchor], rtol=rtol)
    if not s.converged:
        raise AnchorError(f'Anchor at ξ={xi[anchor]:.4f} failed with status "{s.status}"', last=s.alpha)
    alpha[anchor], residual[anchor], converged[anchor], status[anchor] = s.alpha, s.residual, True, s.status
    log.info(f'Anchor at ξ={xi[anchor]:.4f} solved, α={s.alpha:.6f}')

    def store(results):
        for idx, res in results.items():
            alpha[idx], residual[idx], converged[idx], status[idx] = res['alpha'], res['residual'], res['converged'], res['status']
        return sum(res['converged'] for res in results.values())

    for r, ring in enumerate(rings(N, anchor)[1:], 1):
        todo = {}
        for idx in ring:
            if excluded[idx]:
                continue
            cands = _continuation_seeds(idx, converged, alpha, seeds, reach=3)
            primary = cands[0] if cands else seeds[idx]
            fallbacks = cands[1:4] + [complex(seeds[idx])]
            todo[idx] = (weights.rho, curve.tau, complex(xi[idx]), complex(primary), rtol, fallbacks)
        n = store(_solve_all(todo, threads, executor, progress, f'ring {r}'))
        log.debug(f'Ring {r}: {n}/{len(todo)} converged')

    refilled, spread = 0, .05*_scale(curve)
    for sweep in range(refills):
        todo = {}
        for idx in map(tuple, np.argwhere(~converged & ~excluded)):
            cands = _continuation_seeds(idx, converged, alpha, seeds, reach=2)
            if cands:
                around = [cands[0] + spread*np.exp(2j*np.pi*(j + .5)/4) for j in range(4)]
                todo[idx] = (weights.rho, curve.tau, complex(xi[idx]), cands[0], rtol, cands[1:6] + around)
        if not todo:
            break
        n = store(_solve_all(todo, threads, executor, progress, f'refill {sweep}'))
        refilled += n
        log.info(f'Refill sweep {sweep}: {n}/{len(todo)} recovered')
        if n == 0:
            break

    meta = dict(
        loop_convention='torus base (1+τ)/4; A: b → b+1; B: b → b+τ; N_i: lassos around w_i',
        order='Chebyshev rings from the anchor, row-major within a ring, then refill sweeps',
        anchor=anchor, rtol=rtol, newton_step=constants.NEWTON_STEP, refilled=refilled,
        unitary_threshold=constants.UNITARY_THRESHOLD, slope_sign=constants.HIGGS_SLOPE_SIGN)
    grid = MSGrid(
        weights=weights, curve=curve, N=N, radius=radius, xi=xi, alpha=alpha, residual=residual,
        converged=converged, excluded=excluded, status=status, meta=meta)
    log.info(f'Grid N={N}: {100*grid.fraction:.1f}% of {(~excluded).sum()} samples converged')
    return grid

def check_grid(grid, min_fraction=.95):
    if grid.fraction < min_fraction:
        raise GridConvergenceError(f'Only {100*grid.fraction:.1f}% of the grid converged; need {100*min_fraction:.0f}%')

def remainder(grid):
    """f = α^MS - seed; doubly periodic where α^MS satisfies the functional equations."""
    f = np.full(grid.alpha.shape, np.nan, dtype=complex)
    ok = grid.converged
    f[ok] = grid.alpha[ok] - seed_from_spin_expansion(grid.weights, grid.curve, grid.xi[ok])
    return f

def _subset(grid, samples):
    idx = np.argwhere(grid.converged)
    picks = np.unique(np.linspace(0, len(idx) - 1, min(samples, len(idx))).astype(int))
    return [tuple(i) for i in idx[picks]]

def verify_section_symmetries(grid, samples=6, threads=0, executor='loky'):
    """Max deviations from oddness and from the two functional equations. The functional equations are checked
    twice: on the grid, where the samples on opposite cell edges are related by a shift and a sign flip; and by
    re-solving at shifted points of a subset from their own spin-expansion seeds. Also compares A/B-cycle traces
    across each shift."""
    N, curve = grid.N, grid.curve
    k = _scale(curve)
    alpha, ok = grid.alpha, grid.converged

    odd = 0.
    for j in range(1, N):
        for l in range(1, N):
            if ok[j, l] and ok[N-j, N-l]:
                odd = max(odd, abs(alpha[j, l] + alpha[N-j, N-l]))

    # ξ[0, l] + k = -ξ[0, N-l] and ξ[j, 0] + kτ = -ξ[N-j, 0]
    report = {'odd': odd, 'period_1': 0., 'period_tau': 0., 'gauge_trace': 0.}
    for l in range(1, N):
        if ok[0, l] and ok[0, N-l]:
            report['period_1'] = max(report['period_1'], abs(alpha[0, l] + alpha[0, N-l] + k))
    for j in range(1, N):
        if ok[j, 0] and ok[N-j, 0]:
            report['period_tau'] = max(report['period_tau'], abs(alpha[j, 0] + alpha[N-j, 0] + k*np.conj(curve.tau)))

    shifts = {'period_1': (k, k), 'period_tau': (k*curve.tau, k*np.conj(curve.tau))}
    rtol = grid.meta['rtol']
    todo = {}
    for idx in _subset(grid, samples):
        for name, (dxi, _) in shifts.items():
            shifted = complex(grid.xi[idx] + dxi)
            todo[idx, name] = (grid.weights.rho, curve.tau, shifted, seed_from_spin_expansion(grid.weights, curve, shifted), rtol)
    with parallel.parallel(_solve_worker, progress=False, N=threads, executor=executor) as pool:
        results = pool.wait({key: pool(*args) for key, args in todo.items()})

    for (idx, name), res in results.items():
        dxi, dalpha = shifts[name]
        if not res['converged']:
            report[name] = np.inf
            continue
        report[name] = max(report[name], abs(res['alpha'] - alpha[idx] - dalpha))
        before = cycle_traces(grid.weights, curve, grid.xi[idx], alpha[idx], rtol)
        after = cycle_traces(grid.weights, curve, grid.xi[idx] + dxi, res['alpha'], rtol)
        report['gauge_trace'] = max(report['gauge_trace'], np.abs(before - after).max())
    return report

def fit_spin_residue(weights, curve, index, radii=None, angles=(.3, 2.4, 4.4), rtol=1e-10):
    """Fits c/(ξ-γ) + a + b(ξ-γ) + b'(ξ-γ)‾ to α^MS on rays into the spin point γ, returning c and the
    expected k·μ_γ."""
    weights = fuchsian.as_weights(weights)
    gamma = abelian.spin_gammas(curve)[index]
    k = _scale(curve)
    period = min(abs(p) for p in curve.lattice.dual_periods)
    radii = period*np.array([.04, .06, .09, .13]) if radii is None else np.asarray(radii)

    d, alphas = [], []
    for θ in angles:
        prev = None
        for r in radii[::-1]:
            xi = gamma + r*np.exp(1j*θ)
            seed = seed_from_spin_expansion(weights, curve, xi)
            if prev is not None:
                seed = prev[1] + seed - seed_from_spin_expansion(weights, curve, prev[0])
            s = solve_alpha_ms(weights, curve, xi, seed, rtol=rtol)
            if not s.converged:
                log.warning(f'Ray sample at ξ={xi:.4f} failed with status "{s.status}"')
                continue
            prev = (xi, s.alpha)
            d.append(xi - gamma)
            alphas.append(s.alpha)

    d = np.array(d)
    basis = np.stack([1/d, np.ones_like(d), d, np.conj(d)], -1)
    coeffs, *_ = np.linalg.lstsq(basis, np.array(alphas), rcond=None)
    mu = abelian.mu_table(weights)[index]
    return complex(coeffs[0]), k*mu

def uniqueness_probe(weights, curve, xi, alpha, n=5, spread=None, rtol=1e-10):
    """Re-solves from ``n`` seeds around ``alpha`` and returns the largest distance from it."""
    spread = .02*_scale(curve) if spread is None else spread
    devs = []
    for j in range(n):
        s = solve_alpha_ms(weights, curve, xi, alpha + spread*np.exp(2j*np.pi*j/n), rtol=rtol)
        devs.append(abs(s.alpha - alpha) if s.converged else np.inf)
    return max(devs)

def _sphere_generators(system, lams, rtol):
    As = fuchsian.residue_matrices(system.weights, system.u)[None] + np.asarray(lams)[:, None, None, None]*fuchsian.higgs_matrices(system.u).Psi[None]
    _, A1, A2, A3 = As.transpose(1, 0, 2, 3)
    m = system.m

    def evaluator(p):
        return A1/(p - 1) + A2/p + A3/(p - m), None

    loops = monodromy.sphere_loops(system)
    return np.stack([monodromy.parallel_transport(evaluator, l.path, rtol=rtol) for l in loops], 1)

def sphere_side_solve(weights, m, u, seed_lambda=0., rtol=1e-10, tol=constants.NEWTON_TOL, max_iter=constants.NEWTON_ITERS):
    """The λ for which ∇^u + λΨ has unitarizable monodromy, by Gauss-Newton on
    Im tr M₀M₁ = Im tr M₀M₂ = Im tr M₁M₂ = 0."""
    weights = fuchsian.as_weights(weights)
    verdict = stability.classify_parabolic_structure(weights, u, m)
    if verdict.verdict != 'stable':
        raise ValueError(f'Parabolic structure u={u} is {verdict.verdict}, witnessed by {verdict.witness}')
    system = fuchsian.fuchsian_system(weights, m, u, seed_lambda)

    def f(lams):
        M = _sphere_generators(system, lams, rtol)
        tr = lambda i, j: np.trace(M[:, i] @ M[:, j], axis1=-2, axis2=-1)
        return np.stack([tr(0, 1), tr(0, 2), tr(1, 2)], -1)

    lam, norm, _ = _newton(f, complex(seed_lambda), tol, max_iter, max_step=1.)
    rep = monodromy.sphere_monodromy(fuchsian.fuchsian_system(weights, m, u, lam), rtol=rtol)
    status, _ = monodromy.status(rep)
    if status != 'unitarizable':
        log.warning(f'Sphere-side solve at u={u} ended with status "{status}"')
    return lam, rep

def _winding(values):
    phase = np.unwrap(np.angle(values))
    return int(np.round((phase[-1] - phase[0])/(2*np.pi)))

def cycle_windings(curve, n=4096):
    """For each of the torus A and B cycles, the winding numbers of its image on the sphere around z = 1, 0, m
    and the winding of ℘' along it."""
    loops = monodromy.torus_loops(curve.lattice, curve.half_points)[:2]
    result = {}
    for name, loop in zip('AB', loops):
        w = monodromy.path_points(loop.path, n)
        z, _ = elliptic.curve_coords(w, curve)
        _, dwp = elliptic.wp_eval(w, curve.lattice)
        around = {p: _winding(z - c) for p, c in zip(('1', '0', 'm'), (1., 0., curve.m))}
        result[name] = dict(punctures=around, wp_prime=_winding(dwp))
    return result

def projected_cycle_traces(system, curve, rtol=1e-10):
    """Traces of the sphere system around the images of the torus A and B cycles, by transporting its pullback
    (A(z) dz/dw) along the torus paths."""
    def evaluator(w):
        z, y = elliptic.curve_coords(w, curve)
        return fuchsian.connection_form(system, z)*(2*curve.sqrt_p12*y), None

    loops = monodromy.torus_loops(curve.lattice, curve.half_points)[:2]
    return {name: complex(np.trace(monodromy.parallel_transport(evaluator, loop.path, rtol=rtol)))
            for name, loop in zip('AB', loops)}

def calibrate_cycle_pairing(system, curve, rtol=1e-10):
    """The sphere-side partner of each torus cycle: the punctures its image encircles, the ∇ˢ holonomy sign, and
    the signed sphere trace that tr M_A or tr M_B should equal."""
    traces = projected_cycle_traces(system, curve, rtol)
    return {name: dict(
                punctures=constants.CYCLE_PUNCTURES[name],
                sign=constants.SPIN_SIGNS[name],
                trace=constants.SPIN_SIGNS[name]*traces[name])
            for name in 'AB'}

def cross_validate(weights, curve, u, rtol=1e-10):
    """Solves both sides at the parabolic structure u and compares the A/B traces of the torus solution with
    the paired sphere traces."""
    weights = fuchsian.as_weights(weights)
    lam, sphere_rep = sphere_side_solve(weights, curve.m, u, rtol=rtol)
    sphere_status, _ = monodromy.status(sphere_rep)
    pairing = calibrate_cycle_pairing(fuchsian.fuchsian_system(weights, curve.m, u, lam), curve, rtol)

    xi = abelian.u_to_xi(u, +1, curve)
    s = solve_alpha_ms(weights, curve, xi, seed_from_spin_expansion(weights, curve, xi), rtol=rtol)
    torus = cycle_traces(weights, curve, xi, s.alpha, rtol)[:2]
    mismatch = max(abs(pairing[name]['trace'] - t) for name, t in zip('AB', torus))
    return dict(
        u=u, lam=lam, xi=xi, alpha=s.alpha, status=s.status, sphere_status=sphere_status,
        pairing=pairing, torus_traces=torus, mismatch=float(mismatch))

def higgs_slope_errors(weights, curve, u, lam, alpha, dlam=1e-2, rtol=1e-11):
    """Moves the sphere side from λ to λ + ``dlam`` and the torus side from α to α ± slope·``dlam``, returning
    the A/B trace mismatch for each sign. The + entry is small when the slope's sign is right."""
    weights = fuchsian.as_weights(weights)
    slope = abelian.higgs_alpha_slope(u, abelian.spectral_v(u, curve.m, +1), curve)
    xi = abelian.u_to_xi(u, +1, curve)
    pairing = calibrate_cycle_pairing(fuchsian.fuchsian_system(weights, curve.m, u, lam + dlam), curve, rtol)
    sphere = np.array([pairing[name]['trace'] for name in 'AB'])
    errors = {}
    for sign in (+1, -1):
        torus = cycle_traces(weights, curve, xi, alpha + sign*slope*dlam, rtol)[:2]
        errors[sign] = float(np.abs(torus - sphere).max())
    return errors

#########
# TESTS #
#########

def _curve(m=2.5):
    return elliptic.curve_from_tau(elliptic.tau_from_m(m))

def test_seed_quarter_weights():
    curve = _curve()
    xi = .3 + .2j
    assert seed_from_spin_expansion([.25]*4, curve, xi) == np.conj(xi)

def test_seed_odd_and_quasiperiodic():
    curve = _curve()
    k = _scale(curve)
    xi = .3 + .2j
    seed = lambda xi: seed_from_spin_expansion(fuchsian.EXAMPLE, curve, xi)
    np.testing.assert_allclose(seed(-xi), -seed(xi), rtol=1e-12)
    np.testing.assert_allclose(seed(xi + k), seed(xi) + k, rtol=1e-10)
    np.testing.assert_allclose(seed(xi + k*curve.tau), seed(xi) + k*np.conj(curve.tau), rtol=1e-10)

def test_seed_pole():
    curve = _curve()
    k = _scale(curve)
    mu = abelian.mu_table(fuchsian.EXAMPLE)
    gamma = abelian.spin_gammas(curve)[1]
    eps = np.array([.08, .03])*k*np.exp(.7j)
    seeds = seed_from_spin_expansion(fuchsian.EXAMPLE, curve, gamma + eps)
    regular = seeds - k*mu[1]/eps
    # The pole term is large here, the rest stays bounded
    assert abs(regular[1] - regular[0]) < 1

def test_newton_scalar():
    # Im g = 0 for g(z) = (z² - 1, z) has the root z = 1 on the real line near 1.3 + .2j
    f = lambda zs: np.stack([zs**2 - 1 - 1j*(zs**2 - 1), zs - 1], -1)
    z, norm, _ = _newton(f, 1.3 + .2j, 1e-12, 30, 1.)
    assert norm < 1e-12
    np.testing.assert_allclose(z, 1, atol=1e-8)

def test_quarter_weights_solution():
    curve = _curve()
    xi = .3 + .2j
    s = solve_alpha_ms([.25]*4, curve, xi, np.conj(xi), rtol=1e-11)
    assert s.converged and s.status == 'reducible-unitary'
    assert s.alpha == np.conj(xi)
    assert s.residual < 1e-8

def test_quarter_weights_from_offset_seed():
    curve = _curve()
    xi = .3 + .2j
    s = solve_alpha_ms([.25]*4, curve, xi, np.conj(xi) + .05 - .03j, rtol=1e-11)
    assert s.converged
    np.testing.assert_allclose(s.alpha, np.conj(xi), atol=1e-7)

def test_grid_points_odd():
    curve = _curve()
    N = 24
    xi = grid_points(curve, N)
    j, l = 5, 17
    assert xi[j, l] == -xi[N-j, N-l]

def test_rings():
    r = rings(8, (6, 6))
    assert r[0] == [(6, 6)]
    assert len(r[1]) == 8
    assert sum(len(x) for x in r) == 64

def test_newton_pins_point_on_curve():
    # The first two components vanish on the whole line Im z = 0; the third picks z = 1 on it
    f = lambda zs: np.stack([zs - 1, 2*(zs - 1), 1j*(zs - 1)], -1)
    z, norm, _ = _newton(f, 1.4 - .3j, 1e-12, 30, 1.)
    assert norm < 1e-12
    np.testing.assert_allclose(z, 1, atol=1e-10)

def test_continuation_seeds():
    N = 8
    converged = np.zeros((N, N), dtype=bool)
    alpha = np.zeros((N, N), dtype=complex)
    seeds = np.arange(N*N).reshape(N, N).astype(complex)
    converged[3, 4], alpha[3, 4] = True, 100.
    converged[5, 5], alpha[5, 5] = True, 200.
    cands = _continuation_seeds((4, 4), converged, alpha, seeds, reach=2)
    assert cands == [100. + seeds[4, 4] - seeds[3, 4], 200. + seeds[4, 4] - seeds[5, 5]]
    assert _continuation_seeds((0, 0), converged, alpha, seeds, reach=2) == []

def test_quarter_weights_grid():
    curve = _curve()
    grid = ms_grid([.25]*4, curve, 16, rtol=1e-12)
    ok = grid.converged
    assert grid.fraction == 1
    np.testing.assert_allclose(grid.alpha[ok], np.conj(grid.xi[ok]), atol=1e-12)
    assert grid.residual[ok].max() < 1e-10
    assert 'loop_convention' in grid.meta

    report = verify_section_symmetries(grid, samples=2)
    assert report['odd'] < 1e-10
    assert report['period_1'] < 1e-10
    assert report['period_tau'] < 1e-10
    assert report['gauge_trace'] < 1e-6

def test_generic_solution():
    curve = _curve()
    k = _scale(curve)
    w = fuchsian.EXAMPLE
    xi = k*(.2 + .31*curve.tau)
    seed = lambda xi: seed_from_spin_expansion(w, curve, xi)

    s = solve_alpha_ms(w, curve, xi, seed(xi), rtol=1e-11)
    assert s.converged and s.status == 'unitarizable'
    assert s.residual < 1e-7
    assert uniqueness_probe(w, curve, xi, s.alpha, rtol=1e-11) < 1e-6

    neg = solve_alpha_ms(w, curve, -xi, seed(-xi), rtol=1e-11)
    np.testing.assert_allclose(neg.alpha, -s.alpha, atol=1e-7)

    # α - seed is doubly periodic
    shifted = solve_alpha_ms(w, curve, xi + k, seed(xi + k), rtol=1e-11)
    assert shifted.converged
    np.testing.assert_allclose(shifted.alpha - seed(xi + k), s.alpha - seed(xi), atol=1e-7)

def test_generic_grid_on_spin_lines():
    # On the square lattice, the rows and columns through spin points are where two trace conditions
    # alone leave a curve of solutions
    curve = elliptic.curve_from_tau(elliptic.Lattice(1j))
    N = 12
    grid = ms_grid(fuchsian.EXAMPLE, curve, N, rtol=1e-10)
    assert grid.fraction >= .95
    assert not (grid.status == 'real-trace-indefinite').any()
    for line in (grid.converged[0] | grid.excluded[0], grid.converged[N//2] | grid.excluded[N//2],
                 grid.converged[:, 0] | grid.excluded[:, 0], grid.converged[:, N//2] | grid.excluded[:, N//2]):
        assert line.all()

    report = verify_section_symmetries(grid, samples=2)
    assert report['odd'] < 1e-6
    assert report['period_1'] < 1e-6
    assert report['period_tau'] < 1e-6

def test_remainder_periodic_on_grid():
    curve = _curve()
    N = 12
    grid = ms_grid(fuchsian.EXAMPLE, curve, N, rtol=1e-10)
    f = remainder(grid)
    # ξ[0, l] + k = -ξ[0, N-l], so a periodic odd f has f[0, l] = -f[0, N-l]
    pairs = [l for l in range(1, N) if grid.converged[0, l] and grid.converged[0, N-l]]
    assert pairs
    for l in pairs:
        np.testing.assert_allclose(f[0, l], -f[0, N-l], atol=1e-6)
    # and likewise across the τ-edge
    for j in range(1, N):
        if grid.converged[j, 0] and grid.converged[N-j, 0]:
            np.testing.assert_allclose(f[j, 0], -f[N-j, 0], atol=1e-6)

def test_spin_residue():
    curve = _curve()
    c, expected = fit_spin_residue(fuchsian.EXAMPLE, curve, 1, rtol=1e-11)
    assert abs(c - expected) < .02*abs(expected)

def test_cycle_windings():
    for m in (2.5, -1, .3+.1j):
        w = cycle_windings(_curve(m))
        for name in 'AB':
            p = w[name]['punctures']
            inside = set(constants.CYCLE_PUNCTURES[name])
            for q in ('1', '0', 'm'):
                assert abs(p[q]) == (1 if q in inside else 0)
            assert (-1)**w[name]['wp_prime'] == constants.SPIN_SIGNS[name]

def test_cross_validate():
    curve = _curve()
    for u in (.4+.2j, -.3+.5j):
        r = cross_validate(fuchsian.EXAMPLE, curve, u, rtol=1e-11)
        assert r['status'] == 'unitarizable'
        assert r['sphere_status'] == 'unitarizable'
        assert r['mismatch'] < 1e-5

def test_higgs_slope_sign():
    curve = _curve()
    u = .4+.2j
    r = cross_validate(fuchsian.EXAMPLE, curve, u, rtol=1e-11)
    errors = higgs_slope_errors(fuchsian.EXAMPLE, curve, u, r['lam'], r['alpha'])
    assert errors[+1] < 1e-4
    assert errors[-1] > 10*errors[+1]
