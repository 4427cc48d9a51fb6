"""Kähler density of the moduli space from the section grid, and its volume against the closed form 2π²(1 - Σμ)."""
import numpy as np
import pandas as pd
from logging import getLogger
from rebar import arrdict
from . import fuchsian, stability, abelian, section, constants
from .common import ConfigError, GridConvergenceError

log = getLogger(__name__)

class VolumeReport(arrdict.namedarrtuple('VolumeReport', ('weights', 'tau', 'N', 'radius', 'quadrature', 'extrapolated', 'closed_form', 'relative_error', 'table', 'meta'))):

    def asdict(self):
        return dict(
            weights=[float(r) for r in self.weights.rho],
            tau=[float(self.tau.real), float(self.tau.imag)],
            N=int(self.N),
            radius=float(self.radius),
            quadrature=float(self.quadrature),
            extrapolated=float(self.extrapolated),
            closed_form=float(self.closed_form),
            relative_error=float(self.relative_error),
            meta=self.meta)

def darboux_pairing(curve):
    """∫dw∧dw̄ over the unit cell, oriented so the volume comes out positive. No residue terms enter."""
    return constants.ORIENTATION*2*curve.tau.imag

def cell_measure(curve):
    """|∫dξ∧dξ̄| over a cell of Λ = (π/Im τ)·span(1, τ)."""
    return 2*np.pi**2/curve.tau.imag

def witten_closed_form(weights):
    weights = fuchsian.as_weights(weights)
    if not stability.biswas_admissible(weights):
        raise ConfigError(f'Weights {weights.rho} are not admissible; the closed form does not apply')
    return 2*np.pi**2*(1 - abelian.mu_table(weights).sum())

def dbar(f, curve):
    """∂̄f from samples on ``section.grid_points(curve, N)``, by central differences in the two lattice
    directions with periodic wrap, one-sided where a neighbour is missing."""
    N = f.shape[0]
    k = np.pi/curve.tau.imag
    # ξ = a·s + b·t, with grid steps 1/N in s and t
    a, b = k, k*curve.tau
    h = 1/N

    def derivative(axis):
        up, down = np.roll(f, -1, axis), np.roll(f, +1, axis)
        central = (up - down)/(2*h)
        forward = (up - f)/h
        backward = (f - down)/h
        d = np.where(np.isnan(central), forward, central)
        return np.where(np.isnan(d), backward, d)

    fs, ft = derivative(0), derivative(1)
    return (b*fs - a*ft)/(b*np.conj(a) - a*np.conj(b))

def kahler_density(grid):
    """∂α/∂ξ̄ on the grid. The seed's pole terms are holomorphic off the spin points, so this is
    (1 - Σμ) plus ∂̄ of the periodic remainder."""
    f = section.remainder(grid)
    density = (1 - abelian.mu_table(grid.weights).sum()) + dbar(f, grid.curve)
    density[~grid.converged] = np.nan
    if np.isnan(density[grid.converged]).all():
        raise GridConvergenceError('No converged sample has a converged neighbour')
    return density

def _unsampled_ratio(mask):
    """φ/(1-φ), φ being the share of grid samples outside ``mask``."""
    return (mask.size - mask.sum())/mask.sum()

def two_mask_extrapolation(density, valid, wider):
    """Mean density over ``valid``, and its value extrapolated to no exclusion. Leaving samples out biases the
    mean by a term ∝ φ/(1-φ), so a line through the means over ``valid`` and the smaller ``wider`` mask is
    followed back to φ = 0."""
    mean = density[valid].mean().real
    if not 0 < wider.sum() < valid.sum():
        return mean, mean
    x1, x2 = _unsampled_ratio(valid), _unsampled_ratio(wider)
    m2 = density[wider].mean().real
    return mean, mean - x1*(m2 - mean)/(x2 - x1)

def symplectic_volume(grid, table=None, widen=1.5):
    """2π² times the mean density over the samples that have one, and the same extrapolated by comparing
    against a mean with the spin-point disks widened by ``widen``."""
    density = kahler_density(grid)
    valid = ~np.isnan(density)
    mean = density[valid].mean()
    if abs(mean.imag) > 1e-3*abs(mean):
        log.warning(f'Density has a sizeable imaginary part: mean {mean:.4g}')

    norm = .5*darboux_pairing(grid.curve)*cell_measure(grid.curve)
    wider = valid & (abelian.spin_distance(grid.xi, grid.curve) >= widen*grid.radius)
    mean, limit = two_mask_extrapolation(density, valid, wider)
    quadrature, extrapolated = norm*mean, norm*limit

    closed = witten_closed_form(grid.weights)
    error = abs(quadrature - closed)/closed
    log.info(f'Volume {quadrature:.6f}, extrapolated {extrapolated:.6f}, against {closed:.6f}; relative error {error:.2e}')
    return VolumeReport(
        weights=grid.weights, tau=grid.curve.tau, N=grid.N, radius=grid.radius,
        quadrature=quadrature, extrapolated=extrapolated, closed_form=closed, relative_error=error, table=table,
        meta=dict(grid.meta, density_samples=int(valid.sum()), orientation=constants.ORIENTATION, widen=widen))

def richardson(values, radii):
    """Least-squares fit of v(r) = v₀ + c·r², returning v₀."""
    values, radii = np.asarray(values, dtype=float), np.asarray(radii, dtype=float)
    if len(values) < 2:
        return float(values[-1])
    A = np.stack([np.ones_like(radii), radii**2], -1)
    (v0, _), *_ = np.linalg.lstsq(A, values, rcond=None)
    return float(v0)

def convergence_table(weights, curve, levels=(16, 24, 32), cells=2., rtol=1e-10, threads=0, executor='loky'):
    """Volume at each grid size with the exclusion radius held at ``cells`` grid cells, plus the r → 0
    extrapolation."""
    rows = []
    for N in levels:
        grid = section.ms_grid(weights, curve, N, radius=section.default_radius(curve, N, cells), rtol=rtol, threads=threads, executor=executor)
        report = symplectic_volume(grid)
        rows.append(dict(N=N, radius=grid.radius, fraction=grid.fraction, quadrature=report.quadrature, extrapolated=report.extrapolated, relative_error=report.relative_error))
    table = pd.DataFrame(rows)
    extrapolated = richardson(table.quadrature, table.radius)
    table.attrs['extrapolated'] = extrapolated
    table.attrs['closed_form'] = witten_closed_form(weights)
    return table

#########
# TESTS #
#########

def _curve(m=2.5):
    from . import elliptic
    return elliptic.curve_from_tau(elliptic.tau_from_m(m))

def test_closed_forms():
    np.testing.assert_allclose(witten_closed_form([.25]*4), 2*np.pi**2)
    np.testing.assert_allclose(witten_closed_form(fuchsian.EXAMPLE), 1.2*np.pi**2)
    np.testing.assert_allclose(witten_closed_form([.2]*4), 1.6*np.pi**2)

    import pytest
    with pytest.raises(ConfigError):
        witten_closed_form([.45, .45, .45, .05])

def test_positive_on_admissible():
    rng = np.random.RandomState(0)
    n = 0
    while n < 100:
        w = rng.uniform(.01, .49, 4)
        if stability.biswas_admissible(w):
            assert witten_closed_form(w) > 0
            n += 1

def test_normalization():
    curve = _curve()
    np.testing.assert_allclose(abs(darboux_pairing(curve)), 2*curve.tau.imag)
    np.testing.assert_allclose(darboux_pairing(curve)*cell_measure(curve), 4*np.pi**2)

def test_dbar_linear():
    curve = _curve()
    xi = section.grid_points(curve, 12)
    c = .3 - .7j
    inner = (slice(1, -1), slice(1, -1))
    np.testing.assert_allclose(dbar(c*np.conj(xi) + 2*xi, curve)[inner], c, atol=1e-10)
    np.testing.assert_allclose(dbar(xi**2, curve)[inner], 0, atol=1e-10)

def test_dbar_one_sided():
    curve = _curve()
    xi = section.grid_points(curve, 12)
    f = np.conj(xi)
    f[5, 5] = np.nan
    d = dbar(f, curve)
    np.testing.assert_allclose(d[4, 5], 1, atol=1e-10)
    np.testing.assert_allclose(d[5, 4], 1, atol=1e-10)

def test_richardson():
    radii = np.array([.4, .2, .1])
    np.testing.assert_allclose(richardson(3 + 2*radii**2, radii), 3)

def test_quarter_weights_volume():
    curve = _curve()
    grid = section.ms_grid([.25]*4, curve, 8, rtol=1e-11)
    density = kahler_density(grid)
    valid = np.isfinite(density)
    assert valid.sum() > 0
    np.testing.assert_allclose(density[valid], 1, atol=1e-10)
    report = symplectic_volume(grid)
    np.testing.assert_allclose(report.quadrature, 2*np.pi**2, rtol=1e-10)
    assert report.relative_error < 1e-10
    np.testing.assert_allclose(report.extrapolated, 2*np.pi**2, rtol=1e-10)

def test_unsampled_ratio():
    mask = np.ones((4, 4), dtype=bool)
    mask[0, :2] = False
    np.testing.assert_allclose(_unsampled_ratio(mask), 2/14)

def test_two_mask_extrapolation():
    # 30 low samples around a "spin point", balanced by the rest so the full mean is exactly 1
    n, c = 400, .7
    idx = np.arange(n)
    inner, ring = idx < 10, (idx >= 10) & (idx < 30)
    density = np.where(inner | ring, 1 - c, 1 + c*30/370)
    mean, limit = two_mask_extrapolation(density, ~inner, ~(inner | ring))
    assert abs(mean - 1) > .01
    np.testing.assert_allclose(limit, 1, rtol=1e-12)

    full = np.ones(n, dtype=bool)
    np.testing.assert_allclose(two_mask_extrapolation(density, full, full), 1, rtol=1e-12)

def test_quarter_weights_convergence_table():
    table = convergence_table([.25]*4, _curve(), levels=(8, 10), rtol=1e-11)
    assert list(table.N) == [8, 10]
    assert (table.fraction == 1).all()
    np.testing.assert_allclose(table.quadrature, 2*np.pi**2, rtol=1e-10)
    np.testing.assert_allclose(table.attrs['extrapolated'], 2*np.pi**2, rtol=1e-10)
    assert table.attrs['closed_form'] == witten_closed_form([.25]*4)

def _generic_volume(m):
    curve = _curve(m)
    N = 16
    grid = section.ms_grid(fuchsian.EXAMPLE, curve, N, radius=section.default_radius(curve, N, 1.25), rtol=1e-10)
    assert grid.fraction >= .95
    return symplectic_volume(grid)

def test_generic_volume():
    # Coarse grid, so the spin-point disks cost a few percent; the two-mask fit recovers most of it
    report = _generic_volume(2.5)
    assert report.relative_error < .15
    assert abs(report.extrapolated - report.closed_form) < .08*report.closed_form

def test_volume_independent_of_tau():
    a, b = _generic_volume(2.5), _generic_volume(-1)
    assert a.tau != b.tau
    assert abs(a.extrapolated - b.extrapolated) < .08*a.closed_form
