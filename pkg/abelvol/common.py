import numpy as np

class ConfigError(ValueError):
    pass

class PoleError(ValueError):
    """Evaluation at a pole or puncture."""

class SpinProximityError(ValueError):
    """A Jacobian point too close to a half-period, where the abelian normal form degenerates."""

class IntegrationError(RuntimeError):
    pass

class ConvergenceError(RuntimeError):

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last

class AnchorError(ConvergenceError):
    pass

class GridConvergenceError(RuntimeError):
    pass

class AccuracyGateError(RuntimeError):
    pass

def finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(x)):
            raise ValueError(f'Non-finite input {x}')

def reduce(w, periods):
    """Reduces ``w`` modulo the lattice spanned by ``periods = (a, b)`` into the cell centered on zero. 
    Returns the representative and the real coordinates ``(s, t)`` of it, each in [-1/2, 1/2)."""
    a, b = periods
    w = np.asarray(w, dtype=complex)
    # Solve w = s a + t b over the reals
    det = (np.conj(a)*b).imag
    s = (np.conj(w)*b).imag/det
    t = (np.conj(a)*w).imag/det
    s = s - np.floor(s + .5)
    t = t - np.floor(t + .5)
    return s*a + t*b, s, t

def distance(w, v, periods):
    """Distance between ``w`` and ``v`` modulo the lattice. Checks the neighbouring cells, since the centered 
    representative isn't always the nearest one for skewed lattices."""
    a, b = periods
    r, _, _ = reduce(np.asarray(w) - np.asarray(v), periods)
    shifts = np.array([i*a + j*b for i in (-1, 0, 1) for j in (-1, 0, 1)])
    return np.abs(r[..., None] + shifts).min(-1)

### TESTS

def test_reduce():
    periods = (1., .3 + 1.1j)
    w = 2.2 + 3.3*periods[1]
    r, s, t = reduce(w, periods)
    np.testing.assert_allclose(s, .2)
    np.testing.assert_allclose(t, .3)
    np.testing.assert_allclose(distance(w, r, periods), 0, atol=1e-12)

def test_distance_skewed():
    periods = (1., .9 + .2j)
    assert distance(.95 + .2j, 0., periods) < .1
