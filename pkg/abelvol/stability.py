"""Parabolic stability of the trivial rank-2 bundle with flags E₀..E₃ = [1:0], [1:1], [0:1], [u:1] over
(∞, 1, 0, m), weighted by ±ρᵢ.

A line subbundle L of degree d has parabolic degree d + Σᵢ ±ρᵢ, with the plus sign where L passes through Eᵢ.
Only degrees 0 and -1 can be extremal: degree 0 subbundles are constant lines, degree -1 subbundles are
Möbius maps P¹ → P¹, and anything of degree ≤ -2 has pdeg ≤ -2 + Σρ < 0.
"""
import numpy as np
from itertools import permutations, combinations
from logging import getLogger
from rebar import arrdict
from . import fuchsian, constants

log = getLogger(__name__)

class LineBundleSpec(arrdict.namedarrtuple('LineBundleSpec', ('degree', 'incidence'))):

    def __init__(self, degree, incidence):
        incidence = tuple(bool(i) for i in incidence)
        if len(incidence) != 4:
            raise ValueError(f'Need four incidence flags, got {incidence}')
        super().__init__(degree=int(degree), incidence=incidence)

    def __str__(self):
        through = ''.join(str(i) for i, b in enumerate(self.incidence) if b) or '-'
        return f'O({self.degree}) through E[{through}]'

    __repr__ = __str__

class StabilityVerdict(arrdict.namedarrtuple('StabilityVerdict', ('verdict', 'witness', 'pdeg'))):
    pass

VERDICTS = ('stable', 'strictly_semistable', 'unstable')

def parabolic_degree(spec, weights):
    rho = fuchsian.as_weights(weights).rho
    signs = np.where(spec.incidence, 1., -1.)
    return spec.degree + float((signs*rho).sum())

def biswas_admissible(weights):
    rho = fuchsian.as_weights(weights).rho
    for s in permutations(range(4)):
        three = rho[s[0]] + rho[s[1]] + rho[s[2]]
        if not (1 + rho[s[3]] > three > rho[s[3]]):
            return False
    return True

def stratum(u, m, tol=constants.STRATUM_TOL):
    """Which of the special values {0, 1, m, ∞} ``u`` sits on, or None for a generic u."""
    if np.isinf(u):
        return 'inf'
    u = complex(u)
    for name, value in [('0', 0), ('1', 1), ('m', m)]:
        if abs(u - value) < tol:
            return name
    return None

def _line_classes(u, m):
    """Groups the four punctures by which of them have equal eigenlines."""
    merged = {'inf': (0, 3), '0': (2, 3), '1': (1, 3)}.get(stratum(u, m))
    classes = [{i} for i in range(4) if not merged or i not in merged]
    if merged:
        classes.append(set(merged))
    return sorted(classes, key=min)

def candidate_subbundles(weights, u, m):
    """The finite list of line subbundles that can achieve the maximal parabolic degree."""
    classes = _line_classes(u, m)
    owner = {i: k for k, c in enumerate(classes) for i in c}

    candidates = [LineBundleSpec(0, [False]*4)]
    for c in classes:
        candidates.append(LineBundleSpec(0, [i in c for i in range(4)]))

    # A Möbius map can be pushed through any three distinct lines at three distinct points
    for size in (1, 2, 3):
        for subset in combinations(range(4), size):
            if len({owner[i] for i in subset}) == size:
                candidates.append(LineBundleSpec(-1, [i in subset for i in range(4)]))
    # ... and through all four exactly when the cross-ratios agree
    if stratum(u, m) == 'm':
        candidates.append(LineBundleSpec(-1, [True]*4))
    return candidates

def verdict_of(pdeg, tol=constants.SEMISTABLE_TOL):
    if pdeg < -tol:
        return 'stable'
    if pdeg <= tol:
        return 'strictly_semistable'
    return 'unstable'

def classify_parabolic_structure(weights, u, m):
    weights = fuchsian.as_weights(weights)
    candidates = candidate_subbundles(weights, u, m)
    pdegs = [parabolic_degree(c, weights) for c in candidates]
    best = int(np.argmax(pdegs))
    return StabilityVerdict(verdict=verdict_of(pdegs[best]), witness=candidates[best], pdeg=pdegs[best])

def special_verdicts(weights, m):
    return {name: classify_parabolic_structure(weights, u, m)
            for name, u in [('0', 0.), ('1', 1.), ('m', m), ('inf', np.inf)]}

#########
# TESTS #
#########

def _brute_max_pdeg(weights, u, m):
    """Max pdeg found by testing every incidence pattern for realizability directly."""
    E = fuchsian.eigenlines(u)
    points = [np.inf, 1., 0., m]
    rng = np.random.RandomState(0)
    best = -np.inf
    for size in range(0, 5):
        for subset in combinations(range(4), size):
            spec = LineBundleSpec(0, [i in subset for i in range(4)])
            # Degree 0: a constant line through every chosen Eᵢ
            if size <= 1 or np.linalg.matrix_rank(E[list(subset)], tol=1e-9) == 1:
                best = max(best, parabolic_degree(spec, weights))

            # Degree -1: z ↦ [az + b : cz + d] with ad - bc ≠ 0 through each chosen Eᵢ
            rows = []
            for i in subset:
                e0, e1 = E[i]
                z = points[i]
                rows.append([e1, 0, -e0, 0] if np.isinf(z) else [z*e1, e1, -z*e0, -e0])
            if rows:
                _, s, vh = np.linalg.svd(np.array(rows, dtype=complex))
                rank = (s > 1e-9*max(1, s.max())).sum()
                null = vh[rank:].conj().T
            else:
                null = np.eye(4)
            if null.shape[1] == 0:
                continue
            a, b, c, d = null @ (rng.normal(size=null.shape[1]) + 1j*rng.normal(size=null.shape[1]))
            if abs(a*d - b*c) > 1e-6:
                best = max(best, parabolic_degree(LineBundleSpec(-1, spec.incidence), weights))
    return best

def test_parabolic_degree():
    w = fuchsian.Weights([.3, .25, .2, .15])
    r0, r1, r2, r3 = w.rho
    np.testing.assert_allclose(parabolic_degree(LineBundleSpec(0, [0, 0, 0, 1]), w), r3 - r0 - r1 - r2)
    np.testing.assert_allclose(parabolic_degree(LineBundleSpec(-1, [1, 1, 1, 1]), w), -1 + w.rho.sum())
    assert parabolic_degree(LineBundleSpec(-2, [1, 1, 1, 1]), w) < 0

def test_biswas():
    assert biswas_admissible([.25, .25, .25, .25])
    assert not biswas_admissible([.45, .45, .45, .05])
    assert biswas_admissible([.1, .1, .1, .1])

def test_special_strata():
    assert classify_parabolic_structure([.3, .3, .2, .1], 0., 2.5).verdict == 'stable'
    assert classify_parabolic_structure([.3, .3, .2, .2], 2.5, 2.5).verdict == 'strictly_semistable'
    assert classify_parabolic_structure([.3, .25, .2, .15], .4 + .2j, 2.5).verdict == 'stable'

    # u = 0 with ρ₂ + ρ₃ > ρ₀ + ρ₁: the constant line through E₂ = E₃ destabilizes
    v = classify_parabolic_structure([.1, .1, .3, .3], 0., 2.5)
    assert v.verdict == 'unstable'
    assert v.witness.degree == 0 and v.witness.incidence == (False, False, True, True)

    v = special_verdicts([.3, .25, .2, .15], 2.5)
    assert set(v) == {'0', '1', 'm', 'inf'}

def test_generic_matches_biswas():
    rng = np.random.RandomState(0)
    n = 0
    while n < 200:
        w = fuchsian.Weights(rng.uniform(.01, .49, 4))
        admissible = biswas_admissible(w)
        for _ in range(20):
            u = complex(*rng.normal(size=2))
            v = classify_parabolic_structure(w, u, 2.5)
            if admissible:
                assert v.verdict == 'stable'
            else:
                assert v.pdeg >= 0
        n += admissible

def test_perturbation_within_generic_stratum():
    w = fuchsian.Weights([.3, .25, .2, .15])
    for u in [.4 + .2j, 1e-5, 1 - 1e-5, 2.5 + 1e-5j]:
        assert classify_parabolic_structure(w, u, 2.5).verdict == classify_parabolic_structure(w, u*(1 + 1e-7), 2.5).verdict

def test_brute_force_oracle():
    rng = np.random.RandomState(1)
    m = 2.5 + .3j
    for k in range(500):
        w = fuchsian.Weights(rng.uniform(.01, .49, 4))
        u = [complex(*rng.normal(size=2)), 0., 1., m, np.inf][k % 5]
        v = classify_parabolic_structure(w, u, m)
        brute = _brute_max_pdeg(w, u, m)
        np.testing.assert_allclose(v.pdeg, brute, atol=1e-12)
        assert v.verdict == verdict_of(brute)
