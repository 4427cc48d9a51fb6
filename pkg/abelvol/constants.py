"""Frozen conventions and numerical defaults. Changing any of these changes the reported numbers."""

# Half-periods w₀..w₃ sit over the punctures z = ∞, 1, 0, m; everything is indexed in this order
PUNCTURES = ('inf', '1', '0', 'm')

# Spin points are excluded inside this fraction of the shortest period of Λ
SPIN_EXCLUSION = .02

# Loops stay this fraction of the smallest puncture separation away from every puncture
CLEARANCE = .05

# Integrator
RTOL = 1e-11
ATOL = 1e-13

# Unitarizability
UNITARY_THRESHOLD = 1e-6
SVD_NULL = 1e-8
SVD_GAP = 1e-4
DEFINITE_TOL = 1e-10

# Newton on the trace conditions
NEWTON_STEP = 1e-6
NEWTON_TOL = 1e-8
NEWTON_ITERS = 30

# dα/dλ = HIGGS_SLOPE_SIGN·2v√(p₁-p₂) when adding λΨ. Ψs⁺ = +(v/y)s⁺ dz, with s⁺ vanishing at the curve point
# that u_to_curve_point picks for v
HIGGS_SLOPE_SIGN = +1

# Sphere generators multiply to the identity as M_{i_1}···M_{i_3}·M₀, with the lassos taken in decreasing angle of
# their tails at the base point; a tail that detours around another puncture counts as passing it on the left
PRODUCT_ORDER = 'decreasing-tail-angle'

# The torus cycles project to simple sphere loops separating these punctures from the other two
CYCLE_PUNCTURES = {'A': ('0', 'm'), 'B': ('0', '1')}

# Holonomy of the square-root connection ∇ˢ on S* along A and B is (-1)^(winding of ℘'), and ℘' winds once
# along either cycle
SPIN_SIGNS = {'A': -1, 'B': -1}

# The all-ρ=1/4 volume comes out as +2π² with this sign on ∫dw∧dw̄
ORIENTATION = +1

# Tolerance on u when deciding whether it sits on one of the special strata {0, 1, m, ∞}
STRATUM_TOL = 1e-9
SEMISTABLE_TOL = 1e-12
