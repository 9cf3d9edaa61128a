"""Physical constants and numerical tolerances shared across the package.

All unit conversions in the package go through these pinned values.
Hamiltonians are handled in angular-frequency units (energy divided by
hbar, rad/s), so the dephasing strength ``sigma`` always carries seconds
and decay exponents are ``sigma * gap**2 * t``.
"""

HBAR = 1.054571817e-34      # J s
EV = 1.602176634e-19        # J per eV
C_LIGHT = 299792458.0       # m / s
PLANCK_TIME = 5.391247e-44  # s
YEAR_SECONDS = 3.156e7      # s; 1e10 yr = 3.156e17 s

# angular frequency of a 1 eV level splitting
OMEGA_PER_EV = EV / HBAR    # rad/s per eV

# structural tolerances (explicit validation, never hidden in constructors)
HERM_TOL = 1e-12     # density-matrix Hermiticity
TRACE_TOL = 1e-10    # unit trace
PSD_TOL = 1e-9       # allowed negative eigenvalue excursion
EIG_TOL = 1e-9       # eigendecomposition reconstruction error
OP_TOL = 1e-10       # hermitian/unitary predicates, relative Frobenius

# relative spectral gap below which eigenvalues are treated as degenerate
# (and snapped to a common value) when building a joint eigenbasis
EIG_CLUSTER_RTOL = 1e-9

# pairwise commutator norm bound for the closed-form propagator
COMMUTE_TOL = 1e-9
