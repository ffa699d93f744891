"""pointdiff: a point-process diffraction workbench.

Simulate stochastic point sets (renewal processes, Poisson and hard-core
fields, cut-and-project gases, cluster decorations, critical branching
Brownian motion), estimate their autocorrelation and scattering spectra from
realisations, and check the estimates against exact reference models.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .branching import BranchingConfig, analytic_cbbm_model, f_infinity, f_t, simulate_cbbm
from .charfun import (
    Deterministic,
    Exponential,
    FiniteAtoms,
    Gamma,
    InterArrivalLaw,
    TwoAtom,
    charfun,
    g_alpha,
    gaussian_psf_check,
    h,
    lattice_classification,
    nu_hat,
    nu_partial,
    riesz_fourier,
)
from .clusters import (
    ClusterLaw,
    DeterministicCluster,
    GaussianDisplacement,
    NeymanScott,
    RandomWeight,
    SignedBernoulli,
    UniformDisplacement,
    bernoulli_weight,
    compound_autocorr_atoms,
    compound_model,
    sample_cluster,
    sample_compound,
)
from .measures import (
    AveragingWindow,
    FiniteCluster,
    SpectralModel,
    WeightedPointSet,
    read_point_set,
    restrict,
    spectral_eval,
    window_volume,
    write_point_set,
)
from .processes import (
    FibonacciGasProcess,
    LatticeProcess,
    MaternProcess,
    PoissonProcess,
    analytic_centre_model,
    sample_centre,
)
from .renewal import analytic_renewal_ac_density, analytic_renewal_model, simulate_renewal
from .rng import stream
from .spectral import (
    AcHistogram,
    ComparisonReport,
    EmpiricalSpectrum,
    ac_density_estimate,
    bartlett,
    bragg_weight,
    compare,
    empirical_autocorr,
    pair_correlation_radial,
    palm_first_moment,
    periodogram,
    scan_unexplained,
)

__version__ = "0.1.0"
