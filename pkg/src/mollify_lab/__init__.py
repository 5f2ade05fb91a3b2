"""Numerical laboratory for wall-respecting mollification on half-space grids.

Discrete scalar/vector fields on a tangentially periodic slab with a
Dirichlet wall, a boundary- and divergence-preserving smoothing operator
built from convolution plus a wall-normal shift, executable checks of its
quantitative estimates, the Constantin-E-Titi splitting of the advection
term, an exponent calculus, and an energy-balance auditor.
"""

__version__ = "0.1.0"

from .grid_field import (  # noqa: F401
    HalfSpaceGrid,
    ScalarField,
    VectorField3,
    divergence,
    gradient,
    holder_seminorm,
    l2_inner,
    lp_norm,
    maximal_function,
    read_field,
    vector_from_arrays,
    write_field,
)
from .mollifier import (  # noqa: F401
    DiscreteStencil,
    MollifierKernel,
    conv_translate,
    double_smooth,
    grad_conv_translate,
    make_stencil,
    mollify,
    standard_kernel,
    translate,
)
from .exponents import (  # noqa: F401
    ExponentBundle,
    beta0,
    make_bundle,
    product_integrability_check,
    r_of_q,
    r_window,
    s_of_q,
    shinbrot_pointwise_bound,
    shinbrot_s,
    smoothing_margin,
)
from .lemma_lab import LemmaVerdict, RateReport, fit_rate  # noqa: F401
from .commutator import CetParts, JTerms, cet_decompose, j_bounds, j_terms  # noqa: F401
from .energy_audit import (  # noqa: F401
    EnergyReport,
    EnergyRow,
    TimeSeries,
    convergence_study,
    dt_field,
    energy_equality_residual,
    exact_stokes_shear,
    i_split,
    smoothed_balance,
    timed_term_bound,
)
from .synth import GeneratorSpec, curl_field, power_field, shear_field, weierstrass_field  # noqa: F401
