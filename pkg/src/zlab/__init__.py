"""Finite-dimensional laboratory for quantum Zeno product formulae."""
from .operators import (
    HermitianOperator,
    OrthogonalProjection,
    SpectralDecomposition,
    apply_function,
    expm_general,
    make_projection,
    operator_norm,
    psd_sqrt,
    spectral_decompose,
    unitary_propagator,
)
from .zeno import (
    ProjectionFamily,
    ZenoVariant,
    zeno_error_sweep,
    zeno_evolve,
    zeno_generator,
    zeno_limit,
    zeno_step,
)

__version__ = "0.1.0"
