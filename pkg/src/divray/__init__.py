"""divray: divergent beam ray transforms of symmetric tensor fields.

Forward weighted/fractional beam transforms, spherical averaging operators,
Fourier-multiplier calculus on periodic grids, and the matching pointwise
and spectral inversion procedures, with a verification harness for the
stability and unique-continuation experiments.
"""

from .symtensor import (
    SymTensor,
    SubsetFamily,
    symmetrize,
    sym_product,
    sym_power,
    contract_power,
    polarization_family,
    polarize,
)
from .spectral import (
    SpectralGrid,
    MultiplierOp,
    riesz_transform,
    frac_laplacian,
    riesz_potential,
    bessel_apply,
    sobolev_norm,
    sobolev_norm_field,
)
from .fields import SymTensorField, interior_mask
from .phantoms import (
    PhantomSpec,
    gaussian_phantom,
    polynomial_gaussian_phantom,
    potential_bump_phantom,
    eval_field,
    eval_fourier,
    sample_on_grid,
)
from .raytransform import (
    QuadratureSpec,
    SourceLattice,
    BeamSamples,
    beam_integral,
    forward_grid,
    momentum_reduce,
    circle_directions,
    fibonacci_directions,
)
from .averaging import (
    AverageField,
    AvgConstant,
    constant_c,
    average_by_quadrature,
    average_field_by_quadrature,
    average_by_convolution,
    average_spectral_vector,
    average_spectral_2tensor,
)
from .reconstruct import (
    ReconReport,
    reconstruct_pointwise,
    reconstruct_from_weighted,
    reconstruct_vector,
    reconstruct_2tensor,
)

__version__ = "0.1.0"
