"""Generators and analysis tools for M-adic random martingale measures."""

__version__ = "0.1.0"

from .behrend import BehrendConfig, behrend_search, is_ap_free_mod
from .convolution import (
    chord_length,
    dependency_graph,
    hoeffding_janson_bound,
    holder_bootstrap,
    holder_exponent_estimate,
    holder_target,
    increment_decomposition,
    marginal_line_profile,
    plane_section_area,
    slice_profile,
)
from .cubes import CubeIndex, cube_children, madic_point
from .dimension import box_dimension, dimension_report, survival_statistics
from .energy import energy_direct, energy_fourier, riesz_constant
from .generators import (
    BehrendTranslate,
    CapacityExact,
    Custom,
    Percolation,
    behrend_generate,
    generate,
    law_params,
    parse_genspec,
)
from .moments import second_moment, survival_lower_bound, two_point_probability
from .params import ModelParams, PowerBeta, StepBeta, unit_beta
from .patterns import ap_scan, homothety_search, parity_certificate
from .realization import Realization, full_realization
from .serialize import load_realization, save_realization
from .spectral import (
    decay_exponent_estimate,
    fourier_at,
    fourier_coeffs,
    mass_decay_exponent,
    restriction_exponents,
    sumset_boxdim,
)

__all__ = [name for name in dir() if not name.startswith("_")]
