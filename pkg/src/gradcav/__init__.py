"""Eigenmodes and regularised vacuum observables of a perfectly conducting
rectangular cavity filled with an exponentially graded dielectric."""

__version__ = "0.1.0"

from .bessel import (  # noqa: E402
    bessel_j,
    bessel_j_prime,
    bessel_y,
    bessel_y_prime,
    cross_product,
    cross_product_tilde,
    scaled_pair,
)
from .spectrum import (  # noqa: E402
    CavityGeometry,
    DielectricProfile,
    ModeIndex,
    ModeRecord,
    Polarization,
    SpectrumTable,
    enumerate_modes,
    eta,
    find_roots,
    homogeneous_spectrum,
    mode_parameters,
    spectrum_fn,
    zeta_coefficient,
)
