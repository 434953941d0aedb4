"""Operator-valued kernels, their RKHS realizations and Gaussian process sampling."""

from ._opkern import (
    Context,
    ContextError,
    DimensionError,
    DomainError,
    Element,
    Error,
    Kernel,
    NumericalError,
    ParseError,
    assemble_gram,
    continuity_increment,
    covariance,
    covariance_error_report,
    feature_adjoint,
    feature_embed,
    frame_projection,
    induced_scalar,
    inner_product,
    onb_expansion,
    psd_check,
    sample_paths,
    spectral_decay_profile,
    verify_identities,
)

__all__ = [
    "Context",
    "ContextError",
    "DimensionError",
    "DomainError",
    "Element",
    "Error",
    "Kernel",
    "NumericalError",
    "ParseError",
    "assemble_gram",
    "continuity_increment",
    "covariance",
    "covariance_error_report",
    "feature_adjoint",
    "feature_embed",
    "frame_projection",
    "induced_scalar",
    "inner_product",
    "onb_expansion",
    "psd_check",
    "sample_paths",
    "spectral_decay_profile",
    "verify_identities",
]
