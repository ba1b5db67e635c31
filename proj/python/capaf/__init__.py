"""Capillary convex bodies on a spherical-cap grid: mixed volumes, quermassintegrals,
the weighted operator spectrum and surface reconstruction."""

from ._core import (
    CapafError,
    CapGrid,
    CapillaryBody,
    af_check,
    body_from_values,
    build_grid,
    cap_volume,
    certify,
    ell,
    ell_values,
    embed,
    horizontal_linear,
    load_body,
    mixed_volume,
    patch_summary,
    quermass_chain,
    quermass_report,
    quermassintegral,
    random_body,
    random_capillary,
    run,
    save_body,
    spectrum,
)

__all__ = [
    "CapafError",
    "CapGrid",
    "CapillaryBody",
    "af_check",
    "body_from_values",
    "build_grid",
    "cap_volume",
    "certify",
    "ell",
    "ell_values",
    "embed",
    "horizontal_linear",
    "load_body",
    "mixed_volume",
    "patch_summary",
    "quermass_chain",
    "quermass_report",
    "quermassintegral",
    "random_body",
    "random_capillary",
    "run",
    "save_body",
    "spectrum",
]
