"""Pose/expression disentangled face reenactment on a synthetic toy-face benchmark."""

from ._reenact import (
    RELIABLE_RESIDUAL,
    ArgumentError,
    CorruptionError,
    IoError,
    RangeError,
    ShapeError,
    Transfer,
    factor_names,
    fit_params,
    paste_back,
    psnr,
    render,
    ssim,
)

__all__ = [
    "RELIABLE_RESIDUAL",
    "ArgumentError",
    "CorruptionError",
    "IoError",
    "RangeError",
    "ShapeError",
    "Transfer",
    "factor_names",
    "fit_params",
    "paste_back",
    "psnr",
    "render",
    "ssim",
]
