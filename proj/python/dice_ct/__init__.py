"""Diffusion consensus equilibrium for sparse-view parallel-beam CT."""

from ._core import (
    ConfigError,
    ContractError,
    DimensionError,
    IoError,
    NumericalError,
    angles,
    backproject,
    disk_phantom,
    ellipse_phantom,
    experiment_angles,
    psnr,
    radon,
    reconstruct,
    run_experiment,
    shepp_logan,
    ssim,
    version,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DimensionError",
    "IoError",
    "NumericalError",
    "angles",
    "backproject",
    "disk_phantom",
    "ellipse_phantom",
    "experiment_angles",
    "psnr",
    "radon",
    "reconstruct",
    "run_experiment",
    "shepp_logan",
    "ssim",
    "version",
]
