"""Scattering L1 regularized denoising of geometrically regular images."""
from .wavelet_bank import MotherWaveletParams, WaveletBank, build_bank
from .transforms import dwt_forward, scattering_forward, decay_profile
from .energies import EnergyParams, scattering_energy, wavelet_l1_energy, energy_gradient
from .denoisers import (
    NoiseModel,
    SolverParams,
    add_noise,
    ortho_threshold_denoise,
    translation_invariant_denoise,
    variational_denoise,
)
from .datagen import GeoImageParams, sample_geometric_image

__version__ = "0.1.0"

__all__ = [
    "MotherWaveletParams", "WaveletBank", "build_bank", "dwt_forward", "scattering_forward",
    "decay_profile", "EnergyParams", "scattering_energy", "wavelet_l1_energy",
    "energy_gradient", "NoiseModel", "SolverParams", "add_noise", "ortho_threshold_denoise",
    "translation_invariant_denoise", "variational_denoise", "GeoImageParams",
    "sample_geometric_image",
]
