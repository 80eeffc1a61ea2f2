"""Variational denoising of VQE output states with a dissipative quantum autoencoder."""

__version__ = "0.1.0"
