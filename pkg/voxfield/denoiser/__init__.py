"""The token-set denoiser, its oracles and its training loop."""
