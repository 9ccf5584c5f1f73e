"""Consensus-weighted aggregation of classical denoising filters.

The package turns a pool of ordinary filters (median, Gaussian, bilateral,
total variation, non-local means, ...) into a single combined denoiser: two
pixels are averaged together only when enough of the filters agree that they
look alike, so each filter votes on pixel similarity instead of contributing
intensity directly.
"""

__version__ = "0.1.0"
