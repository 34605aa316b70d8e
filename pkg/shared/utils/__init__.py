"""
Shared utility functions.
"""
from shared.utils.seeding import derive_rng, derive_seed_sequence

__all__ = ["derive_rng", "derive_seed_sequence"]
