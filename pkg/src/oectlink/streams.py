"""Deterministic RNG stream derivation.

Every stochastic draw in a run comes from a counter-derived Philox stream
keyed by (master seed, operating-point token, seed index, role), so results
are independent of worker count and scheduling. The point token is the
first 8 bytes of a SHA-256 over the canonical operating-point string;
derivation feeds the four integers to numpy's SeedSequence.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

ROLE_SYMBOLS = 0
ROLE_EMISSION = 1
ROLE_BINDING = 2
ROLE_NOISE = 3

# Calibration draws use a reserved seed index so evaluation seeds 0..49
# never alias calibration streams.
CALIBRATION_SEED_INDEX = 0xCA1


def point_token(*parts) -> int:
    """Stable 64-bit token for an operating point."""
    text = ";".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def stream(master_seed: int, point: int, seed_index: int,
           role: int) -> np.random.Generator:
    seq = np.random.SeedSequence([master_seed, point, seed_index, role])
    return np.random.Generator(np.random.Philox(seq))


@dataclass
class RngBundle:
    """Per-(point, seed) streams, one per stochastic role."""

    symbols: np.random.Generator
    emission: np.random.Generator
    binding: np.random.Generator
    noise: np.random.Generator

    @classmethod
    def derive(cls, master_seed: int, point: int, seed_index: int,
               ) -> "RngBundle":
        return cls(
            symbols=stream(master_seed, point, seed_index, ROLE_SYMBOLS),
            emission=stream(master_seed, point, seed_index, ROLE_EMISSION),
            binding=stream(master_seed, point, seed_index, ROLE_BINDING),
            noise=stream(master_seed, point, seed_index, ROLE_NOISE),
        )
