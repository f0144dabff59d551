"""Toeplitz-matrix hashing over GF(2).

The extraction matrix T has shape K x n_z and is constant along
diagonals: ``T[i][j] = seed[i - j + n_z - 1]`` for a seed of
``n_z + K - 1`` bits, and ``y[i] = XOR_j T[i][j] & x[j]``.  This indexing
convention is normative; the fast path below computes the same map as a
GF(2) polynomial product, taking coefficients ``n_z-1 .. n_z+K-2`` of
``seed(t) * x(t)``.

The product is evaluated as an integer convolution by real FFT and reduced
mod 2.  For 0/1 sequences the FFT round-off is bounded far below 1/2 at any
block size this module accepts, and a runtime guard verifies the margin, so
the result is bit-identical to the naive matrix-vector definition.

Long inputs are split into balanced sub-blocks (default around 2**20 raw
bits) extracted independently; each block contributes its own 2**(-t_e)
failure term via a union bound.  One Toeplitz seed, sized for the largest
block, is consumed per session and reused across its blocks: the hash is a
strong extractor, so outputs remain independent of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .bits import BitBlock
from .entropy_math import (
    SecurityReport,
    composed_security,
    final_length,
    mismatch_adjusted_length,
)
from .estimation import EstimationResult
from .seeds import SeedSource
from .squash_sample import SessionTally

DEFAULT_BLOCK_SIZE = 1 << 20
# FFT round-off guard; actual deviations are ~1e-10 at the default block size
_ROUNDING_GUARD = 0.25


class ExtractionError(RuntimeError):
    """Raised when a session yields no extractable bits."""


@dataclass(frozen=True)
class ExtractionPlan:
    """Shape of one Toeplitz extraction: n_z raw bits -> K output bits."""

    n_z: int
    K: int
    t_e: int

    def __post_init__(self):
        if self.K <= 0:
            raise ExtractionError(f"non-positive output length K={self.K}")
        if self.K > self.n_z:
            raise ValueError(f"output length K={self.K} exceeds input n_z={self.n_z}")

    @property
    def seed_length(self) -> int:
        return self.n_z + self.K - 1

    def to_dict(self) -> dict:
        return {"n_z": self.n_z, "K": self.K, "t_e": self.t_e, "seed_length": self.seed_length}


def make_plan(tally: SessionTally, est: EstimationResult, t_e: int) -> ExtractionPlan:
    """Plan the session extraction from the estimated phase-error bound.

    Raises
    ------
    ExtractionError
        If the session aborted or the output length is not positive.
    """
    if est.abort:
        raise ExtractionError("cannot plan extraction for an aborted session")
    k = final_length(tally.n_z, est.e_pz_bound, t_e)
    if k <= 0:
        raise ExtractionError(
            f"output length {k} <= 0 at n_z={tally.n_z}, e_pz_bound={est.e_pz_bound:.4f}"
        )
    return ExtractionPlan(n_z=tally.n_z, K=k, t_e=t_e)


def toeplitz_extract(raw: BitBlock, seed: BitBlock, plan: ExtractionPlan) -> BitBlock:
    """Apply the K x n_z Toeplitz hash defined by ``seed`` to ``raw``.

    Raises
    ------
    ValueError
        If the input or seed length does not match the plan.
    """
    if len(raw) != plan.n_z:
        raise ValueError(f"raw length {len(raw)} != plan n_z {plan.n_z}")
    if len(seed) != plan.seed_length:
        raise ValueError(f"seed length {len(seed)} != plan seed length {plan.seed_length}")
    conv = fftconvolve(raw.to01().astype(np.float64), seed.to01().astype(np.float64))
    band = conv[plan.n_z - 1 : plan.n_z - 1 + plan.K]
    counts = np.rint(band)
    deviation = float(np.max(np.abs(band - counts))) if band.size else 0.0
    if deviation >= _ROUNDING_GUARD:
        raise ArithmeticError(
            f"FFT convolution rounding margin violated (deviation {deviation:.3g})"
        )
    return BitBlock.from01(counts.astype(np.int64) & 1)


def _balanced_blocks(n: int, block_size: int) -> list[int]:
    """Split n into nearly equal parts no larger than block_size."""
    n_blocks = max(1, math.ceil(n / block_size))
    base, extra = divmod(n, n_blocks)
    return [base + (1 if i < extra else 0) for i in range(n_blocks)]


def extract_session(
    z_bits: BitBlock,
    est: EstimationResult,
    t_e: int,
    seed_source: SeedSource,
    block_size: int = DEFAULT_BLOCK_SIZE,
    efficiency_ratio: float = 1.0,
) -> tuple[BitBlock, SecurityReport, dict]:
    """Extract a whole session, sub-block by sub-block.

    Returns the concatenated output, the composed security report
    (``eps_f = eps_theta + n_blocks * 2**(-t_e)``), and a summary dict with
    block shapes and exact Toeplitz seed consumption.  An efficiency ratio
    below 1 shortens each block via the mismatch-adjusted length formula.

    Raises
    ------
    ExtractionError
        If the session aborted, is empty, or no block yields output.
    SeedExhaustedError
        If the seed source cannot supply the Toeplitz seed.
    """
    if est.abort:
        raise ExtractionError("cannot extract an aborted session")
    n_z = len(z_bits)
    if n_z == 0:
        raise ExtractionError("no raw bits to extract")

    def output_length(m: int) -> int:
        if efficiency_ratio == 1.0:
            return final_length(m, est.e_pz_bound, t_e)
        return mismatch_adjusted_length(efficiency_ratio, m, est.e_pz_bound, t_e)

    sizes = _balanced_blocks(n_z, block_size)
    plans = [ExtractionPlan(n_z=m, K=output_length(m), t_e=t_e) for m in sizes]

    seed_length = max(p.seed_length for p in plans)
    seed = BitBlock.from01(seed_source.take_bits(seed_length))

    outputs = []
    start = 0
    for plan in plans:
        block = z_bits.slice(start, start + plan.n_z)
        outputs.append(toeplitz_extract(block, seed.slice(0, plan.seed_length), plan))
        start += plan.n_z
    final = BitBlock.concat(outputs)

    report = composed_security(est.eps_theta, t_e, extraction_blocks=len(plans))
    summary = {
        "n_z": n_z,
        "K": len(final),
        "t_e": t_e,
        "n_blocks": len(plans),
        "block_sizes": sizes,
        "toeplitz_seed_bits": seed_length,
    }
    return final, report, summary
