"""Entropy formulas, finite-size failure bounds, and output-length arithmetic.

Pure numerical kernel shared by the estimation and extraction stages.  All
functions are stateless and safe to call concurrently.

Conventions
-----------
- Logarithms are base 2 throughout; entropies are in bits.
- Failure probabilities of the form 2**(-k) with k in the hundreds are
  carried as base-2 exponents (the ``log2_*`` functions). The linear-domain
  wrappers may underflow to 0.0 for extremely small probabilities; the log2
  value is the canonical representation.
- Output lengths are floored to an integer (rounding down is the
  conservative direction for certified randomness).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class ProtocolAbortError(RuntimeError):
    """Raised when a length formula certifies nothing (error rate too high)."""


@dataclass(frozen=True)
class ProtocolParams:
    """Security and sampling knobs for one protocol session.

    Attributes
    ----------
    total_pulses : int
        Number of source pulses N in the session.
    planned_x_count : int
        Number of check-basis (X) positions N_x chosen before losses.
    eps_theta_exponent : float
        Target exponent for the sampling failure probability; the
        estimation stage solves for a deviation meeting 2**(-exponent).
    t_e : int
        Extraction failure exponent; extraction fails with probability
        2**(-t_e) per extracted block.
    efficiency_ratio : float
        Ratio r in (0, 1] between the minimum and maximum detector
        efficiencies; r = 1 means matched detectors.
    """

    total_pulses: int
    planned_x_count: int
    eps_theta_exponent: float = 100.0
    t_e: int = 100
    efficiency_ratio: float = 1.0

    def __post_init__(self):
        if not 0 < self.planned_x_count < self.total_pulses:
            raise ValueError(
                f"planned_x_count must satisfy 0 < N_x < N, got "
                f"N_x={self.planned_x_count}, N={self.total_pulses}"
            )
        if self.eps_theta_exponent <= 0:
            raise ValueError(f"eps_theta_exponent must be > 0, got {self.eps_theta_exponent}")
        if self.t_e < 1:
            raise ValueError(f"t_e must be >= 1, got {self.t_e}")
        if not 0 < self.efficiency_ratio <= 1:
            raise ValueError(f"efficiency_ratio must be in (0, 1], got {self.efficiency_ratio}")


@dataclass(frozen=True)
class SecurityReport:
    """Composable security parameters of one extraction.

    ``eps_f`` is the total failure probability in the fidelity measure;
    ``eps_t = sqrt(eps_f * (2 - eps_f))`` is the equivalent trace-distance
    security parameter. ``log2_*`` fields carry the exact exponents when the
    linear values underflow.
    """

    eps_f: float
    eps_t: float
    log2_eps_f: float
    log2_eps_t: float

    def to_dict(self) -> dict:
        return {
            "eps_f": self.eps_f,
            "eps_t": self.eps_t,
            "log2_eps_f": self.log2_eps_f,
            "log2_eps_t": self.log2_eps_t,
        }


def binary_entropy(e: float) -> float:
    """Binary Shannon entropy H(e) in bits.

    H(0) = H(1) = 0 by the 0*log(0) = 0 convention.

    Raises
    ------
    ValueError
        If e is outside [0, 1].
    """
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"entropy argument must be in [0, 1], got {e}")
    if e == 0.0 or e == 1.0:
        return 0.0
    return -(e * math.log2(e) + (1.0 - e) * math.log2(1.0 - e))


def binary_entropy_derivative(e: float) -> float:
    """Derivative H'(e) = log2((1-e)/e); diverges at the endpoints.

    Raises
    ------
    ValueError
        If e is outside the open interval (0, 1).
    """
    if not 0.0 < e < 1.0:
        raise ValueError(f"derivative argument must be in (0, 1), got {e}")
    return math.log2((1.0 - e) / e)


def deviation_exponent(theta: float, e_bx: float, q_x: float) -> float:
    """Large-deviation exponent of the random-sampling failure bound.

    Equals ``H(e_bx + theta - q_x*theta) - q_x*H(e_bx) - (1-q_x)*H(e_bx + theta)``;
    zero at theta = 0, strictly increasing in theta while e_bx + theta < 1/2.

    Raises
    ------
    ValueError
        If either entropy argument leaves [0, 1].
    """
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    mixed = e_bx + theta - q_x * theta
    shifted = e_bx + theta
    if not 0.0 <= mixed <= 1.0 or not 0.0 <= shifted <= 1.0:
        raise ValueError(
            f"entropy arguments out of range: e_bx+theta-q_x*theta={mixed}, "
            f"e_bx+theta={shifted}"
        )
    return (
        binary_entropy(mixed)
        - q_x * binary_entropy(e_bx)
        - (1.0 - q_x) * binary_entropy(shifted)
    )


def log2_deviation_failure_bound(n: int, q_x: float, e_bx: float, theta: float) -> float:
    """Base-2 exponent of the sampling failure bound, clamped to <= 0.

    The bound on the probability that the phase error rate exceeds
    ``e_bx + theta`` is ``prefactor * 2**(-n * exponent)`` with
    ``prefactor = (q_x*(1-q_x)*e_bx*(1-e_bx)*n)**(-1/2)``; this returns its
    log2, never above 0 (a probability bound above 1 carries no information).

    The caller must substitute a positive stand-in (conventionally 1/n_x)
    when the observed error count is zero; e_bx = 0 or 1 is rejected here.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < q_x < 1.0:
        raise ValueError(f"q_x must be in (0, 1), got {q_x}")
    if not 0.0 < e_bx < 1.0:
        raise ValueError(
            f"e_bx must be in (0, 1), got {e_bx} "
            "(apply the 1/n_x substitution for a zero error count)"
        )
    log2_prefactor = -0.5 * math.log2(q_x * (1.0 - q_x) * e_bx * (1.0 - e_bx) * n)
    return min(0.0, log2_prefactor - n * deviation_exponent(theta, e_bx, q_x))


def deviation_failure_bound(n: int, q_x: float, e_bx: float, theta: float) -> float:
    """Linear-domain sampling failure bound, min(1, prefactor * 2**(-n*exponent)).

    May underflow to 0.0 when the exponent is very large; use
    :func:`log2_deviation_failure_bound` for exact exponent arithmetic.
    """
    return 2.0 ** log2_deviation_failure_bound(n, q_x, e_bx, theta)


def final_length(n_z: int, e_pz_bound: float, t_e: int) -> int:
    """Certified output length ``floor(n_z * (1 - H(e_pz_bound))) - t_e``.

    May be negative; the caller aborts when the result is <= 0 or when
    ``e_pz_bound >= 1/2``.
    """
    if n_z < 1:
        raise ValueError(f"n_z must be >= 1, got {n_z}")
    return math.floor(n_z * (1.0 - binary_entropy(e_pz_bound))) - t_e


def mismatch_adjusted_length(r: float, n_z: int, e_sum: float, t_e: int) -> int:
    """Output length under detector-efficiency mismatch ratio ``r``.

    Computes ``floor(r * n_z * (1 - H(e_sum / r))) - t_e``; identical to
    :func:`final_length` at r = 1.

    Raises
    ------
    ProtocolAbortError
        If ``e_sum / r >= 1/2`` (the scaled error rate certifies nothing).
    """
    if not 0.0 < r <= 1.0:
        raise ValueError(f"efficiency ratio must be in (0, 1], got {r}")
    if n_z < 1:
        raise ValueError(f"n_z must be >= 1, got {n_z}")
    scaled = e_sum / r
    if scaled >= 0.5:
        raise ProtocolAbortError(
            f"scaled error rate e_sum/r = {scaled:.6f} >= 1/2: no extractable bits"
        )
    return math.floor(r * n_z * (1.0 - binary_entropy(scaled))) - t_e


def trace_distance_from_fidelity(eps_f: float) -> float:
    """Convert a fidelity-measure failure probability to trace distance.

    ``eps_t = sqrt(eps_f * (2 - eps_f))``, monotone, maps [0, 1] onto [0, 1].
    """
    if not 0.0 <= eps_f <= 1.0:
        raise ValueError(f"eps_f must be in [0, 1], got {eps_f}")
    return math.sqrt(eps_f * (2.0 - eps_f))


def composed_security(eps_theta: float, t_e: int, extraction_blocks: int = 1) -> SecurityReport:
    """Compose the sampling and extraction failure probabilities.

    ``eps_f = eps_theta + extraction_blocks * 2**(-t_e)`` (union bound over
    independently extracted blocks), converted to the trace-distance
    parameter ``eps_t = sqrt(eps_f * (2 - eps_f))``.

    Raises
    ------
    ValueError
        If the composed eps_f exceeds 1.
    """
    if eps_theta < 0:
        raise ValueError(f"eps_theta must be >= 0, got {eps_theta}")
    if extraction_blocks < 1:
        raise ValueError(f"extraction_blocks must be >= 1, got {extraction_blocks}")
    eps_f = eps_theta + extraction_blocks * 2.0 ** (-t_e)
    if eps_f > 1.0:
        raise ValueError(f"composed eps_f = {eps_f} exceeds 1")
    eps_t = trace_distance_from_fidelity(eps_f)
    log2_eps_f = math.log2(eps_f) if eps_f > 0 else -math.inf
    log2_eps_t = math.log2(eps_t) if eps_t > 0 else -math.inf
    return SecurityReport(eps_f=eps_f, eps_t=eps_t, log2_eps_f=log2_eps_f, log2_eps_t=log2_eps_t)
