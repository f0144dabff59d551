"""Stochastic simulator of an untrusted photonic source read by trusted
threshold detectors.

The source emits coherent pulses; a lossy channel attenuates them; two
gated threshold detectors (one per basis eigenstate) click independently
with probability ``1 - (1 - p_d) * exp(-eta * mu_i * t)`` where ``mu_i`` is
the mean photon number routed to detector i, ``t`` the channel
transmittance, ``eta`` the detector efficiency, and ``p_d`` the per-gate
dark count probability.

Per-detector intensities by source mode and measurement basis:

=====================  =========================  =====================
mode                   X basis (d0 = "+")         Z basis (d0 = "0")
=====================  =========================  =====================
honest-plus            mu*(1-e_mis), mu*e_mis     mu/2, mu/2
adversarial-fixed-z    mu/2, mu/2                 mu, 0
=====================  =========================  =====================

The honest source prepares the "+" superposition with a small intensity
leak ``e_mis`` into the orthogonal mode; the adversarial source emits a
fixed Z eigenstate, which yields deterministic Z outcomes but a 50/50
split (and frequent double clicks) in the X basis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .entropy_math import ProtocolParams


class Basis(enum.IntEnum):
    Z = 0
    X = 1


class Pattern(enum.IntEnum):
    """Joint outcome of the two threshold detectors for one gate."""

    NONE = 0
    D0 = 1
    D1 = 2
    DOUBLE = 3


class SourceMode(str, enum.Enum):
    HONEST_PLUS = "honest-plus"
    ADVERSARIAL_FIXED_Z = "adversarial-fixed-z"


@dataclass(frozen=True)
class SourceConfig:
    """Untrusted source: mean photon number, misalignment leak, mode."""

    mean_photon_number: float = 1.0
    misalignment: float = 0.0
    mode: SourceMode = SourceMode.HONEST_PLUS

    def __post_init__(self):
        if self.mean_photon_number < 0:
            raise ValueError(f"mean photon number must be >= 0, got {self.mean_photon_number}")
        if not 0 <= self.misalignment <= 0.5:
            raise ValueError(f"misalignment must be in [0, 1/2], got {self.misalignment}")


@dataclass(frozen=True)
class ChannelConfig:
    """Attenuation between source and detectors, in dB."""

    loss_db: float = 0.0

    def __post_init__(self):
        if self.loss_db < 0:
            raise ValueError(f"loss must be >= 0 dB, got {self.loss_db}")

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.loss_db / 10.0)


@dataclass(frozen=True)
class DetectorConfig:
    """Shared parameters of the two gated threshold detectors."""

    efficiency: float = 0.45
    dark_count: float = 0.002

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if not 0 <= self.dark_count < 1:
            raise ValueError(f"dark count must be in [0, 1), got {self.dark_count}")


@dataclass(frozen=True)
class ClickEvent:
    pulse_index: int
    basis: Basis
    pattern: Pattern


class ClickStream:
    """All click events of one session, held as compact per-pulse arrays."""

    def __init__(self, basis: np.ndarray, pattern: np.ndarray):
        if basis.shape != pattern.shape:
            raise ValueError("basis and pattern arrays must have the same shape")
        self.basis = basis.astype(np.uint8, copy=False)
        self.pattern = pattern.astype(np.uint8, copy=False)

    def __len__(self) -> int:
        return self.basis.size

    def __iter__(self) -> Iterator[ClickEvent]:
        for i in range(self.basis.size):
            yield ClickEvent(i, Basis(int(self.basis[i])), Pattern(int(self.pattern[i])))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClickStream):
            return NotImplemented
        return np.array_equal(self.basis, other.basis) and np.array_equal(
            self.pattern, other.pattern
        )


def detector_intensities(source: SourceConfig, basis: Basis) -> tuple[float, float]:
    """Mean photon numbers (mu_0, mu_1) reaching each detector before loss."""
    mu = source.mean_photon_number
    if source.mode is SourceMode.HONEST_PLUS:
        if basis is Basis.X:
            return mu * (1.0 - source.misalignment), mu * source.misalignment
        return mu / 2.0, mu / 2.0
    # adversarial fixed Z eigenstate
    if basis is Basis.Z:
        return mu, 0.0
    return mu / 2.0, mu / 2.0


def click_probabilities(
    source: SourceConfig, channel: ChannelConfig, det: DetectorConfig, basis: Basis
) -> tuple[float, float]:
    """Marginal click probability of each detector for one gate."""
    mu0, mu1 = detector_intensities(source, basis)
    t = channel.transmittance
    p0 = 1.0 - (1.0 - det.dark_count) * math.exp(-det.efficiency * mu0 * t)
    p1 = 1.0 - (1.0 - det.dark_count) * math.exp(-det.efficiency * mu1 * t)
    return p0, p1


def sample_photon_number(mu: float, rng: np.random.Generator, size: int | None = None):
    """Poisson photon count(s) of a coherent pulse of mean photon number mu."""
    if mu < 0:
        raise ValueError(f"mean photon number must be >= 0, got {mu}")
    if size is None:
        return int(rng.poisson(mu))
    return rng.poisson(mu, size=size)


def detect_pulse(
    source: SourceConfig,
    channel: ChannelConfig,
    det: DetectorConfig,
    basis: Basis,
    rng: np.random.Generator,
    pulse_index: int = 0,
) -> ClickEvent:
    """Measure a single pulse; detectors click independently."""
    p0, p1 = click_probabilities(source, channel, det, basis)
    c0 = rng.random() < p0
    c1 = rng.random() < p1
    pattern = Pattern(int(c0) | (int(c1) << 1))
    return ClickEvent(pulse_index, basis, pattern)


def run_session(
    params: ProtocolParams | int,
    source: SourceConfig,
    channel: ChannelConfig,
    det: DetectorConfig,
    basis_plan,
    rng: np.random.Generator,
    block_size: int = 1 << 21,
) -> ClickStream:
    """Simulate all pulses of one session.

    ``params`` may be full protocol parameters or a bare pulse count.
    ``basis_plan`` is the set of pulse indices measured in the X basis
    (any iterable of ints, or a boolean mask of length N).  Pulses are
    generated in fixed-size blocks with two uniform draws per pulse, so a
    given rng seed reproduces the stream exactly.
    """
    n = params.total_pulses if isinstance(params, ProtocolParams) else int(params)
    basis = np.zeros(n, dtype=np.uint8)
    plan = np.asarray(list(basis_plan) if not isinstance(basis_plan, np.ndarray) else basis_plan)
    if plan.dtype == np.bool_:
        if plan.size != n:
            raise ValueError(f"boolean basis plan must have length {n}, got {plan.size}")
        basis[plan] = Basis.X
    elif plan.size:
        if plan.min() < 0 or plan.max() >= n:
            raise ValueError("basis plan positions out of range")
        basis[plan] = Basis.X

    pz = click_probabilities(source, channel, det, Basis.Z)
    px = click_probabilities(source, channel, det, Basis.X)

    pattern = np.empty(n, dtype=np.uint8)
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        m = stop - start
        is_x = basis[start:stop] == Basis.X
        p0 = np.where(is_x, px[0], pz[0])
        p1 = np.where(is_x, px[1], pz[1])
        c0 = rng.random(m) < p0
        c1 = rng.random(m) < p1
        pattern[start:stop] = c0.astype(np.uint8) | (c1.astype(np.uint8) << 1)
    return ClickStream(basis, pattern)
