"""Toeplitz extraction: bit-exact agreement with the naive GF(2) oracle,
linearity, planning arithmetic, and session-level block accounting."""

import numpy as np
import pytest
from mpmath import mp, mpf

from siqrng.bits import BitBlock
from siqrng.estimation import EstimationResult
from siqrng.extractor import (
    ExtractionError,
    ExtractionPlan,
    extract_session,
    make_plan,
    toeplitz_extract,
)
from siqrng.seeds import SeedSource
from siqrng.squash_sample import SessionTally

from helpers import mp_binary_entropy, naive_toeplitz


def _est(e_bx=0.02, theta=0.0, log2_eps=-100.0, abort=False):
    return EstimationResult(e_bx=e_bx, theta=theta, log2_eps_theta=log2_eps, abort=abort)


def _tally(n_z, e_count=0):
    return SessionTally(
        n=n_z + 100, n_x=100, n_z=n_z, x_minus=e_count, z_bits=BitBlock.zeros(n_z)
    )


class TestMakePlan:
    def test_zero_error_plan(self):
        plan = make_plan(_tally(1000), _est(e_bx=0.0, theta=0.0), t_e=100)
        assert plan.K == 900
        assert plan.seed_length == 1000 + 900 - 1

    def test_reference_plan_size(self):
        # oracle: floor(1e6 * (1 - H(0.02))) - 100 = 858459
        plan = make_plan(_tally(10**6), _est(e_bx=0.02), t_e=100)
        assert plan.K == 858459

    def test_nearly_saturated_error_rate(self):
        # oracle: floor(1e6 * (1 - H(0.49))) - 100 = 188
        plan = make_plan(_tally(10**6), _est(e_bx=0.49), t_e=100)
        assert plan.K == 188

    def test_aborted_estimation_rejected(self):
        with pytest.raises(ExtractionError):
            make_plan(_tally(1000), _est(abort=True), t_e=10)

    def test_nonpositive_output_rejected(self):
        with pytest.raises(ExtractionError):
            make_plan(_tally(200), _est(e_bx=0.4), t_e=100)

    def test_extraction_ratio_matches_deployment_figures(self):
        # invert 1 - H(e) = 91/115 with mpmath; e ~= 0.0329, ratio ~= 0.791
        mp.dps = 30
        e_star = mp.findroot(lambda e: 1 - mp_binary_entropy(e) - mpf(91) / 115, mpf("0.03"))
        assert abs(float(e_star) - 0.033) < 0.001
        plan = make_plan(_tally(115_000), _est(e_bx=float(e_star)), t_e=100)
        assert plan.K / 115_000 == pytest.approx(0.7913, abs=0.01)


class TestToeplitzExtract:
    def test_worked_example(self):
        # K=2, n_z=3: T = [[seed[2], seed[1], seed[0]], [seed[3], seed[2], seed[1]]]
        plan = ExtractionPlan(n_z=3, K=2, t_e=1)
        raw = BitBlock.from01([1, 1, 0])
        seed = BitBlock.from01([1, 0, 1, 1])
        assert toeplitz_extract(raw, seed, plan).to01().tolist() == [1, 0]
        assert naive_toeplitz(raw.to01(), seed.to01(), 2).tolist() == [1, 0]

    def test_zero_raw_gives_zero_output(self, rng):
        plan = ExtractionPlan(n_z=64, K=32, t_e=1)
        seed = BitBlock.from01(rng.integers(0, 2, plan.seed_length))
        out = toeplitz_extract(BitBlock.zeros(64), seed, plan)
        assert not out.to01().any()

    def test_zero_seed_gives_zero_output(self, rng):
        plan = ExtractionPlan(n_z=64, K=32, t_e=1)
        raw = BitBlock.from01(rng.integers(0, 2, 64))
        out = toeplitz_extract(raw, BitBlock.zeros(plan.seed_length), plan)
        assert not out.to01().any()

    def test_matches_naive_oracle_on_1000_instances(self, rng):
        for _ in range(1000):
            n_z = int(rng.integers(1, 513))
            k_out = int(rng.integers(1, n_z + 1))
            raw01 = rng.integers(0, 2, n_z, dtype=np.uint8)
            seed01 = rng.integers(0, 2, n_z + k_out - 1, dtype=np.uint8)
            plan = ExtractionPlan(n_z=n_z, K=k_out, t_e=1)
            fast = toeplitz_extract(BitBlock.from01(raw01), BitBlock.from01(seed01), plan)
            assert np.array_equal(fast.to01(), naive_toeplitz(raw01, seed01, k_out))

    def test_matches_naive_oracle_at_larger_scale(self, rng):
        n_z, k_out = 6000, 4200
        raw01 = rng.integers(0, 2, n_z, dtype=np.uint8)
        seed01 = rng.integers(0, 2, n_z + k_out - 1, dtype=np.uint8)
        plan = ExtractionPlan(n_z=n_z, K=k_out, t_e=1)
        fast = toeplitz_extract(BitBlock.from01(raw01), BitBlock.from01(seed01), plan)
        assert np.array_equal(fast.to01(), naive_toeplitz(raw01, seed01, k_out))

    def test_linearity(self, rng):
        plan = ExtractionPlan(n_z=256, K=128, t_e=1)
        seed = BitBlock.from01(rng.integers(0, 2, plan.seed_length))
        for _ in range(50):
            a = BitBlock.from01(rng.integers(0, 2, 256))
            b = BitBlock.from01(rng.integers(0, 2, 256))
            lhs = toeplitz_extract(a ^ b, seed, plan)
            rhs = toeplitz_extract(a, seed, plan) ^ toeplitz_extract(b, seed, plan)
            assert lhs == rhs

    def test_deterministic(self, rng):
        plan = ExtractionPlan(n_z=300, K=200, t_e=1)
        raw = BitBlock.from01(rng.integers(0, 2, 300))
        seed = BitBlock.from01(rng.integers(0, 2, plan.seed_length))
        assert toeplitz_extract(raw, seed, plan) == toeplitz_extract(raw, seed, plan)

    def test_length_mismatch_rejected(self, rng):
        plan = ExtractionPlan(n_z=100, K=50, t_e=1)
        with pytest.raises(ValueError):
            toeplitz_extract(BitBlock.zeros(99), BitBlock.zeros(plan.seed_length), plan)
        with pytest.raises(ValueError):
            toeplitz_extract(BitBlock.zeros(100), BitBlock.zeros(10), plan)


class TestExtractSession:
    def test_reference_security_report(self, rng):
        raw = BitBlock.from01(rng.integers(0, 2, 5000))
        final, report, summary = extract_session(
            raw, _est(e_bx=0.02, log2_eps=-100.0), 100, SeedSource.from_rng(rng)
        )
        # single block: eps_f = 2^-100 + 2^-100, eps_t = 2 * 2^-50
        assert summary["n_blocks"] == 1
        assert abs(report.eps_t - 2.0 * 2.0**-50) / (2.0 * 2.0**-50) < 1e-12
        assert len(final) == summary["K"] > 0

    def test_empty_session_rejected(self, rng):
        with pytest.raises(ExtractionError):
            extract_session(BitBlock.zeros(0), _est(), 100, SeedSource.from_rng(rng))

    def test_aborted_session_rejected(self, rng):
        with pytest.raises(ExtractionError):
            extract_session(BitBlock.zeros(100), _est(abort=True), 10,
                            SeedSource.from_rng(rng))

    def test_deterministic_given_seed_stream(self, rng):
        raw = BitBlock.from01(rng.integers(0, 2, 3000))
        outs = [
            extract_session(raw, _est(), 50,
                            SeedSource.from_rng(np.random.default_rng(5)))[0]
            for _ in range(2)
        ]
        assert outs[0] == outs[1]

    def test_blocks_are_balanced_and_accounted(self, rng):
        raw = BitBlock.from01(rng.integers(0, 2, 10_000))
        final, report, summary = extract_session(
            raw, _est(e_bx=0.05, log2_eps=-80.0), 20,
            SeedSource.from_rng(rng), block_size=3000,
        )
        assert summary["n_blocks"] == 4
        assert sum(summary["block_sizes"]) == 10_000
        assert max(summary["block_sizes"]) - min(summary["block_sizes"]) <= 1
        # union bound: eps_f = 2^-80 + 4 * 2^-20
        assert report.eps_f == pytest.approx(2.0**-80 + 4 * 2.0**-20, rel=1e-12)

    def test_block_split_concatenates_block_outputs(self, rng):
        # the blocked result equals extracting each balanced block separately
        raw01 = rng.integers(0, 2, 2000, dtype=np.uint8)
        raw = BitBlock.from01(raw01)
        est = _est(e_bx=0.05, log2_eps=-60.0)
        final, _, summary = extract_session(
            raw, est, 20, SeedSource.from_rng(np.random.default_rng(3)), block_size=1000,
        )
        seed_bits = SeedSource.from_rng(np.random.default_rng(3)).take_bits(
            summary["toeplitz_seed_bits"]
        )
        pieces = []
        for i, size in enumerate(summary["block_sizes"]):
            plan = ExtractionPlan(n_z=size, K=(len(final)) // 2, t_e=20)
            block = raw01[i * 1000 : i * 1000 + size]
            pieces.append(
                naive_toeplitz(block, seed_bits[: plan.seed_length], plan.K)
            )
        assert np.array_equal(final.to01(), np.concatenate(pieces))

    def test_mismatch_ratio_shortens_output(self, rng):
        raw = BitBlock.from01(rng.integers(0, 2, 5000))
        est = _est(e_bx=0.05, log2_eps=-80.0)
        matched, _, _ = extract_session(raw, est, 50, SeedSource.from_rng(rng))
        shorter, _, _ = extract_session(
            raw, est, 50, SeedSource.from_rng(rng), efficiency_ratio=0.9
        )
        assert len(shorter) < len(matched)

    def test_seed_reuse_across_raw_blocks_is_statistically_sound(self, rng):
        # one seed, many raw blocks: outputs from independent raws stay
        # uncorrelated (strong-extractor reuse contract), checked via the
        # monobit statistic of the concatenated output
        from siqrng.randtest import monobit_test

        plan = ExtractionPlan(n_z=4096, K=2048, t_e=1)
        seed = BitBlock.from01(rng.integers(0, 2, plan.seed_length))
        outputs = []
        for _ in range(40):
            raw = BitBlock.from01(rng.integers(0, 2, 4096))
            outputs.append(toeplitz_extract(raw, seed, plan).to01())
        _, p_value = monobit_test(np.concatenate(outputs))
        assert p_value >= 0.01
