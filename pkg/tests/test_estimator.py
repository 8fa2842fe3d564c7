import numpy as np
import pytest

from twirlkit.channels import (
    PauliChannel,
    depolarizing_product,
    engineered_channel,
    pauli_decompose,
)
from twirlkit.estimator import (
    ParityEstimate,
    SubsetPolicy,
    estimate_c,
    krawtchouk_table,
    linear_invert,
    mle_fit,
    normalize_reference,
    project_simplex,
)
from twirlkit.protocol import (
    ProtocolConfig,
    SpamModel,
    reference_run,
    simulate_ensemble,
    simulate_standard,
)
from twirlkit.twirl import symmetrized_channel
from twirlkit.weightspace import omega

import oracles


def make_estimate(n, c, se):
    c = np.asarray(c, dtype=float)
    se = np.asarray(se, dtype=float)
    return ParityEstimate(n, c, se, np.ones(n + 1), np.ones(n + 1))


class TestKrawtchouk:
    @pytest.mark.parametrize("n", [2, 3, 5, 6])
    def test_matches_subset_enumeration(self, n):
        rng = np.random.default_rng(n)
        table = krawtchouk_table(n)
        from math import comb

        for _ in range(20):
            bits = rng.integers(0, 2, size=n)
            h = int(bits.sum())
            for w in range(1, n + 1):
                exact = oracles.subset_parity_mean(bits, w)
                assert table[w, h] / comb(n, w) == pytest.approx(exact)


class TestEstimateC:
    def test_all_zero_bitstrings(self):
        out = simulate_standard(
            ProtocolConfig(n=3, channel=_identity(3), trials=50, master_seed=0)
        )
        est = estimate_c(out)
        assert np.allclose(est.c_hat, 1.0)
        assert est.stderr[0] == 0.0

    def test_half_and_half_single_qubit(self):
        out = _fake_standard_set(bits=np.array([[0], [1]] * 50, dtype=np.uint8))
        est = estimate_c(out)
        assert est.c_hat[1] == pytest.approx(0.0)

    def test_fixture3_large_k(self):
        ch = pauli_decompose(engineered_channel("chcl3_unitary"))
        out = simulate_standard(ProtocolConfig(n=2, channel=ch, trials=100_000, master_seed=12))
        est = estimate_c(out)
        want = omega(2) @ np.array([0.25, 0.5, 0.25])
        for w in (1, 2):
            assert abs(est.c_hat[w] - want[w]) < 3 * est.stderr[w]

    def test_sampled_policy_agrees_with_all(self):
        ch = depolarizing_product([0.2] * 4)
        out = simulate_standard(ProtocolConfig(n=4, channel=ch, trials=4000, master_seed=2))
        full = estimate_c(out, SubsetPolicy(kind="all"))
        sampled = estimate_c(out, SubsetPolicy(kind="sampled", max_subsets=64, seed=5))
        for w in range(1, 5):
            tol = 4 * np.hypot(full.stderr[w], sampled.stderr[w]) + 1e-9
            assert abs(full.c_hat[w] - sampled.c_hat[w]) < tol

    def test_ensemble_records(self):
        ch = depolarizing_product([0.3, 0.3])
        sets = [
            simulate_ensemble(ProtocolConfig(n=2, channel=ch, trials=50_000, master_seed=3), w)
            for w in (1, 2)
        ]
        est = estimate_c(sets)
        c1 = 1 - 0.4
        for w, want in [(1, c1), (2, c1**2)]:
            assert abs(est.c_hat[w] - want) < 4 * est.stderr[w]

    def test_ensemble_standard_agreement(self):
        ch = pauli_decompose(engineered_channel("malonic_z_mix"))
        std = estimate_c(
            simulate_standard(ProtocolConfig(n=3, channel=ch, trials=40_000, master_seed=4))
        )
        ens = estimate_c(
            [
                simulate_ensemble(
                    ProtocolConfig(n=3, channel=ch, trials=40_000, master_seed=5), w
                )
                for w in (1, 2, 3)
            ]
        )
        for w in (1, 2, 3):
            tol = 4 * np.hypot(std.stderr[w], ens.stderr[w])
            assert abs(std.c_hat[w] - ens.c_hat[w]) < tol

    def test_empty_and_mixed_rejected(self):
        ch = _identity(2)
        std = simulate_standard(ProtocolConfig(n=2, channel=ch, trials=5, master_seed=0))
        ens = simulate_ensemble(ProtocolConfig(n=2, channel=ch, trials=5, master_seed=0), 1)
        with pytest.raises(ValueError):
            estimate_c([])
        with pytest.raises(ValueError):
            estimate_c([std, ens])

    def test_unbiasedness_over_repetitions(self):
        ch = pauli_decompose(engineered_channel("chcl3_unitary"))
        want = omega(2) @ np.array([0.25, 0.5, 0.25])
        reps = 200
        k = 2000
        means = np.zeros((reps, 3))
        for r in range(reps):
            out = simulate_standard(ProtocolConfig(n=2, channel=ch, trials=k, master_seed=1000 + r))
            means[r] = estimate_c(out).c_hat
        for w in (1, 2):
            se_of_mean = means[:, w].std(ddof=1) / np.sqrt(reps)
            assert abs(means[:, w].mean() - want[w]) < 3 * se_of_mean


class TestNormalizeReference:
    def test_unit_reference_is_noop(self):
        est = make_estimate(2, [1, 0.5, 0.2], [0, 0.01, 0.01])
        ref = make_estimate(2, [1, 1.0, 1.0], [0, 0.0, 0.0])
        out = normalize_reference(est, ref)
        assert np.allclose(out.c_hat, est.c_hat)
        assert out.normalized

    def test_spam_bias_divides_out(self):
        ch = depolarizing_product([0.3])
        spam = SpamModel(np.array([0.05]), np.array([0.05]))
        cfg = ProtocolConfig(n=1, channel=ch, trials=300_000, master_seed=6, spam_model=spam)
        raw = estimate_c(simulate_standard(cfg))
        ref = estimate_c(reference_run(cfg))
        assert abs(raw.c_hat[1] - 0.81 * 0.6) < 4 * raw.stderr[1]
        assert abs(ref.c_hat[1] - 0.81) < 4 * ref.stderr[1]
        tilde = normalize_reference(raw, ref)
        assert abs(tilde.c_hat[1] - 0.6) < 4 * tilde.stderr[1]

    def test_tiny_reference_flagged(self):
        est = make_estimate(2, [1, 0.5, 0.2], [0, 0.01, 0.01])
        ref = make_estimate(2, [1, 1e-4, 1.0], [0, 0.0, 0.0])
        out = normalize_reference(est, ref)
        assert out.unusable == (1,)
        assert np.isnan(out.c_hat[1])


class TestLinearInvert:
    def test_fixture3_eigenvalues(self):
        est = make_estimate(2, [1, 1 / 3, 1 / 9], [0, 0, 0])
        inv = linear_invert(est)
        assert np.allclose(inv.p.p, [0.25, 0.5, 0.25], atol=1e-15)

    def test_unit_vector_gives_identity(self):
        est = make_estimate(3, [1, 1, 1, 1], [0, 0, 0, 0])
        inv = linear_invert(est)
        assert np.allclose(inv.p.p, [1, 0, 0, 0], atol=1e-14)

    def test_negative_entries_flagged_not_clipped(self):
        est = make_estimate(2, [1, 1.02, 1.0], [0, 0.01, 0.01])
        inv = linear_invert(est)
        assert inv.p.p.min() < 0
        assert inv.p.nonphysical_weights

    @pytest.mark.parametrize("n", [2, 5, 8, 12])
    def test_round_trip(self, n):
        rng = np.random.default_rng(n)
        for _ in range(10):
            p = rng.dirichlet(np.ones(n + 1))
            c = omega(n) @ p
            est = make_estimate(n, np.concatenate([[1.0], c[1:]]), np.zeros(n + 1))
            inv = linear_invert(est)
            assert np.max(np.abs(inv.p.p - p)) < 1e-12

    def test_refuses_unusable(self):
        est = make_estimate(2, [1, 0.5, 0.2], [0, 0.01, 0.01])
        ref = make_estimate(2, [1, 1e-4, 1.0], [0, 0.0, 0.0])
        with pytest.raises(ValueError):
            linear_invert(normalize_reference(est, ref))


class TestProjectSimplex:
    def test_already_on_simplex(self):
        v = np.array([0.2, 0.5, 0.3])
        assert np.allclose(project_simplex(v), v)

    def test_projection_properties(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            v = rng.normal(size=6)
            p = project_simplex(v)
            assert p.min() >= 0
            assert p.sum() == pytest.approx(1.0)


class TestMleFit:
    def test_exact_counts_recover_fixture3(self):
        n = 2
        q = (1.0 + omega(n) @ np.array([0.25, 0.5, 0.25])) / 2.0
        totals = np.array([1e7, 1e7, 1e7])
        fit = mle_fit(q * totals, totals, n, contours=False)
        assert np.max(np.abs(fit.p_hat.p - [0.25, 0.5, 0.25])) < 1e-6
        assert fit.converged

    @pytest.mark.parametrize("n", [2, 3])
    def test_exact_counts_recover_random_simplex(self, n):
        rng = np.random.default_rng(31 + n)
        for _ in range(100):
            p = rng.dirichlet(np.ones(n + 1))
            q = (1.0 + omega(n) @ p) / 2.0
            totals = np.full(n + 1, 1e8)
            fit = mle_fit(q * totals, totals, n, contours=False)
            assert np.max(np.abs(fit.p_hat.p - p)) < 1e-6, p

    def test_all_even_counts_hits_boundary(self):
        totals = np.array([500.0, 500.0, 500.0])
        fit = mle_fit(totals.copy(), totals, 2, contours=False)
        assert np.allclose(fit.p_hat.p, [1, 0, 0], atol=1e-8)

    def test_simplex_constraints_hold(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            totals = np.full(3, 400.0)
            evens = np.minimum(totals, rng.integers(0, 401, size=3).astype(float))
            evens[0] = totals[0]
            fit = mle_fit(evens, totals, 2, contours=False)
            p = fit.p_hat.p
            assert p.min() >= -1e-12
            assert p.sum() == pytest.approx(1.0, abs=1e-9)

    def test_ml_respects_boundary_where_linear_does_not(self):
        ch = pauli_decompose(engineered_channel("chcl3_z1z2_mix"))  # p = [0, 1, 0]
        out = simulate_standard(ProtocolConfig(n=2, channel=ch, trials=2000, master_seed=17))
        est = estimate_c(out)
        fit = mle_fit(est.even_counts, est.totals, 2, contours=False)
        assert fit.p_hat.p.min() >= -1e-12
        assert abs(fit.p_hat.p[1] - 1.0) < 0.1

    def test_contours_close_and_cover_truth(self):
        ch = pauli_decompose(engineered_channel("chcl3_unitary"))
        out = simulate_standard(ProtocolConfig(n=2, channel=ch, trials=20_000, master_seed=13))
        est = estimate_c(out)
        fit = mle_fit(est.even_counts, est.totals, 2)
        assert set(fit.confidence_contours) == {0.68, 0.95, 0.99}
        for level, polys in fit.confidence_contours.items():
            for poly in polys:
                assert np.allclose(poly[0], poly[-1])
                assert np.allclose(poly.sum(axis=1), 1.0, atol=1e-9)
        # Widths grow with the confidence level.
        def halfwidth(level, w):
            poly = fit.confidence_contours[level][0]
            return (poly[:, w].max() - poly[:, w].min()) / 2

        for w in range(3):
            assert halfwidth(0.68, w) < halfwidth(0.95, w) < halfwidth(0.99, w)


def _identity(n):
    from twirlkit.channels import PauliChannel

    return PauliChannel.identity(n)


def _fake_standard_set(bits):
    from twirlkit.protocol import TrialSet

    k, n = bits.shape
    return TrialSet(
        n=n,
        variant="standard",
        master_seed=0,
        trial_indices=np.arange(k, dtype=np.uint64),
        clifford_ids=np.zeros((k, n), dtype=np.uint8),
        outcomes=bits,
    )


class TestLargeRegister:
    def test_auto_policy_samples_subsets_beyond_cap(self):
        # n = 13 > ALL_SUBSETS_MAX_N: the auto policy switches to sampled
        # subsets; a sparse one-term channel keeps the simulation cheap.
        n = 13
        ch = PauliChannel.from_strings({"I" * n: 0.8, "X" + "I" * (n - 1): 0.2})
        out = simulate_standard(ProtocolConfig(n=n, channel=ch, trials=3000, master_seed=77))
        est = estimate_c(out)
        assert est.totals[1] == 3000 * 13  # C(13,1) = 13 < 64: exhaustive anyway
        assert est.totals[6] == 3000 * 64  # C(13,6) capped at 64 samples
        # weight-1 twirl of a single X: c_1 = 1 - 0.2 * (2/3) * (2/13) * ...
        # just sanity-check against the exact eigenvalues.
        from twirlkit.twirl import eigenvalues

        exact = eigenvalues(ch)
        for w in (1, 2, 6, 13):
            assert abs(est.c_hat[w] - exact.c[w]) < 5 * max(est.stderr[w], 1e-6)


class TestMleResponseScale:
    def test_attenuated_counts_recover_truth(self):
        # Counts generated under per-weight attenuation (as a reference run
        # would measure) are fit with the attenuation in the response model.
        n = 2
        p_true = np.array([0.25, 0.5, 0.25])
        atten = np.array([1.0, 0.81, 0.81**2])
        q = (1.0 + atten * (omega(n) @ p_true)) / 2.0
        totals = np.full(3, 1e7)
        fit = mle_fit(q * totals, totals, n, contours=False, response_scale=atten)
        assert np.max(np.abs(fit.p_hat.p - p_true)) < 1e-6

    def test_without_scale_attenuated_counts_bias(self):
        n = 2
        p_true = np.array([0.25, 0.5, 0.25])
        atten = np.array([1.0, 0.81, 0.81**2])
        q = (1.0 + atten * (omega(n) @ p_true)) / 2.0
        totals = np.full(3, 1e7)
        fit = mle_fit(q * totals, totals, n, contours=False)
        assert np.max(np.abs(fit.p_hat.p - p_true)) > 0.02

    def test_nan_scale_drops_weight(self):
        n = 2
        q = (1.0 + omega(n) @ np.array([0.25, 0.5, 0.25])) / 2.0
        totals = np.full(3, 1e6)
        scale = np.array([1.0, 1.0, np.nan])
        fit = mle_fit(q * totals, totals, n, contours=False, response_scale=scale)
        # with only c_1 constrained the fit is underdetermined but stays on
        # the simplex and matches the observed q_1
        c1 = (omega(n) @ fit.p_hat.p)[1]
        assert abs((1 + c1) / 2 - q[1]) < 1e-6
