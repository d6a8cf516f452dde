"""Concordance: pseudo-inverse and eigenvalue-ratio routes, subset modes,
and the deterministic identities both must satisfy."""

import numpy as np
import pytest

from concord.concordance import (
    concordance_direct,
    concordance_subset,
    concordance_trace,
)
from concord.linalg import ScatterSummary, SingularMatrixError, scatter_from_matrix


def _summary_from_gram(gram, n):
    """Summary with a prescribed Gram matrix (col sums left at zero)."""
    gram = np.asarray(gram, dtype=float)
    s = ScatterSummary(gram.shape[0])
    s.n = n
    s._packed = gram[np.triu_indices(gram.shape[0])].copy()
    return s


class TestDirect:
    def test_self_concordance_is_one(self):
        rng = np.random.default_rng(101)
        for _ in range(20):
            a = rng.standard_normal((12, 4))
            assert concordance_direct(a, a).value == pytest.approx(1.0, abs=1e-10)

    def test_scaling_is_quadratic(self):
        rng = np.random.default_rng(103)
        a = rng.standard_normal((15, 3))
        assert concordance_direct(2 * a, a).value == pytest.approx(4.0, abs=1e-10)

    def test_trace_identity_oracle(self):
        rng = np.random.default_rng(107)
        a = rng.integers(-4, 5, size=(6, 2)).astype(float)
        b = rng.integers(-4, 5, size=(8, 2)).astype(float)
        direct = concordance_direct(a, b).value
        trace = concordance_trace(
            scatter_from_matrix(a), scatter_from_matrix(b)
        ).value
        assert direct == pytest.approx(trace, rel=1e-9)

    def test_swapped_normalization(self):
        rng = np.random.default_rng(109)
        a = rng.standard_normal((10, 3))
        b = rng.standard_normal((20, 3))
        unit = concordance_direct(a, b).value
        swapped = concordance_direct(a, b, normalization="swapped").value
        # The two conventions differ exactly by the squared row ratio.
        assert swapped == pytest.approx(unit * (10 / 20) ** 2, rel=1e-12)

    def test_no_terms_for_direct(self):
        rng = np.random.default_rng(113)
        a = rng.standard_normal((9, 3))
        result = concordance_direct(a, a)
        assert result.terms is None
        assert result.method == "direct"

    def test_singular_reference(self):
        a = np.eye(3)
        b = np.ones((5, 3))
        with pytest.raises(SingularMatrixError):
            concordance_direct(a, b)

    def test_column_mismatch(self):
        with pytest.raises(ValueError):
            concordance_direct(np.eye(3), np.ones((4, 2)))

    def test_reference_needs_d_rows(self):
        with pytest.raises(ValueError):
            concordance_direct(np.eye(3), np.eye(3)[:2])

    def test_blockwise_frobenius_matches_dense(self):
        # Row-blocked accumulation must agree with the one-shot product.
        rng = np.random.default_rng(127)
        a = rng.standard_normal((500, 3))
        b = rng.standard_normal((40, 3))
        dense = (
            b.shape[0]
            / (3 * a.shape[0])
            * np.sum((a @ np.linalg.pinv(b)) ** 2)
        )
        assert concordance_direct(a, b).value == pytest.approx(dense, rel=1e-9)


class TestTrace:
    def test_identical_scatters(self):
        rng = np.random.default_rng(131)
        s = scatter_from_matrix(rng.standard_normal((20, 4)))
        result = concordance_trace(s, s)
        assert result.value == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(result.terms, np.ones(4), atol=1e-10)

    def test_scaling_diagonal(self):
        a = _summary_from_gram(np.diag([4.0, 4.0]), n=2)
        b = _summary_from_gram(np.diag([1.0, 1.0]), n=2)
        assert concordance_trace(a, b).value == pytest.approx(4.0, abs=1e-12)

    def test_commuting_diagonal_hand_value(self):
        # a = diag(2, 8) over 2 rows, b = diag(1, 2) over 1 row:
        # mean((1/2*2)/(1*1), (1/2*8)/(1*2)) hm ordered by descending
        # reference eigenvalue: ((8/2)/2 + (2/2)/1) / 2 = 1.5.
        a = _summary_from_gram(np.diag([2.0, 8.0]), n=2)
        b = _summary_from_gram(np.diag([1.0, 2.0]), n=1)
        result = concordance_trace(a, b)
        assert result.value == pytest.approx(1.5, rel=1e-10)
        np.testing.assert_allclose(sorted(result.terms), [1.0, 2.0], rtol=1e-12)

    def test_value_is_mean_of_terms(self):
        rng = np.random.default_rng(137)
        a = scatter_from_matrix(rng.standard_normal((15, 5)))
        b = scatter_from_matrix(rng.standard_normal((25, 5)))
        result = concordance_trace(a, b)
        assert result.value == pytest.approx(result.terms.mean(), rel=1e-10)
        assert result.value > 0
        assert len(result.terms) == 5

    def test_trace_identity_property(self):
        # General identity against an independent dense oracle, no common
        # eigenbasis assumed.
        rng = np.random.default_rng(139)
        for _ in range(50):
            a = rng.standard_normal((rng.integers(6, 15), 4))
            b = rng.standard_normal((rng.integers(6, 15), 4))
            got = concordance_trace(scatter_from_matrix(a), scatter_from_matrix(b)).value
            oracle = (
                b.shape[0]
                / (4 * a.shape[0])
                * np.trace(a.T @ a @ np.linalg.inv(b.T @ b))
            )
            assert got == pytest.approx(oracle, rel=1e-9)

    def test_orthonormal_invariance(self):
        rng = np.random.default_rng(149)
        a = rng.standard_normal((12, 4))
        b = rng.standard_normal((18, 4))
        base = concordance_trace(scatter_from_matrix(a), scatter_from_matrix(b)).value
        for _ in range(100):
            q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
            rotated = concordance_trace(
                scatter_from_matrix(a @ q), scatter_from_matrix(b @ q)
            ).value
            assert abs(rotated - base) <= 1e-8 * base

    def test_singular_reference(self):
        a = scatter_from_matrix(np.eye(3))
        b = scatter_from_matrix(np.ones((4, 3)))
        with pytest.raises(SingularMatrixError):
            concordance_trace(a, b)

    def test_empty_subset(self):
        with pytest.raises(ValueError):
            concordance_trace(ScatterSummary(2), scatter_from_matrix(np.eye(2)))

    def test_centered_flag(self):
        rng = np.random.default_rng(151)
        x = rng.standard_normal((60, 3)) + 7.0
        a = scatter_from_matrix(x[:20])
        b = scatter_from_matrix(x)
        raw = concordance_trace(a, b).value
        centered = concordance_trace(a, b, center=True).value
        # The shared offset dominates the raw scatter but not the centered one.
        assert abs(centered - 1.0) < abs(raw - 1.0) + 0.5
        xc_sub = x[:20] - x[:20].mean(axis=0)
        xc_all = x - x.mean(axis=0)
        oracle = (
            60 / (3 * 20) * np.trace(xc_sub.T @ xc_sub @ np.linalg.inv(xc_all.T @ xc_all))
        )
        assert centered == pytest.approx(oracle, rel=1e-9)


class TestSubset:
    def test_overlapping_full_subset_is_one(self):
        rng = np.random.default_rng(157)
        x = rng.standard_normal((30, 4))
        total = scatter_from_matrix(x)
        result = concordance_subset(total, scatter_from_matrix(x), "overlapping")
        assert result.value == pytest.approx(1.0, abs=1e-10)
        assert result.mode == "overlapping"

    def test_nonoverlapping_hand_value(self):
        # total rows (1,0),(0,1),(2,0),(0,2); subset = first two. The
        # complement scatter is diag(4,4) over 2 rows, the subset diag(1,1)
        # over 2 rows, so every ratio is 1/4.
        x = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, 2.0]])
        total = scatter_from_matrix(x)
        subset = scatter_from_matrix(x[:2])
        result = concordance_subset(total, subset, "nonoverlapping")
        assert result.value == pytest.approx(0.25, rel=1e-12)
        assert result.n_reference == 2

    def test_modes_agree_when_n_much_larger(self):
        # With the subset a vanishing fraction of the data, the complement
        # is nearly the whole set and the two modes coincide closely (the
        # gap shrinks with i/n, reaching ~1e-7 only at millions of rows).
        rng = np.random.default_rng(163)
        x = rng.standard_normal((200000, 5))
        total = scatter_from_matrix(x)
        idx = rng.choice(200000, 200, replace=False)
        subset = scatter_from_matrix(x[idx])
        over = concordance_subset(total, subset, "overlapping").value
        non = concordance_subset(total, subset, "nonoverlapping").value
        assert abs(over - non) <= 5e-4
        assert abs(over - 1.0) > 10 * abs(over - non)

    def test_complement_never_rereads_data(self):
        rng = np.random.default_rng(167)
        x = rng.standard_normal((40, 3))
        total = scatter_from_matrix(x)
        subset = scatter_from_matrix(x[:15])
        via_subtraction = concordance_subset(total, subset, "nonoverlapping").value
        direct_complement = concordance_trace(
            subset, scatter_from_matrix(x[15:])
        ).value
        assert via_subtraction == pytest.approx(direct_complement, rel=1e-10)

    def test_small_subset_warns_in_metadata(self):
        rng = np.random.default_rng(173)
        x = rng.standard_normal((50, 4))
        total = scatter_from_matrix(x)
        tiny = concordance_subset(total, scatter_from_matrix(x[:3]), "overlapping")
        assert any("fewer rows" in w for w in tiny.warnings)
        small = concordance_subset(total, scatter_from_matrix(x[:6]), "overlapping")
        assert any("2*d" in w for w in small.warnings)
        ok = concordance_subset(total, scatter_from_matrix(x[:8]), "overlapping")
        assert ok.warnings == ()

    def test_empty_subset_errors(self):
        total = scatter_from_matrix(np.eye(3))
        with pytest.raises(ValueError):
            concordance_subset(total, ScatterSummary(3), "overlapping")

    def test_subset_larger_than_total_errors(self):
        x = np.eye(3)
        total = scatter_from_matrix(x)
        both = scatter_from_matrix(np.vstack([x, x]))
        with pytest.raises(ValueError):
            concordance_subset(total, both, "overlapping")

    def test_full_subset_nonoverlapping_errors(self):
        x = np.random.default_rng(179).standard_normal((10, 2))
        total = scatter_from_matrix(x)
        with pytest.raises(ValueError):
            concordance_subset(total, scatter_from_matrix(x), "nonoverlapping")

    def test_unknown_mode(self):
        total = scatter_from_matrix(np.eye(2))
        with pytest.raises(ValueError):
            concordance_subset(total, total, "sideways")
