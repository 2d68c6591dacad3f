"""Closed-form sample-complexity, accuracy, and index-entropy bounds."""

import math

import numpy as np
import pytest

from crs import (INDEX_OVERHEAD_BITS, PairedDistribution,
                 classic_rejection_complexity, depth_limited_complexity,
                 divergence_report, importance_epsilon, importance_estimate,
                 importance_mean_error_bound, improved_rejection_complexity,
                 index_tail_bound, kl_generator, level_stats,
                 truncated_index_entropy, two_level_ratio_pair,
                 two_level_required_t)

DKL_TP = 0.5310044064107189


def test_overhead_constant():
    assert INDEX_OVERHEAD_BITS == pytest.approx(
        math.exp(-1) * math.log2(math.e) + 1.0, abs=1e-15)
    assert INDEX_OVERHEAD_BITS == pytest.approx(1.530737845423043, abs=1e-15)


# ---------------------------------------------------------------------------
# proposal-budget bounds
# ---------------------------------------------------------------------------

def test_classic_complexity_two_point():
    rep = classic_rejection_complexity(DKL_TP, kl_generator, 0.25)
    # (2/0.75) * ln 8 * 2^(4 * 0.5310 / 0.25)
    assert rep.value == pytest.approx(2002.1080627061233, rel=1e-12)
    assert rep.ceiled == 2003


def test_classic_complexity_zero_divergence():
    for eps in (0.2, 0.5, 0.8):
        rep = classic_rejection_complexity(0.0, kl_generator, eps)
        expect = max((2.0 / (1.0 - eps)) * math.log(2.0 / eps), 2.0)
        assert rep.value == pytest.approx(expect, rel=1e-12)


def test_classic_complexity_blows_up_near_one():
    assert classic_rejection_complexity(0.1, kl_generator, 0.999).value > 1e3
    with pytest.raises(ValueError, match="strictly inside"):
        classic_rejection_complexity(0.1, kl_generator, 1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        classic_rejection_complexity(-0.1, kl_generator, 0.5)


def test_improved_complexity_two_point():
    rep = improved_rejection_complexity(DKL_TP, kl_generator, 0.25, 0.9)
    # ln 40 * 2^(0.5310 / 0.225)
    assert rep.value == pytest.approx(18.93787077038486, rel=1e-10)
    assert rep.ceiled == 19


def test_improved_complexity_zero_divergence():
    rep = improved_rejection_complexity(0.0, kl_generator, 0.5, 0.5)
    assert rep.ceiled == 2  # ceil(ln 4)


def test_improved_complexity_rejects_bad_gamma():
    with pytest.raises(ValueError, match="gamma"):
        improved_rejection_complexity(0.1, kl_generator, 0.5, 1.0)
    with pytest.raises(ValueError, match="gamma"):
        improved_rejection_complexity(0.1, kl_generator, 0.5, 0.0)


def test_improved_beats_classic_on_grid():
    for d in np.linspace(0.1, 3.0, 12):
        for eps in (0.05, 0.1, 0.25, 0.5):
            classic = classic_rejection_complexity(float(d), kl_generator, eps)
            for gamma in np.linspace(0.5, 0.99, 8):
                improved = improved_rejection_complexity(
                    float(d), kl_generator, eps, float(gamma))
                assert improved.value < classic.value


def test_depth_limited_complexity_values():
    assert depth_limited_complexity(DKL_TP, 0.5).value == pytest.approx(
        17.429804754901987, rel=1e-10)
    assert depth_limited_complexity(DKL_TP, 0.5).ceiled == 18
    assert depth_limited_complexity(DKL_TP, 0.25).ceiled == 304
    assert depth_limited_complexity(0.0, 0.999999).ceiled == 3


def test_index_tail_bound_values():
    assert index_tail_bound(DKL_TP, 18).value == pytest.approx(
        0.494431494839988, abs=1e-12)
    # overhead / 2 when the divergence vanishes and k = 4
    assert index_tail_bound(0.0, 4).value == pytest.approx(
        0.7653689227115215, abs=1e-12)
    assert index_tail_bound(50.0, 2).value == 1.0
    with pytest.raises(ValueError, match="at least 2"):
        index_tail_bound(0.5, 1)


def test_depth_and_tail_are_inverse():
    for d in (0.0, 0.2, 0.5310044064107189, 2.0):
        for eps in (0.1, 0.3, 0.5, 0.9):
            k = depth_limited_complexity(d, eps).ceiled
            assert index_tail_bound(d, k).value <= eps + 1e-12


# ---------------------------------------------------------------------------
# importance-sampling accuracy
# ---------------------------------------------------------------------------

def test_importance_epsilon_values():
    assert importance_epsilon(0.0, 0.0, 0.0).epsilon == 1.0
    assert math.isinf(importance_epsilon(0.0, 0.0, 0.0).deviation_scale)
    assert importance_epsilon(0.0, 8.0, 0.0).epsilon == pytest.approx(0.25)
    rep = importance_epsilon(1.0, 2.0, 0.5)
    # sqrt(1/2 + sqrt 2): vacuous, above 1
    assert rep.epsilon == pytest.approx(1.3835510696656972, abs=1e-12)
    assert rep.failure_prob == pytest.approx(2 * rep.epsilon)
    assert math.isinf(rep.deviation_scale)
    tight = importance_epsilon(1.0, 2.0, 0.0)
    assert tight.epsilon == pytest.approx(0.7071067811865476, abs=1e-12)
    assert tight.deviation_scale == pytest.approx(2 * tight.epsilon / (1 - tight.epsilon))


def test_importance_epsilon_validation():
    with pytest.raises(ValueError, match="t_bits"):
        importance_epsilon(1.0, -1.0, 0.0)
    with pytest.raises(ValueError, match="tail"):
        importance_epsilon(1.0, 1.0, 1.5)


def test_mean_error_bound_strengthened_le_original(rng):
    """Feeding the survival mass never loses to feeding the target tail."""
    for _ in range(20):
        m = int(rng.integers(2, 12))
        pd = PairedDistribution.finite(rng.dirichlet(np.ones(m)),
                                       rng.dirichlet(np.ones(m)))
        l_bits = divergence_report(pd).kl_bits
        if l_bits <= 0:
            continue
        for t in (0.0, 1.0, 4.0, 16.0):
            level = 2.0 ** (l_bits + t / 2.0)
            st = level_stats(pd, level)
            strong = importance_mean_error_bound(l_bits, t, st.survival, 1.0)
            orig = importance_mean_error_bound(l_bits, t, st.tail_q, 1.0)
            assert st.survival <= st.tail_q
            assert strong.value <= orig.value


def test_mean_error_bound_scales_with_phi_norm():
    a = importance_mean_error_bound(1.0, 4.0, 0.01, 1.0).value
    b = importance_mean_error_bound(1.0, 4.0, 0.01, 2.5).value
    assert b == pytest.approx(2.5 * a, rel=1e-12)
    assert a == pytest.approx(2.0 ** -1.0 + 2.0 * math.sqrt(0.01), rel=1e-12)


# ---------------------------------------------------------------------------
# the two-level construction
# ---------------------------------------------------------------------------

def test_two_level_pair_exact_atoms():
    pd = two_level_ratio_pair(1.0, 2.0)
    assert np.array_equal(pd.q, [0.0, 0.5, 0.5])
    assert np.array_equal(pd.p, [0.375, 0.5, 0.125])
    assert pd.p.sum() == 1.0
    assert np.dot(pd.p, pd.ratio_values) == pytest.approx(1.0, abs=1e-15)


def test_two_level_pair_hits_information_budget():
    pd = two_level_ratio_pair(1.0, 2.0)
    assert divergence_report(pd).kl_bits == pytest.approx(1.0, abs=1e-12)
    for l_bits, t in ((0.5, 1.0), (2.0, 3.0), (1.5, 0.5)):
        pd = two_level_ratio_pair(l_bits, t)
        assert divergence_report(pd).kl_bits == pytest.approx(l_bits, abs=1e-12)


def test_two_level_pair_separates_the_tails():
    """At the spike level the survival mass is zero but the target tail is not."""
    pd = two_level_ratio_pair(1.0, 2.0)
    st = level_stats(pd, 4.0)  # 2^(l + t/2)
    assert st.tail_q == 0.5
    assert st.survival == 0.0
    assert st.tail_p == 0.125


def test_two_level_pair_degenerate_t():
    pd = two_level_ratio_pair(1.0, 0.0)
    assert pd.alphabet_size == 2  # middle atom vanishes
    assert divergence_report(pd).kl_bits == pytest.approx(1.0, abs=1e-12)


def test_two_level_pair_validation():
    with pytest.raises(ValueError, match="l_bits"):
        two_level_ratio_pair(0.0, 1.0)
    with pytest.raises(ValueError, match="t_bits"):
        two_level_ratio_pair(1.0, -1.0)


def test_two_level_required_t():
    # 2 * 1 * ((2 / 0.25)^2 - 1)
    assert two_level_required_t(1.0, 0.5) == pytest.approx(126.0, abs=1e-12)
    assert two_level_required_t(2.0, 0.5) == pytest.approx(252.0, abs=1e-12)
    with pytest.raises(ValueError):
        two_level_required_t(1.0, 0.0)


def test_required_t_is_the_vacuity_threshold():
    """At exactly the required t the tail term alone eats the whole budget."""
    l_bits, eps = 1.0, 0.5
    t = two_level_required_t(l_bits, eps)
    pd = two_level_ratio_pair(l_bits, t)
    st = level_stats(pd, 2.0 ** (l_bits + t / 2.0))
    assert 2.0 * math.sqrt(st.tail_q) == pytest.approx(eps**2, abs=1e-12)
    # any larger excess pushes the tail term strictly below the budget
    deeper = two_level_ratio_pair(l_bits, 2 * t)
    st2 = level_stats(deeper, 2.0 ** (l_bits + t))
    assert 2.0 * math.sqrt(st2.tail_q) < eps**2


# ---------------------------------------------------------------------------
# importance estimates
# ---------------------------------------------------------------------------

def test_importance_estimate_two_point(tp):
    assert importance_estimate(tp, [1, 0], lambda x: np.ones_like(x)) == 1.0
    assert importance_estimate(tp, [1, 0], lambda x: np.zeros_like(x)) == 0.0


def test_importance_estimate_monte_carlo(tp, rng):
    x = tp.draw_proposals(rng, 1_000_000)
    est = importance_estimate(tp, x, lambda v: (v == 1).astype(float))
    assert est == pytest.approx(0.9, abs=3 * 0.9 / 1000.0)


def test_importance_estimate_rejects_empty(tp):
    with pytest.raises(ValueError, match="no samples"):
        importance_estimate(tp, [], lambda x: x)


# ---------------------------------------------------------------------------
# clamped index entropy
# ---------------------------------------------------------------------------

def pmf_entropy_oracle(m_tilde, n):
    """Direct pmf construction, the independent route."""
    p = 1.0 / m_tilde
    beta = 1.0 - p
    pmf = [p + beta**n] + [p * beta ** (j - 1) for j in range(2, n + 1)]
    assert abs(sum(pmf) - 1.0) < 1e-12
    return -math.fsum(x * math.log2(x) for x in pmf if x > 0)


def test_entropy_degenerate_sup():
    rep = truncated_index_entropy(1.0, 5)
    assert rep.entropy_bits == 0.0
    assert rep.lower_bound_bits <= 0.0


def test_entropy_frozen_point():
    rep = truncated_index_entropy(5 / 3, 5)
    assert rep.entropy_bits == pytest.approx(1.5266453591132085, abs=1e-12)
    assert rep.lower_bound_bits == pytest.approx(1.5193000832156403, abs=1e-12)
    assert rep.chain_entropy_bits == pytest.approx(1.6182509907577811, abs=1e-12)
    assert rep.overflow_prob == pytest.approx(0.4**5, rel=1e-12)


def test_entropy_matches_pmf_oracle():
    for m_tilde in (1.2, 5 / 3, 3.0, 20.0):
        for n in (1, 2, 5, 40, 300):
            rep = truncated_index_entropy(m_tilde, n)
            assert rep.entropy_bits == pytest.approx(
                pmf_entropy_oracle(m_tilde, n), abs=1e-10)
            assert rep.entropy_bits >= rep.lower_bound_bits - 1e-12


def test_entropy_approaches_chain_entropy():
    rep = truncated_index_entropy(5 / 3, 4096)
    assert rep.entropy_bits == pytest.approx(rep.chain_entropy_bits, abs=1e-9)


def test_entropy_plug_in_budget_grid():
    """The generic lower bound beats the closed-form target on a KL grid."""
    for d in (0.25, 0.5, 1.0):
        for eps in (0.3, 0.5, 0.7):  # <= 2/e
            m_tilde = (2.0 / (1.0 - eps)) * math.log(2.0 / eps) * 2.0 ** (4.0 * d / eps)
            n = math.ceil(m_tilde * math.log(2.0 / eps))
            rep = truncated_index_entropy(m_tilde, n)
            assert rep.lower_bound_bits >= (1.0 - eps / 2.0) * (4.0 * d / eps) - 1.0


def test_entropy_validation():
    with pytest.raises(ValueError, match="at least 1"):
        truncated_index_entropy(0.9, 5)
    with pytest.raises(ValueError, match="at least 1"):
        truncated_index_entropy(2.0, 0)
