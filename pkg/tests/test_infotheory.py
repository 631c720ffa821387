import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcmi.core import ContractViolation, LabeledExample, SizeError, Supersample
from fcmi.infotheory import (
    AbsoluteContinuityError,
    JointHistogram,
    SplitEnumeration,
    all_subsets,
    conditional_mutual_information,
    entropy,
    exact_fcmi_enumeration,
    histogram_from_pairs,
    kl_divergence,
    mutual_information,
    plugin_mi_from_samples,
    product_alphabet_size,
)
from fcmi.learners import LearnerSpec

LOG2 = math.log(2.0)


def mi_oracle(cells):
    """Brute-force plug-in formula over explicit probability cells."""
    pa, pb = {}, {}
    for (a, b), p in cells.items():
        pa[a] = pa.get(a, 0.0) + p
        pb[b] = pb.get(b, 0.0) + p
    return sum(p * math.log(p / (pa[a] * pb[b]))
               for (a, b), p in cells.items() if p > 0)


class TestEntropy:
    def test_deterministic(self):
        assert entropy([1.0, 0.0]) == 0.0

    def test_uniform_binary(self):
        assert entropy([0.5, 0.5]) == pytest.approx(LOG2, abs=1e-12)

    def test_skewed(self):
        expected = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
        assert entropy([0.25, 0.75]) == pytest.approx(expected, abs=1e-12)
        assert entropy([0.25, 0.75]) == pytest.approx(0.562335, abs=1e-6)

    def test_invalid_distribution(self):
        with pytest.raises(ContractViolation):
            entropy([0.5, 0.6])
        with pytest.raises(ContractViolation):
            entropy([-0.1, 1.1])


class TestKL:
    def test_identical_is_zero(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_point_mass_vs_uniform(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(LOG2, abs=1e-12)

    def test_support_violation(self):
        with pytest.raises(AbsoluteContinuityError):
            kl_divergence([0.5, 0.5], [1.0, 0.0])

    def test_nonnegative_random(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = rng.dirichlet(np.ones(4))
            q = rng.dirichlet(np.ones(4)) * 0.9 + 0.025
            q = q / q.sum()
            assert kl_divergence(p, q) >= -1e-12


class TestMutualInformation:
    def test_product_joint(self):
        assert mutual_information([[25, 25], [25, 25]]) == pytest.approx(0.0, abs=1e-12)

    def test_perfectly_dependent(self):
        assert mutual_information([[5, 0], [0, 5]]) == pytest.approx(LOG2, abs=1e-12)

    def test_3113_joint(self):
        cells = {(0, 0): 3 / 8, (0, 1): 1 / 8, (1, 0): 1 / 8, (1, 1): 3 / 8}
        expected = mi_oracle(cells)
        assert mutual_information([[3, 1], [1, 3]]) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.130812, abs=1e-6)

    def test_bounded_by_marginal_entropies(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            joint = rng.integers(0, 20, (3, 4)) + 1
            mi = mutual_information(joint)
            p = joint / joint.sum()
            assert -1e-12 <= mi <= min(entropy(p.sum(1)), entropy(p.sum(0))) + 1e-12

    @given(st.lists(st.lists(st.integers(0, 30), min_size=2, max_size=4),
                    min_size=2, max_size=4).filter(
        lambda rows: len({len(r) for r in rows}) == 1 and sum(map(sum, rows)) > 0))
    @settings(max_examples=200, deadline=None)
    def test_entropy_identity(self, rows):
        joint = np.array(rows, dtype=np.int64)
        p = joint / joint.sum()
        expected = entropy(p.sum(axis=1)) + entropy(p.sum(axis=0)) - entropy(p.ravel())
        assert mutual_information(joint) == pytest.approx(expected, abs=1e-10)


class TestConditionalMutualInformation:
    def test_independent_given_every_cell(self):
        # P(a, b | c) = P(a | c) P(b | c) for both c values
        joint = np.zeros((2, 2, 2))
        joint[:, :, 0] = np.outer([0.3, 0.7], [0.6, 0.4]) * 0.5
        joint[:, :, 1] = np.outer([0.8, 0.2], [0.1, 0.9]) * 0.5
        assert conditional_mutual_information(joint) == pytest.approx(0.0, abs=1e-12)

    def test_constant_conditioner_equals_mi(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            flat = rng.dirichlet(np.ones(6)).reshape(2, 3)
            joint = np.zeros((2, 3, 2))
            joint[:, :, 0] = flat
            assert conditional_mutual_information(joint) == pytest.approx(
                mutual_information(flat), abs=1e-12)

    def test_copy_with_independent_conditioner(self):
        # A = B uniform bit, C an independent uniform bit: I(A; B | C) = log 2
        joint = np.zeros((2, 2, 2))
        joint[0, 0, :] = 0.25
        joint[1, 1, :] = 0.25
        assert conditional_mutual_information(joint) == pytest.approx(LOG2, abs=1e-12)

    def test_empty_cell_contributes_zero(self):
        joint = np.zeros((2, 2, 2))
        joint[0, 0, 0] = 0.5
        joint[1, 1, 0] = 0.5
        assert conditional_mutual_information(joint) == pytest.approx(LOG2, abs=1e-12)


class TestPluginEstimator:
    def test_constant_pairs(self):
        assert plugin_mi_from_samples([(0, 0)] * 100) == 0.0

    def test_deterministic_relation(self):
        pairs = [(0, 0), (1, 1)] * 50
        assert plugin_mi_from_samples(pairs) == pytest.approx(LOG2, abs=1e-12)

    def test_convergence_to_generating_joint(self):
        exact = mi_oracle({(0, 0): 3 / 8, (0, 1): 1 / 8, (1, 0): 1 / 8, (1, 1): 3 / 8})
        rng = np.random.default_rng(7)
        draws = rng.choice(4, size=10 ** 5, p=[3 / 8, 1 / 8, 1 / 8, 3 / 8])
        pairs = [(int(d // 2), int(d % 2)) for d in draws]
        assert abs(plugin_mi_from_samples(pairs) - exact) <= 0.01

    def test_symbol_outside_alphabet(self):
        with pytest.raises(ContractViolation):
            plugin_mi_from_samples([(0, 0), (2, 1)], alphabet_a=(0, 1))

    def test_order_independence(self):
        rng = np.random.default_rng(3)
        pairs = [(int(a), int(b)) for a, b in rng.integers(0, 3, (500, 2))]
        shuffled = list(pairs)
        rng.shuffle(shuffled)
        assert plugin_mi_from_samples(pairs) == plugin_mi_from_samples(shuffled)

    def test_miller_madow_shrinks_bias(self):
        # plug-in MI of an independent joint is biased up; the correction helps
        rng = np.random.default_rng(11)
        plain, corrected = [], []
        for _ in range(300):
            pairs = [(int(a), int(b)) for a, b in rng.integers(0, 2, (200, 2))]
            plain.append(plugin_mi_from_samples(pairs))
            corrected.append(plugin_mi_from_samples(pairs, bias_correction=True))
        assert abs(np.mean(corrected)) < abs(np.mean(plain))

    def test_product_alphabet_size(self):
        assert product_alphabet_size(2, 1) == 8
        assert product_alphabet_size(2, 3) == 2 ** 6 * 2 ** 3


class TestJointHistogram:
    def test_round_trip(self):
        h = histogram_from_pairs([(0, 1), (1, 1), (0, 0)], (2, 2), ("pred", "bit"))
        again = JointHistogram.from_json_dict(h.to_json_dict())
        assert np.array_equal(again.counts, h.counts)
        assert again.axis_names == ("pred", "bit")

    def test_merge_is_cellwise_addition(self):
        a = histogram_from_pairs([(0, 0)], (2, 2))
        b = histogram_from_pairs([(0, 0), (1, 1)], (2, 2))
        merged = a.merge(b)
        assert merged.total == 3
        assert merged.counts[0, 0] == 2

    def test_rejects_negative_and_float(self):
        with pytest.raises(ContractViolation):
            JointHistogram(np.array([[0.5, 0.5], [0.0, 0.0]]))
        with pytest.raises(ContractViolation):
            JointHistogram(np.array([[-1, 2], [0, 0]]))


def threshold_instance():
    """Fixed separable supersample: pair 0 is two 0-labels, pair 1 two 1-labels."""
    mk = lambda x, y: LabeledExample((x,), y)
    return Supersample([
        (mk(0.2, 0), mk(0.4, 0)),
        (mk(0.8, 1), mk(0.6, 1)),
    ])


def threshold_oracle_tables():
    """Hand simulation of the midpoint-threshold fit over all four splits.

    Returns the four prediction tuples keyed by split bits, computed without
    the library: fit w = (max 0-labeled x + min 1-labeled x) / 2, predict
    1{x > w} on inputs (0.2, 0.4, 0.8, 0.6).
    """
    xs = [0.2, 0.4, 0.8, 0.6]
    data = {(0, 0): ([0.2], [0.8]), (0, 1): ([0.2], [0.6]),
            (1, 0): ([0.4], [0.8]), (1, 1): ([0.4], [0.6])}
    tables = {}
    for bits, (zeros, ones) in data.items():
        w = (max(zeros) + min(ones)) / 2
        tables[bits] = tuple(int(x > w) for x in xs)
    return tables


class TestExactEnumeration:
    def test_threshold_erm_oracle_values(self):
        tables = threshold_oracle_tables()
        # oracle MI values from explicit 4-split enumeration
        full_cells = {}
        idx1_cells = {}
        for bits, preds in tables.items():
            full_cells[(preds, bits)] = full_cells.get((preds, bits), 0.0) + 0.25
            key = ((preds[2], preds[3]), bits[1])
            idx1_cells[key] = idx1_cells.get(key, 0.0) + 0.25
        expected_full = mi_oracle(full_cells)
        expected_idx1 = mi_oracle(idx1_cells)
        # frozen values from the hand enumeration
        assert expected_full == pytest.approx(0.5623351446, abs=1e-9)
        assert expected_idx1 == pytest.approx(0.2157615543, abs=1e-9)

        ss = threshold_instance()
        spec = LearnerSpec("threshold_erm")
        assert exact_fcmi_enumeration(ss, spec, "all") == pytest.approx(
            expected_full, abs=1e-12)
        assert exact_fcmi_enumeration(ss, spec, 0) == pytest.approx(0.0, abs=1e-12)
        assert exact_fcmi_enumeration(ss, spec, 1) == pytest.approx(
            expected_idx1, abs=1e-12)

    def test_memorizer_testslot_mi_zero(self):
        rng = np.random.default_rng(5)
        pairs = [(LabeledExample((rng.random(),), int(rng.integers(2))),
                  LabeledExample((rng.random(),), int(rng.integers(2))))
                 for _ in range(5)]
        enum = SplitEnumeration(Supersample(pairs), LearnerSpec("memorizer"))
        assert enum.mi_testslots() == 0.0

    def test_constant_learner_zero_everywhere(self):
        # one-class data makes threshold_erm constant: no information anywhere
        mk = lambda x: LabeledExample((x,), 0)
        ss = Supersample([(mk(0.1), mk(0.3)), (mk(0.5), mk(0.9))])
        enum = SplitEnumeration(ss, LearnerSpec("threshold_erm"))
        for i in range(2):
            assert enum.mi_index(i) == 0.0
            assert enum.cmi_index(i) == 0.0
        assert enum.mi_all() == 0.0

    def test_index_mi_at_most_log2(self):
        ss = threshold_instance()
        enum = SplitEnumeration(ss, LearnerSpec("threshold_erm"))
        for i in range(ss.n):
            assert enum.mi_index(i) <= LOG2 + 1e-12
            assert enum.cmi_index(i) <= LOG2 + 1e-12

    def test_cmi_with_n1_equals_mi(self):
        mk = lambda x, y: LabeledExample((x,), y)
        ss = Supersample([(mk(0.2, 0), mk(0.8, 1))])
        enum = SplitEnumeration(ss, LearnerSpec("memorizer"))
        assert enum.cmi_index(0) == pytest.approx(enum.mi_index(0), abs=1e-12)

    def test_subset_mi_full_matches_mi_all(self):
        ss = threshold_instance()
        enum = SplitEnumeration(ss, LearnerSpec("threshold_erm"))
        assert enum.mi_subset((0, 1)) == pytest.approx(enum.mi_all(), abs=1e-12)

    def test_size_limit(self):
        mk = lambda x: LabeledExample((x,), 0)
        ss = Supersample([(mk(0.0), mk(0.1))] * 3)
        with pytest.raises(SizeError):
            SplitEnumeration(ss, LearnerSpec("memorizer"), limit=2)

    def test_finite_seed_mixture(self):
        # a seed-dependent learner enumerated with two seeds: the split MI is
        # still bounded by the split entropy and reproducible
        rng = np.random.default_rng(9)
        mk = lambda: LabeledExample((float(rng.random()),), int(rng.integers(2)))
        ss = Supersample([(mk(), mk()) for _ in range(3)])
        spec = LearnerSpec("sgld_linear", {"steps": 20})
        a = SplitEnumeration(ss, spec, seeds=(1, 2)).mi_all()
        b = SplitEnumeration(ss, spec, seeds=(1, 2)).mi_all()
        assert a == b
        assert 0.0 <= a <= 3 * LOG2 + 1e-12

    def test_empty_seed_policy_rejected(self):
        mk = lambda x: LabeledExample((x,), 0)
        ss = Supersample([(mk(0.0), mk(0.1))])
        with pytest.raises(ContractViolation):
            SplitEnumeration(ss, LearnerSpec("memorizer"), seeds=())

    def test_all_subsets(self):
        assert all_subsets(3, 2) == [(0, 1), (0, 2), (1, 2)]
        assert len(all_subsets(6, 3)) == 20
        with pytest.raises(ContractViolation):
            all_subsets(3, 0)
