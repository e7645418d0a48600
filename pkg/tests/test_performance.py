import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptvtt.errors import InputError, UsageError
from conceptvtt.performance import (AnswerRecord, ConceptModel, answer_bin, bin_index,
                                    classify_outcome, confusion_counts, encode_answer,
                                    outcome_of_bin, record_answer)
from conceptvtt.pool import Question
from oracles import tally_outcomes

probs = st.floats(0.0, 1.0)
gts = st.sampled_from([0, 1])


class TestEncoding:
    @pytest.mark.parametrize("prob,gt,a", [(0.8, 1, 0.9), (0.0, 0, 0.0), (0.5, 0, 0.25)])
    def test_examples(self, prob, gt, a):
        assert encode_answer(prob, gt) == a

    @pytest.mark.parametrize("prob", [-0.01, 1.5, float("nan")])
    def test_out_of_range(self, prob):
        with pytest.raises(InputError):
            encode_answer(prob, 1)

    def test_bad_gt(self):
        with pytest.raises(InputError):
            encode_answer(0.3, 2)

    @given(probs, gts)
    def test_halves(self, prob, gt):
        a = encode_answer(prob, gt)
        assert (0.0 <= a <= 0.5) if gt == 0 else (0.5 <= a <= 1.0)


class TestBinning:
    @pytest.mark.parametrize("a,idx", [(0.0, 0), (0.254, 25), (1.0, 100), (0.125, 13),
                                       (0.995, 100), (0.004999, 0)])
    def test_bin_index(self, a, idx):
        assert bin_index(a) == idx

    @pytest.mark.parametrize("a", [-1e-9, 1.0000001])
    def test_out_of_range(self, a):
        with pytest.raises(InputError):
            bin_index(a)

    def test_boundary_bins_follow_outcome(self):
        # prob 0.492, gt 0 -> a = 0.246 is a TN; nearest bin 25 is FP territory
        assert bin_index(0.246) == 25
        assert answer_bin(0.246, 0) == 24
        # prob 0 with gt 1 lands at 0.5 but is an FN
        assert answer_bin(0.5, 1) == 51
        assert answer_bin(0.5, 0) == 50
        assert answer_bin(0.748, 1) == 74
        assert answer_bin(0.254, 0) == 25

    @given(probs, gts)
    def test_answer_bin_is_at_most_one_off(self, prob, gt):
        a = encode_answer(prob, gt)
        assert abs(answer_bin(a, gt) - bin_index(a)) <= 1
        assert outcome_of_bin(answer_bin(a, gt)) == classify_outcome(a, gt)


class TestOutcomes:
    @pytest.mark.parametrize("a,outcome", [(0.9, "TP"), (0.1, "TN"), (0.25, "FP"),
                                           (0.6, "FN"), (0.75, "TP"), (0.5, "FP")])
    def test_classify(self, a, outcome):
        assert classify_outcome(a) == outcome

    def test_confident_miss_on_positive(self):
        assert classify_outcome(0.5, gt=1) == "FN"

    @given(probs, gts)
    def test_matches_threshold_rule(self, prob, gt):
        a = encode_answer(prob, gt)
        assert classify_outcome(a, gt) == next(iter(
            k for k, v in tally_outcomes([(gt, prob)]).items() if v))

    def test_confusion_examples(self):
        assert confusion_counts([]).as_tuple() == (0, 0, 0, 0)
        recs = [AnswerRecord(Question("s", "c", gt), prob, encode_answer(prob, gt), i)
                for i, (prob, gt) in enumerate([(0.8, 1), (0.2, 0), (0.2, 1)])]
        assert [r.a for r in recs] == [0.9, 0.1, 0.6]
        c = confusion_counts(recs)
        assert (c.tn, c.fp, c.fn, c.tp) == (1, 0, 1, 1)

    @settings(max_examples=50)
    @given(st.lists(st.tuples(probs, gts), max_size=40), st.randoms())
    def test_confusion_permutation_invariant(self, rows, rnd):
        recs = [AnswerRecord(Question(f"s{i}", "c", gt), p, encode_answer(p, gt), i)
                for i, (p, gt) in enumerate(rows)]
        shuffled = list(recs)
        rnd.shuffle(shuffled)
        assert confusion_counts(recs) == confusion_counts(shuffled)
        expected = tally_outcomes([(gt, p) for p, gt in rows])
        c = confusion_counts(recs)
        assert (c.tn, c.fp, c.fn, c.tp) == tuple(expected[k] for k in ("TN", "FP", "FN", "TP"))


class TestConceptModel:
    def test_record_increments_bin(self):
        m = ConceptModel("A")
        m, rec = record_answer(m, Question("s0", "A", 1), 0.9)
        assert rec.a == 0.95
        assert m.bin_counts[95] == 1
        assert m.bin_counts.sum() == 1

    def test_same_answer_twice(self):
        m = ConceptModel("A")
        q = Question("s0", "A", 1)
        m.record_answer(q, 0.9)
        m.record_answer(q, 0.9)
        assert m.bin_counts[95] == 2
        assert np.count_nonzero(m.bin_counts) == 1

    def test_concept_mismatch(self):
        with pytest.raises(UsageError):
            ConceptModel("A").record_answer(Question("s0", "B", 1), 0.9)

    def test_frequency_mode_value(self):
        m = ConceptModel("A", frequency_mode=True)
        m.record_answer(Question("s0", "A", 1), 0.9)
        assert [(o.location, o.value) for o in m.observations()] == [(0.95, 1.0)]
        m.record_answer(Question("s1", "A", 0), 0.1)
        assert sorted(o.value for o in m.observations()) == [0.5, 0.5]

    def test_frequency_mode_same_band(self):
        a, b = ConceptModel("A"), ConceptModel("A", frequency_mode=True)
        for i, (p, gt) in enumerate([(0.9, 1), (0.9, 1), (0.3, 0), (0.7, 0)]):
            a.record_answer(Question(f"s{i}", "A", gt), p)
            b.record_answer(Question(f"s{i}", "A", gt), p)
        assert a.split() == b.split()
        assert not np.allclose(a.curve().mean, b.curve().mean)

    def test_empty_model_is_prior(self):
        m = ConceptModel("A")
        assert m.observations() == []
        assert m.split().total == 4.0

    def test_curve_cache_invalidated(self):
        m = ConceptModel("A")
        q = Question("s0", "A", 1)
        m.record_answer(q, 0.9)
        first = m.curve()
        m.record_answer(q, 0.9)
        assert m.curve() is not first
        assert m.curve().mean[95] > first.mean[95]

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(probs, gts), min_size=1, max_size=30), st.randoms())
    def test_order_independent_state(self, rows, rnd):
        a, b = ConceptModel("A"), ConceptModel("A")
        for i, (p, gt) in enumerate(rows):
            a.record_answer(Question(f"s{i}", "A", gt), p)
        order = list(enumerate(rows))
        rnd.shuffle(order)
        for i, (p, gt) in order:
            b.record_answer(Question(f"s{i}", "A", gt), p)
        np.testing.assert_array_equal(a.bin_counts, b.bin_counts)
        assert a.split() == b.split()

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(probs, gts), max_size=40))
    def test_bin_subregions_recover_confusion(self, rows):
        m = ConceptModel("A")
        recs = [m.record_answer(Question(f"s{i}", "A", gt), p) for i, (p, gt) in enumerate(rows)]
        assert m.confusion() == confusion_counts(recs)
        assert m.n_answers == len(rows)
