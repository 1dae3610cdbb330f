import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from masqrad.interpreter import (
    ClassifierHead,
    Clue,
    ClueSet,
    DimensionMismatch,
    HashEncoder,
    extract_creative_clues,
    merge_clue_sets,
    predict_probs,
    threshold_labels,
)


def sigmoid_oracle(weight, bias, x):
    """Scalar-loop re-statement of the classifier head, kept deliberately naive."""
    out = []
    for i in range(len(bias)):
        z = bias[i]
        for j in range(len(x)):
            z += weight[i][j] * x[j]
        out.append(1.0 / (1.0 + math.exp(-z)))
    return out


def random_head(rng, d, L):
    return ClassifierHead(
        weight=rng.standard_normal((L, d)),
        bias=rng.standard_normal(L),
        labels=tuple(f"label{i}" for i in range(L)),
    )


class TestPredictProbs:
    def test_zero_head_gives_half(self):
        head = ClassifierHead(np.zeros((3, 4)), np.zeros(3), ("a", "b", "c"))
        probs = predict_probs(np.array([1.0, -2.0, 3.0, 0.5]), head)
        assert np.all(probs == 0.5)

    def test_saturated_bias_empties_label_set(self):
        head = ClassifierHead(
            np.zeros((3, 2)), np.full(3, -1000.0), ("a", "b", "c"), threshold=0.001
        )
        probs = predict_probs(np.zeros(2), head)
        assert np.all(probs < 1e-6)
        assert threshold_labels(probs, head) == []

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(11)
        head = random_head(rng, 3, 4)
        x = rng.standard_normal(3)
        expected = sigmoid_oracle(head.weight.tolist(), head.bias.tolist(), x.tolist())
        assert np.allclose(predict_probs(x, head), expected, atol=1e-9, rtol=0)

    def test_dimension_mismatch(self):
        head = ClassifierHead(np.zeros((2, 3)), np.zeros(2), ("a", "b"))
        with pytest.raises(DimensionMismatch):
            predict_probs(np.zeros(4), head)

    def test_bounds_strict(self):
        rng = np.random.default_rng(3)
        head = random_head(rng, 5, 6)
        probs = predict_probs(rng.standard_normal(5) * 10, head)
        assert np.all(probs > 0) and np.all(probs < 1)


class TestThresholdLabels:
    def test_basic(self):
        head = ClassifierHead(np.zeros((3, 1)), np.zeros(3), ("l0", "l1", "l2"))
        picked = threshold_labels(np.array([0.9, 0.2, 0.6]), head)
        assert picked == [("l0", 0.9), ("l2", 0.6)]

    def test_all_below(self):
        head = ClassifierHead(np.zeros((2, 1)), np.zeros(2), ("a", "b"))
        assert threshold_labels(np.array([0.1, 0.2]), head) == []

    def test_tie_break_by_label_order(self):
        head = ClassifierHead(np.zeros((3, 1)), np.zeros(3), ("a", "b", "c"))
        picked = threshold_labels(np.array([0.7, 0.9, 0.7]), head)
        assert picked == [("b", 0.9), ("a", 0.7), ("c", 0.7)]

    @given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
    @settings(max_examples=50)
    def test_raising_threshold_never_adds(self, t1, t2):
        lo, hi = sorted((t1, t2))
        rng = np.random.default_rng(0)
        probs = rng.uniform(0, 1, size=5)
        head_lo = ClassifierHead(
            np.zeros((5, 1)), np.zeros(5), tuple("abcde"), threshold=lo
        )
        head_hi = ClassifierHead(
            np.zeros((5, 1)), np.zeros(5), tuple("abcde"), threshold=hi
        )
        picked_lo = {label for label, _ in threshold_labels(probs, head_lo)}
        picked_hi = {label for label, _ in threshold_labels(probs, head_hi)}
        assert picked_hi <= picked_lo


class TestCreativeClues:
    def test_basic_lines(self):
        text = "- clue: budget\n- clue: release_year"
        assert extract_creative_clues(text) == ["budget", "release_year"]

    def test_no_matches(self):
        assert extract_creative_clues("nothing to see here") == []

    def test_dedup(self):
        text = "- clue: budget\nnoise\n- clue: budget"
        assert extract_creative_clues(text) == ["budget"]

    def test_case_and_spacing(self):
        text = "  *  CLUE : Release Year  \nclue:gross"
        assert extract_creative_clues(text) == ["release_year", "gross"]

    def test_rejects_partial_lines(self):
        assert extract_creative_clues("the clue: budget is hidden mid-line?!") == []


class TestMerge:
    def test_union(self):
        merged = merge_clue_sets([("a", 0.9)], ["b"])
        assert merged.clues == (
            Clue("a", "structured", 0.9),
            Clue("b", "creative"),
        )

    def test_structured_precedence(self):
        merged = merge_clue_sets([("a", 0.9)], ["a"])
        assert merged.clues == (Clue("a", "structured", 0.9),)

    def test_both_empty(self):
        assert merge_clue_sets([], []).clues == ()

    @given(
        st.lists(
            st.tuples(st.sampled_from("abcdef"), st.floats(0.5, 1.0)),
            unique_by=lambda t: t[0],
            max_size=6,
        ),
        st.lists(st.sampled_from("abcdefgh"), unique=True, max_size=8),
    )
    @settings(max_examples=100)
    def test_merge_idempotent(self, structured, creative):
        structured = sorted(structured, key=lambda t: -t[1])
        merged = merge_clue_sets(structured, creative)
        again = merge_clue_sets(
            [(c.label, c.probability) for c in merged.structured],
            [c.label for c in merged.creative],
        )
        assert again == merged


class TestHeadLoading:
    def test_from_json_file(self, tmp_path):
        path = tmp_path / "head.json"
        path.write_text(
            json.dumps(
                {
                    "labels": ["a", "b"],
                    "threshold": 0.4,
                    "weight": [1, 0, 0, 0, 1, 0],
                    "bias": [0.0, 0.0],
                }
            )
        )
        head = ClassifierHead.from_file(path)
        assert head.dim == 3
        assert head.threshold == 0.4
        assert head.labels == ("a", "b")

    def test_invariants(self):
        with pytest.raises(ValueError):
            ClassifierHead(np.zeros((2, 2)), np.zeros(2), ("a", "a"))
        with pytest.raises(ValueError):
            ClassifierHead(np.zeros((2, 2)), np.zeros(3), ("a", "b"))


class TestHashEncoder:
    def test_deterministic_and_dimensioned(self):
        enc = HashEncoder(8)
        a, b = enc.encode("same query"), enc.encode("same query")
        assert a.shape == (8,)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, enc.encode("other query"))
