import numpy as np
import pytest
from numpy.testing import assert_array_equal
from sklearn.metrics import f1_score

from corpus.labels import ACTIVE_LABELS, Label
from metrics.evaluation import (ConfusionMatrix, EmptyMatrix, LengthMismatch, RunMeta, UnknownLabel, confusion,
                                evaluate, format_report, macro_f1, report, weighted_f1)

A, B = Label.MISANDRY, Label.MISOGYNY


def definitional_scores(gold, pred, labels):
    """Macro and weighted F1 counted straight from the definitions, no matrix"""
    f1s, supports = [], []
    for label in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == label and p == label)
        fp = sum(1 for g, p in zip(gold, pred) if g != label and p == label)
        fn = sum(1 for g, p in zip(gold, pred) if g == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
        supports.append(tp + fn)
    present = [(f1, support) for f1, support in zip(f1s, supports) if support > 0]
    macro = sum(f1 for f1, _ in present) / len(present)
    weighted = sum(f1 * support for f1, support in present) / sum(support for _, support in present)
    return macro, weighted


def test_confusion_counts_gold_rows_and_predicted_columns():
    cm = confusion([A, A, B], [A, B, B], [A, B])
    assert_array_equal(cm.counts, [[1, 1], [0, 1]])
    assert cm.labels == (A, B)
    assert cm.total == 3


def test_two_thirds_example():
    result = evaluate([A, A, B], [A, B, B], [A, B])
    assert result.per_class[A].f1 == pytest.approx(2 / 3)
    assert result.per_class[B].f1 == pytest.approx(2 / 3)
    assert result.macro_f1 == pytest.approx(2 / 3)
    assert result.weighted_f1 == pytest.approx(2 / 3)
    assert result.per_class[A].precision == pytest.approx(1.0)
    assert result.per_class[A].recall == pytest.approx(0.5)


def test_perfect_predictions_over_eight_classes():
    gold = list(ACTIVE_LABELS) * 3
    result = evaluate(gold, gold, ACTIVE_LABELS)
    assert result.macro_f1 == 1.0
    assert result.weighted_f1 == 1.0


def test_never_predicted_class_scores_zero():
    result = evaluate([A, B, B], [B, B, B], [A, B])
    assert result.per_class[A].precision == 0.0
    assert result.per_class[A].recall == 0.0
    assert result.per_class[A].f1 == 0.0
    assert result.per_class[A].support == 1


def test_macro_skips_classes_without_support():
    labels = [A, B, Label.XENOPHOBIA]
    result = evaluate([A, B], [A, B], labels)
    assert result.per_class[Label.XENOPHOBIA].support == 0
    assert result.macro_f1 == 1.0


def test_matches_definitional_oracle_and_sklearn():
    rng = np.random.default_rng(0)
    labels = list(ACTIVE_LABELS)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        gold = [labels[i] for i in rng.integers(0, 8, size=n)]
        pred = [labels[i] for i in rng.integers(0, 8, size=n)]
        result = evaluate(gold, pred, labels)
        macro, weighted = definitional_scores(gold, pred, labels)
        assert abs(result.macro_f1 - macro) <= 1e-9
        assert abs(result.weighted_f1 - weighted) <= 1e-9

        present = sorted({label.value for label in gold})
        gold_values = [label.value for label in gold]
        pred_values = [label.value for label in pred]
        assert result.macro_f1 == pytest.approx(
            f1_score(gold_values, pred_values, labels=present, average="macro", zero_division=0), abs=1e-9)
        assert result.weighted_f1 == pytest.approx(
            f1_score(gold_values, pred_values, labels=present, average="weighted", zero_division=0), abs=1e-9)

        f1s = [scores.f1 for scores in result.per_class.values() if scores.support > 0]
        assert min(f1s) - 1e-12 <= result.macro_f1 <= max(f1s) + 1e-12
        assert min(f1s) - 1e-12 <= result.weighted_f1 <= max(f1s) + 1e-12


def test_scores_ignore_example_order_and_label_order():
    rng = np.random.default_rng(1)
    labels = list(ACTIVE_LABELS)
    gold = [labels[i] for i in rng.integers(0, 8, size=50)]
    pred = [labels[i] for i in rng.integers(0, 8, size=50)]
    base = evaluate(gold, pred, labels)

    order = rng.permutation(50)
    shuffled = evaluate([gold[i] for i in order], [pred[i] for i in order], labels)
    relabelled = evaluate(gold, pred, list(reversed(labels)))
    for other in (shuffled, relabelled):
        assert other.macro_f1 == pytest.approx(base.macro_f1, abs=1e-12)
        assert other.weighted_f1 == pytest.approx(base.weighted_f1, abs=1e-12)
        assert other.per_class == base.per_class


def test_shortcut_functions_agree_with_evaluate():
    gold, pred = [A, A, B, B], [A, B, B, B]
    result = evaluate(gold, pred, [A, B])
    assert macro_f1(gold, pred, [A, B]) == result.macro_f1
    assert weighted_f1(gold, pred, [A, B]) == result.weighted_f1


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([A, B], [A], [A, B])


def test_unknown_label():
    with pytest.raises(UnknownLabel) as info:
        confusion([A, B], [A, Label.TRANSPHOBIC], [A, B])
    assert info.value.label is Label.TRANSPHOBIC


def test_empty_inputs():
    with pytest.raises(EmptyMatrix):
        confusion([], [], [A, B])
    with pytest.raises(EmptyMatrix):
        report(ConfusionMatrix(counts=np.zeros((2, 2), dtype=np.int64), labels=(A, B)))


def test_format_report_lines():
    meta = RunMeta(model="svc", family="ensemble", dataset="tamil", split="test", seed=3)
    text = format_report(evaluate([A, A, B], [A, B, B], [A, B], run_meta=meta))
    lines = text.splitlines()
    assert lines[0] == "model=svc family=ensemble dataset=tamil split=test seed=3"
    assert lines[1] == "macro_f1=0.666667"
    assert lines[2] == "weighted_f1=0.666667"
    assert lines[3] == "class=Misandry precision=1.000000 recall=0.500000 f1=0.666667 support=2"
    assert text.endswith("\n")
