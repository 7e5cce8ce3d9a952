import random

import pytest

from config.settings import SPLIT_SIZES
from corpus.dataset import (Corpus, EmptyCorpus, LanguageTag, MalformedRow, MissingFile, Split, UnknownLabel,
                            combine_corpora, filter_active, label_distribution, load_tsv, reference_distribution,
                            write_tsv)
from corpus.labels import ACTIVE_LABELS, TAXONOMY, Label, parse_label, render_label, try_parse_label
from corpus.rounding import largest_remainder
from corpus.synthetic import BadFractions, TooSmall, synthesize_corpus


def write_rows(path, rows):
    path.write_text("".join(f"{row}\n" for row in rows), encoding="utf-8")
    return path


def test_taxonomy_has_nine_labels_and_eight_active():
    assert len(TAXONOMY) == 9
    assert len(ACTIVE_LABELS) == 8
    assert Label.NOT_TAMIL not in ACTIVE_LABELS


@pytest.mark.parametrize("label", list(Label))
def test_labels_round_trip(label):
    assert parse_label(render_label(label)) is label


@pytest.mark.parametrize("token, expected", [
    ("misandry", Label.MISANDRY),
    ("HOPE SPEECH", Label.HOPE_SPEECH),
    ("counter_speech", Label.COUNTER_SPEECH),
    ("None-of-these", Label.NONE_OF_THE_ABOVE),
    ("none_of_the_above", Label.NONE_OF_THE_ABOVE),
    ("  Not-Tamil ", Label.NOT_TAMIL),
])
def test_label_parsing_is_lenient(token, expected):
    assert parse_label(token) is expected


def test_unknown_label_token():
    assert try_parse_label("spam") is None
    with pytest.raises(ValueError):
        parse_label("spam")


def test_load_tsv_parses_rows(tmp_path):
    path = write_rows(tmp_path / "a.tsv", ["hello\tMisandry", "hi\tHope-Speech"])
    corpus = load_tsv(path, "train", "tamil")
    assert corpus.texts == ["hello", "hi"]
    assert corpus.labels == [Label.MISANDRY, Label.HOPE_SPEECH]
    assert [example.id for example in corpus] == [0, 1]
    assert corpus.split is Split.TRAIN
    assert corpus.language_tag is LanguageTag.TAMIL


def test_load_tsv_without_tab_is_malformed(tmp_path):
    path = write_rows(tmp_path / "a.tsv", ["text only, no tab"])
    with pytest.raises(MalformedRow) as info:
        load_tsv(path, "train", "tamil")
    assert info.value.line == 1


def test_load_tsv_reports_unknown_label_line(tmp_path):
    path = write_rows(tmp_path / "a.tsv", ["a\tMisogyny", "b\tMisogyny", "c\tspam"])
    with pytest.raises(UnknownLabel) as info:
        load_tsv(path, "dev", "codemix")
    assert info.value.line == 3
    assert info.value.token == "spam"


def test_load_tsv_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_tsv(tmp_path / "absent.tsv", "train", "tamil")


def test_header_row_is_detected_and_reported(tmp_path):
    path = write_rows(tmp_path / "a.tsv", ["text\tlabel", "a\tMisogyny"])
    corpus = load_tsv(path, "train", "tamil")
    assert len(corpus) == 1
    assert corpus.diagnostics.header_skipped
    assert corpus.diagnostics.header_line == "text\tlabel"


def test_extra_columns_and_blank_lines_are_counted(tmp_path):
    path = write_rows(tmp_path / "a.tsv", ["a\tMisogyny\textra", "", "b\tXenophobia"])
    corpus = load_tsv(path, "train", "tamil")
    assert corpus.labels == [Label.MISOGYNY, Label.XENOPHOBIA]
    assert corpus.diagnostics.extra_column_rows == 1
    assert corpus.diagnostics.blank_lines == 1


def test_empty_text_is_malformed(tmp_path):
    path = write_rows(tmp_path / "a.tsv", ["a\tMisogyny", "   \tMisogyny"])
    with pytest.raises(MalformedRow) as info:
        load_tsv(path, "train", "tamil")
    assert info.value.line == 2


def test_tamil_train_sized_file(tmp_path):
    size = SPLIT_SIZES["tamil"]["train"]
    labels = list(ACTIVE_LABELS)
    path = write_rows(tmp_path / "train.tsv", [f"comment {i}\t{labels[i % 8].value}" for i in range(size)])
    assert len(load_tsv(path, "train", "tamil")) == 2240


def test_write_then_load_round_trip(tmp_path):
    corpus = synthesize_corpus(60, {Label.MISANDRY: 0.5, Label.HOMOPHOBIA: 0.5}, vocab_size=10, seed=3)
    reloaded = load_tsv(write_tsv(corpus, tmp_path / "c.tsv"), corpus.split, corpus.language_tag)
    assert reloaded == corpus


def test_distribution_of_two_balanced_labels():
    corpus = Corpus.from_pairs([("a", Label.MISANDRY), ("b", Label.MISANDRY),
                                ("c", Label.MISOGYNY), ("d", Label.MISOGYNY)])
    stats = label_distribution(corpus)
    assert stats.fractions[Label.MISANDRY] == 0.5
    assert stats.fractions[Label.MISOGYNY] == 0.5
    assert stats.nonzero() == {Label.MISANDRY: 2, Label.MISOGYNY: 2}


def test_distribution_of_single_example():
    stats = label_distribution(Corpus.from_pairs([("a", Label.MISANDRY)]))
    assert stats.fractions[Label.MISANDRY] == 1.0
    assert sum(stats.fractions.values()) == pytest.approx(1.0, abs=1e-9)
    assert all(stats.counts[label] == 0 for label in TAXONOMY if label is not Label.MISANDRY)


def test_distribution_of_empty_corpus():
    with pytest.raises(EmptyCorpus):
        label_distribution(Corpus.from_pairs([]))


def test_distribution_ignores_row_order(tmp_path):
    rows = [f"t{i}\t{ACTIVE_LABELS[i % 3].value}" for i in range(30)]
    shuffled = list(rows)
    random.Random(4).shuffle(shuffled)
    first = load_tsv(write_rows(tmp_path / "a.tsv", rows), "train", "tamil")
    second = load_tsv(write_rows(tmp_path / "b.tsv", shuffled), "train", "tamil")
    assert label_distribution(first) == label_distribution(second)


def test_tamil_reference_distribution_matches_published_table():
    fractions = reference_distribution("tamil")
    assert set(fractions) == set(ACTIVE_LABELS)
    assert sum(fractions.values()) == pytest.approx(1.0, abs=1e-9)
    assert fractions[Label.MISANDRY] == pytest.approx(0.1934, abs=1e-3)
    assert fractions[Label.NONE_OF_THE_ABOVE] == pytest.approx(0.59, abs=1e-3)
    assert fractions[Label.TRANSPHOBIC] == pytest.approx(0.002, abs=1e-4)


def test_largest_remainder_gives_first_label_the_leftover():
    third = 1 / 3
    counts = largest_remainder(10, {Label.HOPE_SPEECH: third, Label.MISANDRY: third, Label.MISOGYNY: third})
    assert counts == {Label.HOPE_SPEECH: 4, Label.MISANDRY: 3, Label.MISOGYNY: 3}


def test_largest_remainder_sums_to_n():
    rng = random.Random(11)
    for _ in range(200):
        labels = rng.sample(list(ACTIVE_LABELS), rng.randint(1, 8))
        weights = [rng.random() + 1e-3 for _ in labels]
        fractions = {label: w / sum(weights) for label, w in zip(labels, weights)}
        n = rng.randint(0, 500)
        counts = largest_remainder(n, fractions)
        assert sum(counts.values()) == n
        for label in labels:
            assert abs(counts[label] - n * fractions[label]) < 1.0


def test_synthesize_is_deterministic_and_exact():
    fractions = {Label.MISANDRY: 0.5, Label.MISOGYNY: 0.5}
    first = synthesize_corpus(100, fractions, vocab_size=20, seed=7)
    second = synthesize_corpus(100, fractions, vocab_size=20, seed=7)
    assert first == second
    counts = label_distribution(first).counts
    assert counts[Label.MISANDRY] == 50
    assert counts[Label.MISOGYNY] == 50


def test_synthesize_tamil_shape_within_one_per_class():
    fractions = reference_distribution("tamil")
    corpus = synthesize_corpus(1000, fractions, vocab_size=64, seed=1)
    stats = label_distribution(corpus)
    for label, fraction in fractions.items():
        assert abs(stats.counts[label] - 1000 * fraction) <= 1
        assert abs(stats.fractions[label] - fraction) <= 1 / 1000


def test_synthesize_single_class():
    corpus = synthesize_corpus(3, {Label.XENOPHOBIA: 1.0}, vocab_size=5, seed=0)
    assert corpus.labels == [Label.XENOPHOBIA] * 3


def test_synthetic_classes_use_disjoint_tokens():
    corpus = synthesize_corpus(200, reference_distribution("codemix"), vocab_size=64, seed=2)
    owners = {}
    for example in corpus:
        for token in example.text.split():
            assert owners.setdefault(token, example.label) is example.label


@pytest.mark.parametrize("fractions", [
    {Label.MISANDRY: 0.6, Label.MISOGYNY: 0.6},
    {Label.NOT_TAMIL: 1.0},
    {Label.MISANDRY: 1.2, Label.MISOGYNY: -0.2},
])
def test_synthesize_rejects_bad_fractions(fractions):
    with pytest.raises(BadFractions):
        synthesize_corpus(10, fractions, vocab_size=4, seed=0)


def test_synthesize_too_small():
    uniform = {label: 1 / 8 for label in ACTIVE_LABELS}
    with pytest.raises(TooSmall):
        synthesize_corpus(2, uniform, vocab_size=16, seed=0)


def test_filter_active_drops_not_tamil_and_keeps_ids():
    corpus = Corpus.from_pairs([("a", Label.MISANDRY), ("b", Label.NOT_TAMIL), ("c", Label.MISOGYNY)])
    filtered = filter_active(corpus)
    assert filtered.labels == [Label.MISANDRY, Label.MISOGYNY]
    assert [example.id for example in filtered] == [0, 2]


def test_combine_corpora_renumbers_and_tags():
    tamil = Corpus.from_pairs([("a", Label.MISANDRY)], language_tag=LanguageTag.TAMIL)
    codemix = Corpus.from_pairs([("b", Label.MISOGYNY), ("c", Label.HOMOPHOBIA)], language_tag=LanguageTag.CODEMIX)
    combined = combine_corpora([tamil, codemix])
    assert combined.texts == ["a", "b", "c"]
    assert [example.id for example in combined] == [0, 1, 2]
    assert combined.language_tag is LanguageTag.COMBINED
