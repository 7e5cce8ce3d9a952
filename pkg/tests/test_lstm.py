import pytest
import torch
from numpy.testing import assert_allclose
from torch import nn

from corpus.dataset import Corpus
from corpus.labels import Label
from corpus.synthetic import synthesize_corpus
from encoder.vocab import build_vocab
from neural.checkpoints import CheckpointStore
from neural.lstm import (EmptyDev, LstmClassifier, LstmSpec, LstmTraining, TrainedLstm, VocabMismatch, encode_texts,
                         load_lstm, predict_lstm, predict_proba_lstm, save_lstm, train_lstm, trainable_parameters)
from neural.trainer import dev_score
from rebalance.sampler import ClassWeights

FOUR = [Label.HOPE_SPEECH, Label.MISANDRY, Label.MISOGYNY, Label.NONE_OF_THE_ABOVE]


def four_class_corpus(n, seed):
    return synthesize_corpus(n, {label: 0.25 for label in FOUR}, vocab_size=16, seed=seed)


def small_spec(vocab, **overrides):
    settings = dict(vocab_size=len(vocab), num_classes=4, embed_dim=16, hidden_dim=16, max_len=8)
    settings.update(overrides)
    return LstmSpec(**settings)


def test_defaults_follow_the_baseline_architecture():
    spec = LstmSpec(vocab_size=1000, num_classes=8)
    assert (spec.embed_dim, spec.spatial_dropout, spec.lstm_layers, spec.hidden_dim) == (100, 0.2, 1, 64)


def test_parameter_count_matches_closed_form():
    model = LstmClassifier(LstmSpec(vocab_size=1000, num_classes=8, embed_dim=100, hidden_dim=64))
    expected = (1002 * 100) + 4 * (64 * (100 + 64) + 64) + (64 * 8 + 8)
    assert trainable_parameters(model) == expected


def test_softmax_rows_sum_to_one():
    spec = LstmSpec(vocab_size=50, num_classes=8, max_len=64)
    model = LstmClassifier(spec).eval()
    ids = torch.randint(0, 52, (5, 64))
    ids[:, 0] = 2
    probabilities = model.predict_proba(ids)
    assert probabilities.shape == (5, 8)
    assert_allclose(probabilities.sum(dim=-1).detach().numpy(), 1.0, atol=1e-5)


def test_spatial_dropout_drops_whole_channels():
    model = LstmClassifier(LstmSpec(vocab_size=10, num_classes=2, embed_dim=32, spatial_dropout=0.5)).train()
    torch.manual_seed(0)
    dropped = model.spatial_dropout(torch.ones(4, 32, 12))
    for row in dropped.reshape(-1, 12):
        assert torch.all(row == row[0])
    assert set(dropped.unique().tolist()) <= {0.0, 2.0}


def test_vocabulary_is_capped_at_64000():
    texts = [" ".join(f"w{i}" for i in range(start, start + 1000)) for start in range(0, 70000, 1000)]
    corpus = Corpus.from_pairs([(text, Label.MISANDRY) for text in texts])
    assert len(build_vocab(corpus, 64000)) == 64000
    with pytest.raises(ValueError):
        LstmSpec(vocab_size=64001, num_classes=2)


def test_vocab_larger_than_model_is_rejected():
    corpus = four_class_corpus(16, 0)
    vocab = build_vocab(corpus, 100)
    with pytest.raises(VocabMismatch):
        train_lstm(corpus, vocab, small_spec(vocab, vocab_size=len(vocab) - 1), corpus)


def test_empty_dev_is_rejected():
    corpus = four_class_corpus(16, 0)
    vocab = build_vocab(corpus, 100)
    with pytest.raises(EmptyDev):
        train_lstm(corpus, vocab, small_spec(vocab), Corpus.from_pairs([]))


@pytest.mark.slow
def test_overfits_one_batch_and_returns_the_best_epoch():
    corpus = four_class_corpus(16, 3)
    vocab = build_vocab(corpus, 100)
    training = LstmTraining(max_epochs=200, patience=50, learning_rate=1e-2, batch_size=16, device="cpu")
    trained, history = train_lstm(corpus, vocab, small_spec(vocab, hidden_dim=32), corpus, seed=0,
                                  training=training)

    assert min(history.train_losses) <= 0.5 * history.train_losses[0]
    assert history.best_metric() == 1.0
    predicted = predict_lstm(trained, corpus.texts)
    assert predicted == corpus.labels
    assert dev_score(corpus.labels, predicted, trained.label_index, "macro_f1") == history.best_metric()


@pytest.mark.slow
def test_training_is_deterministic_under_seed():
    train = four_class_corpus(32, 1)
    dev = four_class_corpus(16, 2)
    vocab = build_vocab(train, 100)
    training = LstmTraining(max_epochs=3, batch_size=8, device="cpu")
    first, first_history = train_lstm(train, vocab, small_spec(vocab), dev, seed=5, training=training)
    second, second_history = train_lstm(train, vocab, small_spec(vocab), dev, seed=5, training=training)
    assert first_history.train_losses == second_history.train_losses
    assert predict_lstm(first, dev.texts) == predict_lstm(second, dev.texts)


def test_gradient_of_output_layer_matches_finite_differences():
    torch.manual_seed(0)
    spec = LstmSpec(vocab_size=20, num_classes=3, embed_dim=6, hidden_dim=5, max_len=4)
    model = LstmClassifier(spec).double().eval()
    ids = torch.tensor([[2, 5, 7, 0], [3, 3, 0, 0], [9, 11, 13, 21], [1, 4, 0, 0]])
    targets = torch.tensor([0, 2, 1, 2])
    loss_fn = nn.CrossEntropyLoss()

    def loss():
        return loss_fn(model(ids), targets)

    model.zero_grad()
    loss().backward()
    eps = 1e-6
    for parameter in (model.linear.weight, model.linear.bias):
        analytic = parameter.grad.detach().clone()
        numeric = torch.zeros_like(parameter)
        flat = parameter.data.view(-1)
        for i in range(flat.numel()):
            original = flat[i].item()
            with torch.no_grad():
                flat[i] = original + eps
                upper = loss().item()
                flat[i] = original - eps
                lower = loss().item()
                flat[i] = original
            numeric.view(-1)[i] = (upper - lower) / (2 * eps)
        relative = torch.linalg.norm(analytic - numeric) / torch.linalg.norm(analytic)
        assert relative.item() <= 1e-3


def test_hidden_to_hidden_bias_is_frozen_at_zero():
    model = LstmClassifier(LstmSpec(vocab_size=10, num_classes=2))
    assert not model.lstm.bias_hh_l0.requires_grad
    assert torch.count_nonzero(model.lstm.bias_hh_l0) == 0


def test_encode_texts_lengths():
    corpus = four_class_corpus(8, 0)
    vocab = build_vocab(corpus, 100)
    ids, lengths = encode_texts(["", corpus.texts[0]], vocab, 8)
    assert ids.shape == (2, 8)
    assert lengths.tolist() == [0, min(8, len(corpus.texts[0].split()))]


@pytest.mark.slow
def test_save_load_and_checkpoints(tmp_path):
    train = four_class_corpus(32, 1)
    dev = four_class_corpus(16, 2)
    vocab = build_vocab(train, 100)
    weights = ClassWeights({label: 1.0 + i for i, label in enumerate(FOUR)})
    store = CheckpointStore(tmp_path / "checkpoints", "rnn-test")
    training = LstmTraining(max_epochs=3, batch_size=8, class_weights=weights, device="cpu")
    trained, history = train_lstm(train, vocab, small_spec(vocab), dev, seed=0, training=training,
                                  checkpoints=store)

    assert store.saved_epochs() == list(range(1, len(history) + 1))
    assert store.read_best()[0] == history.best_epoch()
    assert (store.best_dir() / "model.pt").is_file()

    loaded = load_lstm(save_lstm(trained, tmp_path / "model"), device="cpu")
    assert loaded.label_index == trained.label_index
    assert loaded.vocab == trained.vocab
    assert predict_lstm(loaded, dev.texts) == predict_lstm(trained, dev.texts)
    assert_allclose(predict_proba_lstm(loaded, dev.texts), predict_proba_lstm(trained, dev.texts), atol=1e-6)


def test_prediction_on_no_texts():
    corpus = four_class_corpus(8, 0)
    vocab = build_vocab(corpus, 100)
    spec = small_spec(vocab)
    trained = TrainedLstm(model=LstmClassifier(spec).eval(), vocab=vocab, label_index=list(FOUR))
    assert predict_lstm(trained, []) == []
    assert predict_proba_lstm(trained, []).shape == (0, 4)
