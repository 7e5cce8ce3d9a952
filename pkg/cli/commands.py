import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd

from cli.artifacts import (GRID_SEARCH_FILE, HEAD_FILE, HISTORY_FILE, MANIFEST_FILE, MODEL_DIR, PREPARE_FILE,
                           FingerprintMismatch, RunError, RunPaths, head_backend, load_predictor, manifest_labels,
                           read_json, read_manifest, write_json)
from config.run_config import RunConfig, config_hash
from config.settings import DEVICE
from corpus.dataset import (Corpus, DistributionStats, LanguageTag, MalformedRow, combine_corpora,
                            filter_active, label_distribution, load_tsv, write_tsv)
from corpus.labels import TAXONOMY, Label, parse_label, sort_labels
from encoder.embeddings import encode_cached
from heads.classifier import DEFAULT_GRIDS, HeadKind, HeadSpec, fit_head, save_head
from heads.grid_search import GridSearchSpec, grid_search
from metrics.evaluation import EvalReport, RunMeta, evaluate, format_report
from metrics.results_grid import results_grid
from preprocess.cleaner import (CleaningConfig, InvalidCleaningConfig, clean_corpus, clean_texts,
                                normalize_whitespace)
from preprocess.resources import cleaning_enabled, default_cleaning_config
from rebalance.sampler import RebalancePlan, Strategy, class_weights, rebalance_corpus
from rebalance.smote import smote
from utils.errors import ConfigError, PipelineError

"""
The four batch commands. Each takes a validated RunConfig and is safe to
re-run: unchanged config and inputs give byte-identical primary outputs.
"""

logger = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")

# torch and transformers report device, shape and I/O failures with these
RUN_ERRORS = (PipelineError, ValueError, RuntimeError, OSError, AssertionError)


def _banner(title: str) -> None:
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80 + "\n")


def expected_cleaning(config: RunConfig) -> bool:
    return cleaning_enabled(config.family, config.encoder.id, config.cleaning.families)


def build_cleaning_config(config: RunConfig) -> CleaningConfig:
    section = config.cleaning
    try:
        return default_cleaning_config(section.stopwords_path, section.emoji_map_path, **section.flags())
    except InvalidCleaningConfig as e:
        raise ConfigError("cleaning", str(e)) from e
    except OSError as e:
        raise ConfigError("cleaning", f"cannot read cleaning resources: {str(e)}") from e


def _load_split(config: RunConfig, split: str) -> Optional[Corpus]:
    sources = config.dataset.split_paths(split)
    if not sources:
        return None
    if len(sources) == 1:
        return load_tsv(sources[0], split, config.dataset.tag)
    return combine_corpora([load_tsv(path, split, LanguageTag.COMBINED) for path in sources])


def _distribution_record(stats: DistributionStats) -> Dict[str, Any]:
    return {
        "total": stats.total,
        "counts": {label.value: stats.counts[label] for label in TAXONOMY},
        "fractions": {label.value: round(stats.fractions[label], 6) for label in TAXONOMY},
    }


def cmd_prepare(config: RunConfig) -> Dict[str, DistributionStats]:
    """Clean every configured split per the model family and write it with a distribution report"""
    paths = RunPaths.for_config(config)
    cleaned = expected_cleaning(config)
    cleaning = build_cleaning_config(config) if cleaned else CleaningConfig.disabled()
    logger.info(f"Preparing {config.dataset.tag} for {config.family} models (cleaning {'on' if cleaned else 'off'})")

    report: Dict[str, DistributionStats] = {}
    record: Dict[str, Any] = {"config_hash": config_hash(config), "family": config.family,
                              "dataset": config.dataset.tag, "cleaned": cleaned, "splits": {}}
    for split in SPLITS:
        corpus = _load_split(config, split)
        if corpus is None:
            continue
        prepared = clean_corpus(corpus, cleaning)
        write_tsv(prepared, paths.prepared_split(split))
        report[split] = label_distribution(prepared)
        record["splits"][split] = _distribution_record(report[split])

    write_json(paths.prepared_dir / PREPARE_FILE, record)

    _banner("PREPARED DATASET")
    for split, stats in report.items():
        print(f"✓ {split}: {stats.total} rows -> {paths.prepared_split(split)}")
        for label, count in stats.nonzero().items():
            print(f"    {label.value:<20} {count:>6}  {stats.fractions[label]:.4f}")
    return report


def load_prepared(config: RunConfig, split: str) -> Corpus:
    """A prepared split, restricted to the active labels"""
    paths = RunPaths.for_config(config)
    record_path = paths.prepared_dir / PREPARE_FILE
    if not record_path.is_file() or not paths.prepared_split(split).is_file():
        raise PipelineError(f"No prepared {split} split under {paths.prepared_dir}; run prepare first")
    record = read_json(record_path)
    if record["cleaned"] != expected_cleaning(config):
        raise FingerprintMismatch("prepared cleaning", record["cleaned"], expected_cleaning(config))
    return filter_active(load_tsv(paths.prepared_split(split), split, config.dataset.tag))


def _rebalance_plan(config: RunConfig) -> RebalancePlan:
    section = config.rebalance
    try:
        target = {parse_label(name): value for name, value in section.target.items()} if section.target else None
    except ValueError as e:
        raise ConfigError("rebalance.target", str(e)) from e
    try:
        return RebalancePlan(strategy=Strategy(section.strategy), target=target, seed=section.seed,
                             smote_k=section.smote_k)
    except (PipelineError, ValueError) as e:
        raise ConfigError("rebalance", str(e)) from e


def _train_head(config: RunConfig, paths: RunPaths, train: Corpus) -> Dict[str, Any]:
    section = config.model.head
    plan = _rebalance_plan(config)
    train = rebalance_corpus(train, plan)
    backend = head_backend(config)
    embeddings = encode_cached(train.texts, backend, config.encoder.cache_dir)
    labels = train.labels
    if plan.strategy is Strategy.SMOTE:
        embeddings, labels = smote(embeddings, labels, plan)
    weights = class_weights(train) if plan.strategy is Strategy.CLASS_WEIGHTS else None

    kind = HeadKind(section.kind)
    spec = HeadSpec(kind=kind, class_weights=weights)
    gs = GridSearchSpec(grid=section.grid or DEFAULT_GRIDS[kind], folds=section.folds, seed=config.seed,
                        n_jobs=section.n_jobs)
    search = grid_search(embeddings, labels, spec, gs)
    head = fit_head(embeddings, labels, spec.with_params(search.best_params), seed=config.seed)

    save_head(head, paths.run_dir / HEAD_FILE, extra={"config_hash": config_hash(config)})
    write_json(paths.run_dir / GRID_SEARCH_FILE, search.to_record())
    return {
        "artifact": HEAD_FILE,
        "encoder": backend.fingerprint(),
        "label_index": [label.value for label in head.label_index],
        "train_fingerprint": head.train_fingerprint,
        "best_params": search.best_params,
        "best_score": search.best_score,
    }


def _train_lstm(config: RunConfig, paths: RunPaths, train: Corpus, dev: Corpus) -> Dict[str, Any]:
    from encoder.vocab import build_vocab
    from neural.checkpoints import CheckpointStore
    from neural.lstm import LstmSpec, LstmTraining, save_lstm, train_lstm

    section = config.model.lstm
    plan = _rebalance_plan(config)
    train = rebalance_corpus(train, plan)
    weights = class_weights(train) if plan.strategy is Strategy.CLASS_WEIGHTS else None
    label_index = sort_labels(train.labels)
    vocab = build_vocab(train, section.max_vocab)
    spec = LstmSpec(vocab_size=len(vocab), num_classes=len(label_index), embed_dim=section.embed_dim,
                    spatial_dropout=section.spatial_dropout, lstm_layers=section.lstm_layers,
                    hidden_dim=section.hidden_dim, max_len=section.max_len)
    training = LstmTraining(max_epochs=section.max_epochs, patience=section.patience,
                            learning_rate=section.learning_rate, batch_size=section.batch_size,
                            monitor=section.monitor, class_weights=weights, device=DEVICE)
    store = CheckpointStore(paths.checkpoints_root, paths.run_id)
    store.reset()

    trained, history = train_lstm(train, vocab, spec, dev, seed=config.seed, training=training,
                                  label_index=label_index, checkpoints=store)
    save_lstm(trained, paths.run_dir / MODEL_DIR)
    history.save(paths.run_dir / HISTORY_FILE)
    return {
        "artifact": MODEL_DIR,
        "label_index": [label.value for label in label_index],
        "vocab_size": len(vocab),
        "epochs": len(history),
        "best_epoch": history.best_epoch(),
        "best_dev_metric": history.best_metric(),
    }


def _train_finetune(config: RunConfig, paths: RunPaths, train: Corpus, dev: Corpus) -> Dict[str, Any]:
    from neural.checkpoints import CheckpointStore
    from neural.finetune import FinetuneSpec, finetune, save_finetuned

    section = config.model.finetune
    plan = _rebalance_plan(config)
    train = rebalance_corpus(train, plan)
    weights = class_weights(train) if plan.strategy is Strategy.CLASS_WEIGHTS else None
    label_index = sort_labels(train.labels)
    spec = FinetuneSpec(
        encoder_id=str(config.encoder.path) if config.encoder.path else config.encoder.id,
        num_classes=len(label_index), max_epochs=section.max_epochs, patience=section.patience,
        monitor=section.monitor, learning_rate=section.learning_rate, batch_size=section.batch_size,
        seed=config.seed, max_length=section.max_length, weight_decay=section.weight_decay,
        class_weights=weights, device=DEVICE,
    )
    store = CheckpointStore(paths.checkpoints_root, paths.run_id)
    store.reset()

    trained, history = finetune(train, dev, spec, label_index=label_index, checkpoints=store)
    save_finetuned(trained, paths.run_dir / MODEL_DIR)
    history.save(paths.run_dir / HISTORY_FILE)
    return {
        "artifact": MODEL_DIR,
        "label_index": [label.value for label in label_index],
        "epochs": len(history),
        "best_epoch": history.best_epoch(),
        "best_dev_metric": history.best_metric(),
    }


def cmd_train(config: RunConfig) -> Dict[str, Any]:
    """Train the configured model on the prepared splits and write its run manifest"""
    paths = RunPaths.for_config(config)
    started = time.time()
    try:
        train = load_prepared(config, "train")
        dev = load_prepared(config, "dev") if config.dataset.dev is not None else None
        loaded = time.time()

        logger.info(f"Training {config.model_name} ({config.family}) as run {paths.run_id}")
        if config.model.kind == "head":
            details = _train_head(config, paths, train)
        elif config.model.kind == "lstm":
            details = _train_lstm(config, paths, train, dev)
        else:
            details = _train_finetune(config, paths, train, dev)
    except (ConfigError, FingerprintMismatch):
        raise
    except RUN_ERRORS as e:
        raise RunError("train", paths.run_id, e) from e
    finished = time.time()

    manifest = {
        "run_id": paths.run_id,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "family": config.family,
        "model": config.model_name,
        "dataset": config.dataset.tag,
        "cleaned": expected_cleaning(config),
        "rebalance": config.rebalance.strategy,
        "train_rows": len(train),
        **details,
        "durations": {"load": round(loaded - started, 3), "train": round(finished - loaded, 3),
                      "total": round(finished - started, 3)},
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    write_json(paths.run_dir / MANIFEST_FILE, manifest)

    _banner("TRAINING COMPLETE")
    print(f"✓ Run {paths.run_id}: {config.model_name} ({config.family}) on {config.dataset.tag}")
    print(f"✓ Artifact: {paths.run_dir / details['artifact']}")
    if "best_params" in details:
        print(f"✓ Best grid point {details['best_params']} (weighted F1 {details['best_score']:.4f})")
    else:
        print(f"✓ Best epoch {details['best_epoch']} of {details['epochs']} (dev {details['best_dev_metric']:.4f})")
    return manifest


def _grid_reports(csv_path: Path) -> List[EvalReport]:
    if not csv_path.is_file():
        return []
    rows = pd.read_csv(csv_path, dtype={"family": str, "model": str, "dataset": str})
    return [
        EvalReport(per_class={}, macro_f1=float(row.macro_f1), weighted_f1=float(row.weighted_f1),
                   run_meta=RunMeta(model=row.model, family=row.family, dataset=row.dataset))
        for row in rows.itertuples(index=False)
    ]


def update_results_grid(paths: RunPaths, result: EvalReport) -> None:
    """Re-render the output directory's grid with this report replacing any earlier one for the same row"""
    grid = results_grid(_grid_reports(paths.grid_csv) + [result])
    grid.write(paths.grid_text, paths.grid_csv)


def _resolve_artifact(config: RunConfig, artifact: Optional[Union[str, Path]]) -> Tuple[RunPaths, Path]:
    paths = RunPaths.for_config(config)
    return paths, Path(artifact) if artifact else paths.run_dir


def cmd_evaluate(config: RunConfig, artifact: Optional[Union[str, Path]] = None, split: str = "test") -> EvalReport:
    """Score a trained run on a prepared split and record it in the results grid"""
    paths, artifact = _resolve_artifact(config, artifact)
    if split not in SPLITS:
        raise ConfigError("split", f"expected one of {', '.join(SPLITS)}, got {split!r}")
    manifest = read_manifest(artifact)
    cleaned = expected_cleaning(config)
    try:
        corpus = load_prepared(config, split)
        predictor = load_predictor(artifact, config, cleaned)
        predicted = predictor(corpus.texts)
        labels = sort_labels(manifest_labels(manifest) + corpus.labels + predicted)
        meta = RunMeta(model=config.model_name, family=config.family, dataset=config.dataset.tag,
                       split=split, seed=config.seed)
        result = evaluate(corpus.labels, predicted, labels, meta)
    except (ConfigError, FingerprintMismatch):
        raise
    except RUN_ERRORS as e:
        raise RunError("evaluate", manifest.get("run_id", str(artifact)), e) from e

    report_path = artifact / "reports" / f"{split}.txt"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(f"config_hash={config_hash(config)}\n" + format_report(result), encoding="utf-8")
    update_results_grid(paths, result)

    _banner(f"EVALUATION: {config.model_name} on {config.dataset.tag} {split}")
    print(f"✓ macro F1    {result.macro_f1:.4f}")
    print(f"✓ weighted F1 {result.weighted_f1:.4f}")
    print(f"✓ Report: {report_path}")
    print(f"✓ Grid:   {paths.grid_text}")
    return result


def _read_unlabeled(path: Path) -> List[str]:
    if not path.is_file():
        raise PipelineError(f"No input file {path}")
    texts = []
    with path.open("r", encoding="utf-8", newline="") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            text = line.split("\t")[0]
            if not text.strip():
                raise MalformedRow(line_number, "empty comment text")
            texts.append(text)
    return texts


def cmd_predict(config: RunConfig, input_path: Union[str, Path], output_path: Union[str, Path],
                artifact: Optional[Union[str, Path]] = None) -> List[Label]:
    """
    Label every text of an unlabeled file; output rows follow input order.
    Blank input lines are skipped, so the output has one row per non-blank line.
    """
    paths, artifact = _resolve_artifact(config, artifact)
    cleaned = expected_cleaning(config)
    try:
        texts = _read_unlabeled(Path(input_path))
        model_texts = clean_texts(texts, build_cleaning_config(config)) if cleaned else \
            [normalize_whitespace(text) for text in texts]
        predicted = load_predictor(artifact, config, cleaned)(model_texts) if texts else []
    except (ConfigError, FingerprintMismatch):
        raise
    except RUN_ERRORS as e:
        raise RunError("predict", paths.run_id, e) from e

    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with output_path.open("w", encoding="utf-8", newline="") as handle:
        for text, label in zip(texts, predicted):
            handle.write(f"{text}\t{label.value}\n")

    _banner("PREDICTIONS WRITTEN")
    print(f"✓ {len(predicted)} rows -> {output_path}")
    return predicted
