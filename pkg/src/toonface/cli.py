"""Command line front end wiring the toolkit end to end.

Every subcommand reads its inputs, writes all artifacts into a run
directory together with the fully resolved configuration, and never
touches its input files. Exit codes: 0 success, 1 input or validation
failure, 2 bad arguments, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

import numpy as np

from .data import (
    DataError,
    GENDERS,
    Sample,
    balance_classes,
    balance_gender,
    empty_landmarks,
    load_boxes,
    load_feature_vectors,
    load_image,
    load_landmark_table,
    normalize_image,
    save_landmark_table,
    stratified_split,
    validate_annotations,
    write_pgm,
)
from .metrics import (
    accuracy,
    confusion_matrix,
    detection_rates,
    format_report,
    landmark_rmse,
    load_ranked_predictions,
    macro_prf,
    save_ranked_predictions,
    save_results,
    topk_error,
)
from .models import (
    ClassifierData,
    Hcnn,
    HcnnConfig,
    LandmarkNet,
    LandmarkNetConfig,
    TrainingError,
    build_and_train_landmark_net,
    landmark_features,
    load_model,
    ranked_predictions,
    save_model,
    train_hcnn,
)
from .shallow import (
    GbModel,
    GbParams,
    MinMaxScaler,
    SvmModel,
    SvmParams,
    gb_train,
    grid_search_cv,
    svm_train,
)

RUN_ROOT_VAR = "TOONFACE_RUN_ROOT"
LABEL_HEADER = "image_id,class_label,gender_label"
LOCK_NAME = ".lock"

# Resolution order: defaults < config file < --set pairs < dedicated
# flags. Values stay strings until a typed getter touches them, so the
# config echo never reformats anything.
DEFAULTS = {
    "seed": "0",
    "task": "character",
    "validate.k": "3.0",
    "balance.class_min": "600",
    "balance.class_max": "800",
    "balance.gender": "false",
    "split.key": "class",
    "hcnn.filters": "32,64,128,256",
    "hcnn.fc_widths": "512,256",
    "hcnn.main_widths": "512,128",
    "hcnn.dropout": "0.5",
    "hcnn.aux_discount": "0.6",
    "hcnn.shortcut": "true",
    "hcnn.batch_norm": "true",
    "hcnn.batch_size": "32",
    "hcnn.max_epochs": "1000",
    "hcnn.adam_lr": "0.001",
    "hcnn.sgd_lr": "0.2",
    "hcnn.early_stop": "0",
    "landmark.filters": "16,32,64",
    "landmark.hidden": "128",
    "landmark.dropout": "0.5",
    "landmark.batch_size": "32",
    "landmark.max_epochs": "100",
    "landmark.lr": "0.001",
    "landmark.early_stop": "0",
    "svm.c": "50.0",
    "svm.gamma": "0.001",
    "svm.probability": "true",
    "svm.tol": "0.001",
    "svm.max_iter": "100000",
    "gb.stages": "100",
    "gb.depth": "3",
    "gb.shrinkage": "0.08",
    "grid.folds": "10",
    "grid.svm.c": "1,10,50,100",
    "grid.svm.gamma": "0.0001,0.001,0.01",
    "grid.gb.stages": "50,100",
    "grid.gb.depth": "2,3",
    "predict.k": "5",
    "eval.k": "5",
    "eval.macro_combined": "false",
    "eval.iou": "0.5",
    "ablate.seeds": "0,1,2,3,4",
    "ablate.batch_size": "15",
    "ablate.max_epochs": "250",
    "ablate.early_stop": "50",
}


class UsageError(Exception):
    """Bad flag or configuration value; maps to exit 2."""


class InputError(Exception):
    """Input file failed validation; maps to exit 1."""


# ---------------------------------------------------------------- config


def parse_config_file(path):
    if not os.path.isfile(path):
        raise UsageError(f"config file not found: {path}")
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise UsageError(f"{path}:{no}: expected `key = value`")
            key = key.strip()
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{no}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def resolve_config(args):
    config = dict(DEFAULTS)
    if getattr(args, "config", None):
        config.update(parse_config_file(args.config))
    for pair in getattr(args, "set", None) or []:
        key, eq, value = pair.partition("=")
        if not eq or key.strip() not in DEFAULTS:
            raise UsageError(f"--set expects KEY=VALUE with a known key, "
                             f"got {pair!r}")
        config[key.strip()] = value.strip()
    if getattr(args, "seed", None) is not None:
        config["seed"] = str(args.seed)
    return config


def cfg_int(config, key, minimum=None):
    try:
        value = int(config[key])
    except ValueError:
        raise UsageError(f"{key} must be an integer, got {config[key]!r}")
    if minimum is not None and value < minimum:
        raise UsageError(f"{key} must be >= {minimum}, got {value}")
    return value


def cfg_float(config, key):
    try:
        return float(config[key])
    except ValueError:
        raise UsageError(f"{key} must be a number, got {config[key]!r}")


def cfg_bool(config, key):
    raw = config[key].lower()
    if raw in ("true", "1", "yes"):
        return True
    if raw in ("false", "0", "no"):
        return False
    raise UsageError(f"{key} must be true or false, got {config[key]!r}")


def cfg_list(config, key, cast):
    raw = [c.strip() for c in config[key].split(",") if c.strip()]
    if not raw:
        raise UsageError(f"{key} must list at least one value")
    try:
        return [cast(c) for c in raw]
    except ValueError:
        raise UsageError(f"{key}: cannot parse {config[key]!r}")


# ------------------------------------------------------------- run dirs


class RunDir:
    """Locked output directory; the resolved config is echoed on entry."""

    def __init__(self, path, config):
        self.path = path
        self.config = config
        self.lock = os.path.join(path, LOCK_NAME)

    def __enter__(self):
        os.makedirs(self.path, exist_ok=True)
        try:
            fd = os.open(self.lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise UsageError(
                f"run directory {self.path} is locked; another run is "
                f"writing there (or delete a stale {LOCK_NAME})")
        os.close(fd)
        with open(self.file("config.txt"), "w", encoding="utf-8") as fh:
            for key in sorted(self.config):
                fh.write(f"{key} = {self.config[key]}\n")
        return self

    def __exit__(self, *exc):
        try:
            os.unlink(self.lock)
        except FileNotFoundError:
            pass
        return False

    def file(self, name):
        return os.path.join(self.path, name)


def run_dir_path(args, subcommand):
    if getattr(args, "out", None):
        return args.out
    root = os.environ.get(RUN_ROOT_VAR, "runs")
    return os.path.join(root, subcommand)


def require_file(path, what):
    if not os.path.isfile(path):
        raise UsageError(f"{what} not found: {path}")
    return path


def require_dir(path, what):
    if not os.path.isdir(path):
        raise UsageError(f"{what} not found: {path}")
    return path


# ------------------------------------------------------------ labels IO


def load_label_table(path):
    """`image_id,class_label,gender_label` rows keyed by image id."""
    order = []
    rows = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != LABEL_HEADER:
            raise InputError(
                f"{path}:1: header must be {LABEL_HEADER!r}, got {header!r}")
        for no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 3:
                raise InputError(f"{path}:{no}: expected 3 columns, "
                                 f"got {len(cells)}")
            image_id, raw_class, gender = (c.strip() for c in cells)
            if not image_id:
                raise InputError(f"{path}:{no}: empty image id")
            if image_id in rows:
                raise InputError(f"{path}:{no}: duplicate image id "
                                 f"{image_id!r}")
            try:
                class_label = int(raw_class)
            except ValueError:
                raise InputError(f"{path}:{no}: class_label must be an "
                                 f"integer, got {raw_class!r}")
            if gender not in GENDERS:
                raise InputError(f"{path}:{no}: gender_label must be one of "
                                 f"{GENDERS}, got {gender!r}")
            order.append(image_id)
            rows[image_id] = (class_label, gender)
    if not order:
        raise InputError(f"{path}: no data rows")
    return order, rows


def save_label_table(path, samples):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(LABEL_HEADER + "\n")
        for s in samples:
            fh.write(f"{s.image_id},{s.class_label},{s.gender_label}\n")


def find_image(images_dir, image_id):
    for ext in (".pgm", ".ppm"):
        path = os.path.join(images_dir, image_id + ext)
        if os.path.isfile(path):
            return path
    raise InputError(f"no .pgm or .ppm for image id {image_id!r} "
                     f"under {images_dir}")


def load_samples(images_dir, table_path, labels_path):
    """Assemble one Sample per labels row; landmark rows are optional."""
    order, rows = load_label_table(labels_path)
    table = load_landmark_table(table_path)
    samples = []
    for image_id in order:
        pixels, _ = normalize_image(load_image(find_image(images_dir,
                                                          image_id)))
        class_label, gender = rows[image_id]
        landmarks = table.get(image_id, empty_landmarks())
        samples.append(Sample(image_id, pixels, class_label, gender,
                              landmarks))
    return samples


def sample_labels(samples, task):
    if task == "gender":
        return [s.gender_label for s in samples]
    return [s.class_label for s in samples]


def read_id_list(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def split_samples(samples, split_dir):
    """Partition by the id lists a `split` run wrote; val is optional."""
    by_id = {s.image_id: s for s in samples}

    def pick(name, required):
        path = os.path.join(split_dir, name)
        if not os.path.isfile(path):
            if required:
                raise UsageError(f"{name} not found under {split_dir}")
            return []
        chosen = []
        for image_id in read_id_list(path):
            if image_id not in by_id:
                raise InputError(f"{path}: unknown image id {image_id!r}")
            chosen.append(by_id[image_id])
        return chosen

    train = pick("train.txt", required=True)
    val = pick("val.txt", required=False)
    if not train:
        raise InputError(f"{split_dir}/train.txt selects no samples")
    return train, val


# -------------------------------------------------------- model helpers


def hcnn_config_from(config, num_classes):
    return HcnnConfig(
        num_classes=num_classes,
        conv_filters=tuple(cfg_list(config, "hcnn.filters", int)),
        fc_widths=tuple(cfg_list(config, "hcnn.fc_widths", int)),
        main_widths=tuple(cfg_list(config, "hcnn.main_widths", int)),
        dropout_rate=cfg_float(config, "hcnn.dropout"),
        aux_discount=cfg_float(config, "hcnn.aux_discount"),
        shortcut=cfg_bool(config, "hcnn.shortcut"),
        batch_norm=cfg_bool(config, "hcnn.batch_norm"),
    )


def classifier_data(samples, task, vocab, means=None):
    pixels = np.stack([s.pixels for s in samples])
    raw = np.stack([s.landmarks for s in samples])
    features, means = landmark_features(raw, means)
    index = {label: i for i, label in enumerate(vocab)}
    labels = np.array([index[label] for label in sample_labels(samples,
                                                               task)])
    return ClassifierData(pixels, features, labels), means


def write_history(path, run, columns):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch," + ",".join(columns) + "\n")
        for epoch in range(run.epochs_run):
            cells = [str(epoch + 1)]
            for column in columns:
                series = getattr(run, column)
                cells.append(repr(float(series[epoch])) if series else "")
            fh.write(",".join(cells) + "\n")


def scaler_path_for(model_path):
    return os.path.join(os.path.dirname(os.path.abspath(model_path)),
                        "scaler.bin")


def ranked_label_rows(model, X, k):
    """Descending-probability (labels, probs) rows for a shallow model."""
    probs = model.predict_proba(X)
    k = min(k, probs.shape[1])
    order = np.argsort(-probs, axis=1, kind="stable")[:, :k]
    classes = np.asarray(model.classes)
    labels = [[classes[j] for j in row] for row in order]
    ranked = np.take_along_axis(probs, order, axis=1)
    return labels, ranked


# ----------------------------------------------------------- subcommands


def cmd_validate_annotations(args, config):
    table = load_landmark_table(require_file(args.table, "landmark table"))
    k = cfg_float(config, "validate.k")
    if k <= 0:
        raise UsageError(f"validate.k must be positive, got {k}")
    report = validate_annotations(table, k=k)
    with RunDir(run_dir_path(args, "validate-annotations"), config) as run:
        with open(run.file("violations.csv"), "w", encoding="utf-8") as fh:
            fh.write("image_id,column,value,reason\n")
            for v in report.violations:
                fh.write(f"{v.image_id},{v.column},{v.value!r},{v.reason}\n")
        flagged = sum(1 for verdict in report.verdicts.values()
                      if not verdict.all())
        summary = {
            "images": len(table),
            "images_flagged": flagged,
            "violations": len(report.violations),
            "k": k,
        }
        with open(run.file("validation.txt"), "w", encoding="utf-8") as fh:
            fh.write(format_report(summary))
            for warning in report.warnings:
                fh.write(f"warning: {warning}\n")
            for v in report.violations:
                fh.write(f"{v.image_id}: {v.column}={v.value!r} fails the "
                         f"{v.reason} check\n")
        save_results(run.file("results.txt"), summary)
    if report.violations:
        print(f"{len(report.violations)} violation(s); see violations.csv",
              file=sys.stderr)
        return 1
    return 0


def cmd_augment(args, config):
    samples = load_samples(require_dir(args.images, "images directory"),
                           require_file(args.table, "landmark table"),
                           require_file(args.labels, "labels table"))
    seed = cfg_int(config, "seed")
    lo = cfg_int(config, "balance.class_min", minimum=1)
    hi = cfg_int(config, "balance.class_max", minimum=1)
    if hi < lo:
        raise UsageError(f"balance.class_max {hi} < balance.class_min {lo}")
    balanced = balance_classes(samples, min_count=lo, max_count=hi,
                               seed=seed)
    if cfg_bool(config, "balance.gender"):
        balanced = balance_gender(balanced, seed=seed)
    with RunDir(run_dir_path(args, "augment"), config) as run:
        images_dir = run.file("images")
        os.makedirs(images_dir, exist_ok=True)
        table = {}
        for s in balanced:
            write_pgm(os.path.join(images_dir, s.image_id + ".pgm"),
                      s.pixels * 255.0)
            table[s.image_id] = s.landmarks
        save_landmark_table(run.file("landmarks.csv"), table, decimals=2)
        save_label_table(run.file("labels.csv"), balanced)
        save_results(run.file("results.txt"), {
            "input_samples": len(samples),
            "output_samples": len(balanced),
            "augmented": sum(1 for s in balanced if s.is_augmented()),
        })
    return 0


def cmd_split(args, config):
    order, rows = load_label_table(require_file(args.labels, "labels table"))
    key = config["split.key"]
    if key not in ("class", "gender"):
        raise UsageError(f"split.key must be class or gender, got {key!r}")
    # the splitter only reads labels, so the heavy fields are shared
    # placeholders; one zero canvas backs every stand-in sample
    canvas = np.zeros((96, 96))
    missing = empty_landmarks()
    samples = [Sample(image_id, canvas, rows[image_id][0],
                      rows[image_id][1], missing) for image_id in order]
    spec = stratified_split(samples, key, cfg_int(config, "seed"))
    with RunDir(run_dir_path(args, "split"), config) as run:
        counts = {}
        for name, indices in spec.partitions().items():
            with open(run.file(name + ".txt"), "w", encoding="utf-8") as fh:
                for i in indices:
                    fh.write(order[i] + "\n")
            counts[name] = len(indices)
        save_results(run.file("results.txt"), {
            "key": key, "seed": spec.seed, "train": counts["train"],
            "val": counts["val"], "test": counts["test"],
        })
    return 0


def cmd_train_hcnn(args, config):
    samples = load_samples(require_dir(args.images, "images directory"),
                           require_file(args.table, "landmark table"),
                           require_file(args.labels, "labels table"))
    task = config["task"]
    if task not in ("character", "gender"):
        raise UsageError(f"task must be character or gender, got {task!r}")
    if args.split_dir:
        train, val = split_samples(samples,
                                   require_dir(args.split_dir, "split dir"))
    else:
        train, val = samples, []
    vocab = sorted(set(sample_labels(train, task)))
    if len(vocab) < 2:
        raise InputError(f"training set holds a single class: {vocab}")
    train_data, means = classifier_data(train, task, vocab)
    val_data = None
    if val:
        val_data, _ = classifier_data(val, task, vocab, means)

    seed = cfg_int(config, "seed")
    max_epochs = cfg_int(config, "hcnn.max_epochs", minimum=1)
    early = cfg_int(config, "hcnn.early_stop", minimum=0)
    model = Hcnn(hcnn_config_from(config, len(vocab)), seed=seed)
    run_record = train_hcnn(
        model, train_data, val_data,
        batch_size=cfg_int(config, "hcnn.batch_size", minimum=1),
        max_epochs=max_epochs, seed=seed,
        adam_lr=cfg_float(config, "hcnn.adam_lr"),
        sgd_lr=cfg_float(config, "hcnn.sgd_lr"),
        early_stop_after=early or None)

    with RunDir(run_dir_path(args, "train-hcnn"), config) as run:
        save_model(model, run.file("model.bin"))
        with open(run.file("dataset.json"), "w", encoding="utf-8") as fh:
            json.dump({"task": task, "classes": vocab,
                       "landmark_means": means.tolist()}, fh, indent=0,
                      sort_keys=True)
            fh.write("\n")
        columns = ["train_losses", "train_metrics"]
        if val_data is not None:
            columns += ["val_losses", "val_metrics"]
        columns.append("learning_rates")
        write_history(run.file("history.csv"), run_record, columns)
        summary = {
            "classes": len(vocab),
            "train_samples": len(train),
            "val_samples": len(val),
            "epochs_run": run_record.epochs_run,
            "convergence_epoch": run_record.convergence_epoch,
            "final_train_loss": run_record.train_losses[-1],
            "final_train_accuracy": run_record.train_metrics[-1],
        }
        if val_data is not None:
            summary["final_val_loss"] = run_record.val_losses[-1]
            summary["final_val_accuracy"] = run_record.val_metrics[-1]
        save_results(run.file("results.txt"), summary)
    return 0


def cmd_train_landmarks(args, config):
    table = load_landmark_table(require_file(args.table, "landmark table"))
    images_dir = require_dir(args.images, "images directory")
    ids = list(table)
    if args.split_dir:
        split_dir = require_dir(args.split_dir, "split dir")
        train_ids = read_id_list(os.path.join(split_dir, "train.txt"))
        val_path = os.path.join(split_dir, "val.txt")
        val_ids = read_id_list(val_path) if os.path.isfile(val_path) else []
        known = set(ids)
        for image_id in train_ids + val_ids:
            if image_id not in known:
                raise InputError(f"{args.split_dir}: id {image_id!r} has no "
                                 "landmark row")
    else:
        train_ids, val_ids = ids, []

    def gather(chosen):
        pixels = np.stack([normalize_image(load_image(
            find_image(images_dir, i)))[0] for i in chosen])
        landmarks = np.stack([table[i] for i in chosen])
        return pixels, landmarks

    train_px, train_lm = gather(train_ids)
    val_px = val_lm = None
    if val_ids:
        val_px, val_lm = gather(val_ids)

    seed = cfg_int(config, "seed")
    early = cfg_int(config, "landmark.early_stop", minimum=0)
    net_config = LandmarkNetConfig(
        conv_filters=tuple(cfg_list(config, "landmark.filters", int)),
        hidden_width=cfg_int(config, "landmark.hidden", minimum=1),
        dropout_rate=cfg_float(config, "landmark.dropout"))
    model, run_record = build_and_train_landmark_net(
        train_px, train_lm, val_px, val_lm, config=net_config, seed=seed,
        batch_size=cfg_int(config, "landmark.batch_size", minimum=1),
        max_epochs=cfg_int(config, "landmark.max_epochs", minimum=1),
        lr=cfg_float(config, "landmark.lr"),
        early_stop_after=early or None)

    with RunDir(run_dir_path(args, "train-landmarks"), config) as run:
        save_model(model, run.file("model.bin"))
        columns = ["train_losses", "train_metrics"]
        if val_ids:
            columns += ["val_losses", "val_metrics"]
        write_history(run.file("history.csv"), run_record, columns)
        summary = {
            "train_samples": len(train_ids),
            "val_samples": len(val_ids),
            "epochs_run": run_record.epochs_run,
            "convergence_epoch": run_record.convergence_epoch,
            "final_train_rmse_px": run_record.train_metrics[-1],
        }
        if val_ids:
            summary["final_val_rmse_px"] = run_record.val_metrics[-1]
        save_results(run.file("results.txt"), summary)
    return 0


def _train_shallow(args, config, subcommand):
    ids, X, y, vocab = load_feature_vectors(
        require_file(args.features, "feature file"))
    labels = [vocab[i] for i in y]
    seed = cfg_int(config, "seed")
    if subcommand == "train-svm":
        params = SvmParams(C=cfg_float(config, "svm.c"),
                           gamma=cfg_float(config, "svm.gamma"),
                           probability=cfg_bool(config, "svm.probability"),
                           tol=cfg_float(config, "svm.tol"),
                           max_iter=cfg_int(config, "svm.max_iter",
                                            minimum=1))
        trainer = svm_train
    else:
        params = GbParams(shrinkage=cfg_float(config, "gb.shrinkage"),
                          max_depth=cfg_int(config, "gb.depth", minimum=1),
                          stages=cfg_int(config, "gb.stages", minimum=1))
        trainer = gb_train
    scaler = MinMaxScaler()
    scaled = scaler.fit_transform(X)
    model = trainer(scaled, labels, params, seed=seed)
    predicted = model.predict(scaled)
    train_accuracy = float(np.mean([p == t for p, t
                                    in zip(predicted, labels)]))
    with RunDir(run_dir_path(args, subcommand), config) as run:
        save_model(scaler, run.file("scaler.bin"))
        save_model(model, run.file("model.bin"))
        save_results(run.file("results.txt"), {
            "samples": len(ids),
            "classes": len(set(labels)),
            "train_accuracy": train_accuracy,
        })
    return 0


def cmd_train_svm(args, config):
    return _train_shallow(args, config, "train-svm")


def cmd_train_gb(args, config):
    return _train_shallow(args, config, "train-gb")


def cmd_grid_search(args, config):
    ids, X, y, vocab = load_feature_vectors(
        require_file(args.features, "feature file"))
    labels = [vocab[i] for i in y]
    if args.model == "svm":
        cells = [SvmParams(C=c, gamma=g)
                 for c in cfg_list(config, "grid.svm.c", float)
                 for g in cfg_list(config, "grid.svm.gamma", float)]
        header = "index,C,gamma,mean_accuracy,fold_accuracies"
        describe = lambda p: f"{p.C!r},{p.gamma!r}"
    else:
        cells = [GbParams(stages=s, max_depth=d)
                 for s in cfg_list(config, "grid.gb.stages", int)
                 for d in cfg_list(config, "grid.gb.depth", int)]
        header = "index,stages,depth,mean_accuracy,fold_accuracies"
        describe = lambda p: f"{p.stages},{p.max_depth}"
    result = grid_search_cv(X, labels, cells,
                            folds=cfg_int(config, "grid.folds", minimum=2),
                            seed=cfg_int(config, "seed"))
    with RunDir(run_dir_path(args, "grid-search"), config) as run:
        with open(run.file("grid.csv"), "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for i, params in enumerate(cells):
                per_fold = "|".join(repr(a) for a in result.fold_accuracy[i])
                fh.write(f"{i},{describe(params)},"
                         f"{result.mean_accuracy[i]!r},{per_fold}\n")
        best = result.best_params
        summary = {"model": args.model, "cells": len(cells),
                   "folds": result.folds, "best_index": result.best_index}
        if args.model == "svm":
            summary.update(best_C=best.C, best_gamma=best.gamma)
        else:
            summary.update(best_stages=best.stages,
                           best_depth=best.max_depth)
        summary["best_mean_accuracy"] = result.mean_accuracy[
            result.best_index]
        save_results(run.file("results.txt"), summary)
    return 0


def cmd_predict(args, config):
    model = load_model(require_file(args.model, "model file"))
    k_setting = cfg_int(config, "predict.k", minimum=1)
    with RunDir(run_dir_path(args, "predict"), config) as run:
        if isinstance(model, (SvmModel, GbModel)):
            if not args.features:
                raise UsageError("this model kind predicts from --features")
            ids, X, _, _ = load_feature_vectors(
                require_file(args.features, "feature file"))
            scaler_file = args.scaler or scaler_path_for(args.model)
            scaler = load_model(require_file(scaler_file, "scaler file"),
                                expect_kind="scaler")
            labels, probs = ranked_label_rows(model, scaler.transform(X),
                                              k_setting)
            save_ranked_predictions(run.file("predictions.csv"), ids,
                                    labels, probs)
            count = len(ids)
        elif isinstance(model, Hcnn):
            if not (args.images and args.table and args.meta):
                raise UsageError(
                    "an hcnn model predicts from --images, --table and the "
                    "training run's --meta dataset.json")
            with open(require_file(args.meta, "dataset meta"), "r",
                      encoding="utf-8") as fh:
                meta = json.load(fh)
            table = load_landmark_table(require_file(args.table,
                                                     "landmark table"))
            images_dir = require_dir(args.images, "images directory")
            ids = list(table)
            pixels = np.stack([normalize_image(load_image(
                find_image(images_dir, i)))[0] for i in ids])
            features, _ = landmark_features(
                np.stack([table[i] for i in ids]),
                np.asarray(meta["landmark_means"], dtype=np.float64))
            classes = meta["classes"]
            k = min(k_setting, len(classes))
            index_rows, probs = ranked_predictions(model, pixels, features,
                                                   k=k)
            labels = [[classes[j] for j in row] for row in index_rows]
            save_ranked_predictions(run.file("predictions.csv"), ids,
                                    labels, probs)
            count = len(ids)
        elif isinstance(model, LandmarkNet):
            if not args.images:
                raise UsageError("a landmark model predicts from --images")
            images_dir = require_dir(args.images, "images directory")
            names = sorted(n for n in os.listdir(images_dir)
                           if n.endswith((".pgm", ".ppm")))
            if not names:
                raise InputError(f"no .pgm or .ppm files under {images_dir}")
            ids = [os.path.splitext(n)[0] for n in names]
            pixels = np.stack([normalize_image(load_image(
                os.path.join(images_dir, n)))[0] for n in names])
            predicted = model.predict(pixels)
            save_landmark_table(run.file("landmarks.csv"),
                                dict(zip(ids, predicted)), decimals=2)
            count = len(ids)
        else:
            raise UsageError(f"cannot predict with a "
                             f"{type(model).__name__}")
        save_results(run.file("results.txt"), {"predictions": count})
    return 0


def cmd_eval_recognition(args, config):
    ids, ranked_labels, _ = load_ranked_predictions(
        require_file(args.predictions, "prediction file"))
    order, rows = load_label_table(require_file(args.labels, "labels table"))
    task = config["task"]
    if task not in ("character", "gender"):
        raise UsageError(f"task must be character or gender, got {task!r}")
    column = 0 if task == "character" else 1
    truths = []
    for image_id in ids:
        if image_id not in rows:
            raise InputError(f"{args.predictions}: id {image_id!r} missing "
                             f"from {args.labels}")
        truths.append(str(rows[image_id][column]))
    vocab = sorted({str(rows[i][column]) for i in order})
    index = {label: i for i, label in enumerate(vocab)}
    top1 = []
    for image_id, row in zip(ids, ranked_labels):
        if row[0] not in index:
            raise InputError(f"{args.predictions}: {image_id!r} predicts "
                             f"unknown class {row[0]!r}")
        top1.append(index[row[0]])
    confusion = confusion_matrix([index[t] for t in truths], top1,
                                 len(vocab))
    combined = cfg_bool(config, "eval.macro_combined")
    precision, recall, f_measure = macro_prf(
        confusion, combine_after_averaging=combined)
    k = min(cfg_int(config, "eval.k", minimum=1), len(vocab))
    values = {
        "samples": len(ids),
        "classes": len(vocab),
        "accuracy": accuracy(confusion),
        "macro_precision": precision,
        "macro_recall": recall,
        "macro_f_measure": f_measure,
        f"top{k}_error": topk_error(ranked_labels, truths, k),
    }
    with RunDir(run_dir_path(args, "eval-recognition"), config) as run:
        with open(run.file("metrics.txt"), "w", encoding="utf-8") as fh:
            fh.write(format_report(values))
        save_results(run.file("results.txt"), values)
    return 0


def cmd_eval_detection(args, config):
    truth = load_boxes(require_file(args.truth, "truth boxes"))
    predicted = load_boxes(require_file(args.predicted, "predicted boxes"))
    threshold = cfg_float(config, "eval.iou")
    if not 0.0 < threshold <= 1.0:
        raise UsageError(f"eval.iou must be in (0,1], got {threshold}")
    result = detection_rates(truth, predicted, iou_threshold=threshold)
    tally = {"TP": 0, "FP": 0, "FN": 0}
    for verdict in result.verdicts.values():
        tally[verdict] += 1
    values = {
        "images": len(result.verdicts),
        "true_positives": tally["TP"],
        "false_positives": tally["FP"],
        "false_negatives": tally["FN"],
        "tpr": result.tpr,
        "fpr": result.fpr,
        "fnr": result.fnr,
    }
    with RunDir(run_dir_path(args, "eval-detection"), config) as run:
        with open(run.file("metrics.txt"), "w", encoding="utf-8") as fh:
            fh.write(format_report(values))
            for image_id in result.skipped:
                fh.write(f"warning: {image_id} has no ground truth boxes; "
                         "skipped\n")
        save_results(run.file("results.txt"), values)
    return 0


def cmd_ablate_hcnn(args, config):
    samples = load_samples(require_dir(args.images, "images directory"),
                           require_file(args.table, "landmark table"),
                           require_file(args.labels, "labels table"))
    task = config["task"]
    vocab = sorted(set(sample_labels(samples, task)))
    if len(vocab) < 2:
        raise InputError(f"dataset holds a single class: {vocab}")
    data, _ = classifier_data(samples, task, vocab)
    seeds = cfg_list(config, "ablate.seeds", int)
    batch_size = cfg_int(config, "ablate.batch_size", minimum=1)
    max_epochs = cfg_int(config, "ablate.max_epochs", minimum=1)
    early = cfg_int(config, "ablate.early_stop", minimum=0)
    k = min(5, len(vocab))

    # No validation split and no accuracy stop: with tiny corpora a val
    # fold is too noisy to watch and an accuracy stop only measures how
    # fast each variant interpolates. Watching the full-set train loss
    # until improvements drop below the 1e-4 resolution is the comparison
    # that stays honest at this scale.
    def trial(seed, enabled):
        overlay = dict(config)
        overlay["hcnn.shortcut"] = "true" if enabled else "false"
        overlay["hcnn.batch_norm"] = "true" if enabled else "false"
        model = Hcnn(hcnn_config_from(overlay, len(vocab)), seed=seed)
        record = train_hcnn(model, data, batch_size=batch_size,
                            max_epochs=max_epochs, seed=seed,
                            early_stop_after=early or None)
        ranked, _ = ranked_predictions(model, data.pixels, data.landmarks,
                                       k=k)
        error = topk_error(ranked.tolist(), data.labels.tolist(), k)
        return record.convergence_epoch, record.epochs_run, error

    rows = []
    held = 0
    for seed in seeds:
        with_run = trial(seed, True)
        without_run = trial(seed, False)
        rows.append((seed, with_run, without_run))
        held += with_run[0] <= without_run[0]

    with RunDir(run_dir_path(args, "ablate-hcnn"), config) as run:
        with open(run.file("ablation.csv"), "w", encoding="utf-8") as fh:
            fh.write("variant,seed,convergence_epoch,epochs_run,"
                     f"top{k}_error\n")
            for seed, w, wo in rows:
                fh.write(f"with,{seed},{w[0]},{w[1]},{w[2]!r}\n")
                fh.write(f"without,{seed},{wo[0]},{wo[1]},{wo[2]!r}\n")
        mean = lambda xs: float(np.mean(xs))
        with_rows = [w for _, w, _ in rows]
        without_rows = [wo for _, _, wo in rows]
        with open(run.file("ablation.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"variant   convergence_epoch  top{k}_error\n")
            fh.write(f"with      {mean([r[0] for r in with_rows]):17.1f}"
                     f"  {mean([r[2] for r in with_rows]):.6f}\n")
            fh.write(f"without   {mean([r[0] for r in without_rows]):17.1f}"
                     f"  {mean([r[2] for r in without_rows]):.6f}\n")
        save_results(run.file("results.txt"), {
            "seeds": len(seeds),
            "direction_holds": held,
            "with_mean_convergence": mean([r[0] for r in with_rows]),
            "without_mean_convergence": mean([r[0] for r in without_rows]),
            f"with_mean_top{k}_error": mean([r[2] for r in with_rows]),
            f"without_mean_top{k}_error": mean([r[2] for r in without_rows]),
        })
    return 0


# ---------------------------------------------------------------- parser


def positive_int(raw):
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, "
                                         f"got {value}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="toonface",
        description="Cartoon face recognition toolkit: annotation "
                    "validation, dataset balancing, training and "
                    "evaluation in one place.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, handler, description, **flags):
        p = sub.add_parser(name, help=description, description=description)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", help="run directory (default: "
                       f"${RUN_ROOT_VAR}/<subcommand>)")
        p.add_argument("--seed", type=int, help="seed override")
        for flag, options in flags.items():
            p.add_argument(flag, **options)
        p.set_defaults(handler=handler)
        return p

    add("validate-annotations", cmd_validate_annotations,
        "check a landmark table for range and spread violations",
        **{"--table": dict(required=True, help="landmark table csv")})
    add("augment", cmd_augment,
        "balance class counts (and optionally gender) by augmentation",
        **{"--images": dict(required=True, help="directory of images"),
           "--table": dict(required=True, help="landmark table csv"),
           "--labels": dict(required=True, help="labels csv")})
    add("split", cmd_split,
        "stratified train/val/test id lists from a labels table",
        **{"--labels": dict(required=True, help="labels csv"),
           "--key": dict(choices=("class", "gender"),
                         help="stratification key")})
    add("train-hcnn", cmd_train_hcnn,
        "train the two-head recognizer on images plus landmarks",
        **{"--images": dict(required=True, help="directory of images"),
           "--table": dict(required=True, help="landmark table csv"),
           "--labels": dict(required=True, help="labels csv"),
           "--split-dir": dict(help="directory with train/val id lists"),
           "--max-epochs": dict(type=positive_int, help="epoch budget"),
           "--batch-size": dict(type=positive_int, help="minibatch size")})
    add("train-landmarks", cmd_train_landmarks,
        "train the landmark regressor on annotated images",
        **{"--images": dict(required=True, help="directory of images"),
           "--table": dict(required=True, help="landmark table csv"),
           "--split-dir": dict(help="directory with train/val id lists"),
           "--max-epochs": dict(type=positive_int, help="epoch budget")})
    add("train-svm", cmd_train_svm,
        "train the RBF-kernel SVM on precomputed feature vectors",
        **{"--features": dict(required=True, help="feature vector csv")})
    add("train-gb", cmd_train_gb,
        "train the gradient boosted trees on precomputed feature vectors",
        **{"--features": dict(required=True, help="feature vector csv")})
    add("grid-search", cmd_grid_search,
        "cross-validated hyperparameter search for a shallow model",
        **{"--features": dict(required=True, help="feature vector csv"),
           "--model": dict(required=True, choices=("svm", "gb"),
                           help="model family to search")})
    add("predict", cmd_predict,
        "rank classes (or regress landmarks) with a saved model",
        **{"--model": dict(required=True, help="saved model file"),
           "--features": dict(help="feature vector csv (svm/gb models)"),
           "--scaler": dict(help="saved scaler (default: next to model)"),
           "--images": dict(help="directory of images (hcnn/landmark)"),
           "--table": dict(help="landmark table csv (hcnn models)"),
           "--meta": dict(help="dataset.json from the training run")})
    add("eval-recognition", cmd_eval_recognition,
        "score ranked predictions against a labels table",
        **{"--predictions": dict(required=True, help="ranked predictions"),
           "--labels": dict(required=True, help="labels csv")})
    add("eval-detection", cmd_eval_detection,
        "per-image detection rates from truth and predicted boxes",
        **{"--truth": dict(required=True, help="truth box file"),
           "--predicted": dict(required=True, help="predicted box file")})
    add("ablate-hcnn", cmd_ablate_hcnn,
        "compare convergence with and without the shortcut and batch norm",
        **{"--images": dict(required=True, help="directory of images"),
           "--table": dict(required=True, help="landmark table csv"),
           "--labels": dict(required=True, help="labels csv")})
    return parser


def apply_flag_overrides(args, config):
    if getattr(args, "key", None):
        config["split.key"] = args.key
    prefix = {"train-hcnn": "hcnn", "train-landmarks": "landmark"}.get(
        args.subcommand)
    if prefix:
        if getattr(args, "max_epochs", None) is not None:
            config[f"{prefix}.max_epochs"] = str(args.max_epochs)
        if getattr(args, "batch_size", None) is not None:
            config[f"{prefix}.batch_size"] = str(args.batch_size)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:  # argparse already printed the message
        return int(exit_.code or 0)
    try:
        config = resolve_config(args)
        apply_flag_overrides(args, config)
        return args.handler(args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, DataError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
