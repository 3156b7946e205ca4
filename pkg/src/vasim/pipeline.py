"""End-to-end model building: calibration, labelled data, both forests."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import features as feats
from .forest import EvalMetrics, ForestModel, ForestParams, cross_validate, train
from .lifecycle import (FIELD_TARGETS, NoticeModel, ScenarioTarget, calibrate_notice,
                        make_labeler)
from .scenegen import (DEFAULT_PARAMS, INVASION_CLASSES, LabeledDataset, LabeledWindow,
                       MotionProfile, ScenarioParams, all_scenarios_spec, generate_dataset)
from .trace import Scenario, cut_window, load_trace, save_trace
from .trigger import VolumePolicy

REFERENCE_FOREST = ForestParams(bootstrap=True, criterion="gini", max_depth=10, n_estimators=200)


@dataclass(frozen=True)
class Models:
    motion: ForestModel
    opportunity: ForestModel


def motion_training_set(items, params: Mapping[Scenario, ScenarioParams]):
    """Motion features and Motion/Stationary labels from walking and seated windows."""
    X, y = [], []
    for it in items:
        profile = params[it.scenario].motion_profile
        if profile is MotionProfile.Walking:
            y.append(feats.MOTION)
        elif profile is MotionProfile.Seated:
            y.append(feats.STATIONARY)
        else:
            continue
        X.append(feats.window_motion_features(it.window))
    if not X:
        raise ValueError("no walking or seated windows to train the motion model on")
    return np.array(X), y


def feature_matrix(items, motion_model: ForestModel) -> tuple[np.ndarray, list[str]]:
    rows = [feats.assemble(it.window, motion_model).as_array() for it in items]
    return np.array(rows), [it.label for it in items]


def train_models(dataset: LabeledDataset, params: Mapping[Scenario, ScenarioParams],
                 seed: int, forest_params: ForestParams = REFERENCE_FOREST, jobs: int = 1) -> Models:
    Xm, ym = motion_training_set(dataset.items, params)
    motion = train(Xm, ym, forest_params, seed=seed, class_order=feats.MOTION_CLASSES,
                   feature_names=feats.MOTION_FEATURE_NAMES, jobs=jobs)
    X, y = feature_matrix(dataset.items, motion)
    opportunity = train(X, y, forest_params, seed=seed + 1, class_order=INVASION_CLASSES,
                        feature_names=feats.FEATURE_NAMES, jobs=jobs)
    return Models(motion, opportunity)


def evaluate_opportunity(dataset: LabeledDataset, motion: ForestModel, k: int, seed: int,
                         forest_params: ForestParams = REFERENCE_FOREST, jobs: int = 1) -> EvalMetrics:
    X, y = feature_matrix(dataset.items, motion)
    return cross_validate(X, y, forest_params, k, seed, class_order=INVASION_CLASSES, jobs=jobs)


def calibrated_notice(seed: int, params=DEFAULT_PARAMS, policy: VolumePolicy = VolumePolicy(),
                      trials: int = 1000,
                      targets: Mapping[Scenario, ScenarioTarget] = FIELD_TARGETS) -> NoticeModel:
    return calibrate_notice(NoticeModel(), targets, params, policy, trials, seed)


def labelled_dataset(notice: NoticeModel, seed: int, trials: int = 200, params=DEFAULT_PARAMS,
                     policy: VolumePolicy = VolumePolicy(), duration: float = 180.0) -> LabeledDataset:
    return generate_dataset(all_scenarios_spec(trials, duration), params,
                            make_labeler(notice, policy), seed)


def bootstrap_models(seed: int, params=DEFAULT_PARAMS, policy: VolumePolicy = VolumePolicy(),
                     notice: NoticeModel | None = None, trials: int = 200,
                     calibration_trials: int = 1000, jobs: int = 1):
    """Calibrate, label and train from scratch; everything follows from ``seed``."""
    if notice is None:
        notice = calibrated_notice(seed, params, policy, calibration_trials)
    dataset = labelled_dataset(notice, seed, trials, params, policy)
    return notice, dataset, train_models(dataset, params, seed, jobs=jobs)


# Dataset directories: one trace CSV per window plus labels.csv.

LABELS_FILE = "labels.csv"


def save_dataset(dataset: LabeledDataset, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / LABELS_FILE, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "scenario", "trial", "seed", "label"])
        for it in dataset.items:
            name = f"{it.scenario.letter}-{it.trial:04d}.csv"
            save_trace(it.trace, directory / name)
            w.writerow([name, it.scenario.letter, it.trial, it.seed, it.label])


def load_dataset(directory) -> LabeledDataset:
    directory = Path(directory)
    path = directory / LABELS_FILE
    if not path.exists():
        raise FileNotFoundError(f"{path} not found")
    items = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            trace = load_trace(directory / row["file"])
            window = cut_window(trace, 0.0, trace.duration, trace_ref=row["file"])
            items.append(LabeledWindow(window, trace, row["label"], Scenario.parse(row["scenario"]),
                                       int(row["seed"]), int(row["trial"])))
    if not items:
        raise ValueError(f"{path} lists no windows")
    return LabeledDataset(tuple(items))


def write_feature_csv(dataset: LabeledDataset, motion: ForestModel, path) -> None:
    X, y = feature_matrix(dataset.items, motion)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(feats.FEATURE_NAMES))
        for row in X:
            w.writerow([format(v, ".9g") for v in row])


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
