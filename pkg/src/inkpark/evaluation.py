"""CV harnesses, metrics, and weighted task ensembles.

Fold hygiene: inside every fold, standardization is fitted on the training
rows, feature selection and hyperparameter search see the training rows
only, and the held-out rows are touched exactly once, for prediction. The
optional "global" selection scope reproduces the single-selection protocol
(selection computed once on the full matrix) and stamps a leakage caveat
into the result.

Every random decision derives from (config.seed, fold index), folds are
assembled in index order, and workers share no mutable state, so reports
are byte-identical at any parallelism level.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InkparkError, SingleClassError
from .folds import fold_partitions, stratified_fold_ids
from .preprocess import apply_zscore, fit_zscore
from .seeding import derive_seed
from .selection import (ForestConfig, rf_gini_ranking, sffs, top_k_percent)
from .svm import (DEFAULT_MAX_ITER, DEFAULT_TOL, KERNELS, RBF, KernelSpec,
                  SearchSpace, decision_function, hyperparameter_search,
                  make_inner_cv_evaluator, train_svm)

SELECTION_MODES = ("topk", "sffs", "topk_then_sffs")
SELECTION_SCOPES = ("fold", "global")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    @classmethod
    def from_predictions(cls, truths, preds):
        tp = tn = fp = fn = 0
        for t, p in zip(truths, preds):
            if t == 1 and p == 1:
                tp += 1
            elif t == -1 and p == -1:
                tn += 1
            elif t == -1 and p == 1:
                fp += 1
            else:
                fn += 1
        return cls(tp=tp, tn=tn, fp=fp, fn=fn)

    def as_dict(self):
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def compute_metrics(counts):
    """ACC/precision/recall/F1 in percent; zero denominators report 0 with
    a flag."""
    total = counts.total
    if total == 0:
        raise InkparkError("metrics need at least one prediction")
    flags = []
    acc = (counts.tp + counts.tn) / total * 100.0
    if counts.tp + counts.fp > 0:
        precision = counts.tp / (counts.tp + counts.fp) * 100.0
    else:
        precision = 0.0
        flags.append("precision_undefined")
    if counts.tp + counts.fn > 0:
        recall = counts.tp / (counts.tp + counts.fn) * 100.0
    else:
        recall = 0.0
        flags.append("recall_undefined")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append("f1_undefined")
    return {"acc": acc, "precision": precision, "recall": recall, "f1": f1,
            "flags": flags}


@dataclass(frozen=True)
class PipelineConfig:
    """Per-task pipeline settings; echoed verbatim into reports."""

    seed: int = 0
    selection_mode: str = "topk"
    k_percent: float = 10.0
    sffs_max_size: int = 10
    rf_trees: int = 200
    search_budget: int = 100
    kernels: tuple = KERNELS
    c_range: tuple = (0.01, 100.0)
    gamma_range: tuple = (0.01, 100.0)
    inner_folds: int = 5
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    selection_scope: str = "fold"
    feature_mask: tuple = None   # allowed feature names; None = all

    def __post_init__(self):
        if self.selection_mode not in SELECTION_MODES:
            raise InkparkError(f"unknown selection mode {self.selection_mode!r}")
        if self.selection_scope not in SELECTION_SCOPES:
            raise InkparkError(f"unknown selection scope {self.selection_scope!r}")

    def to_json_dict(self):
        doc = asdict(self)
        doc["kernels"] = list(self.kernels)
        doc["c_range"] = list(self.c_range)
        doc["gamma_range"] = list(self.gamma_range)
        doc["feature_mask"] = None if self.feature_mask is None else list(self.feature_mask)
        return doc


def _allowed_columns(feature_names, config):
    if config.feature_mask is None:
        return tuple(range(len(feature_names)))
    allowed = set(config.feature_mask)
    missing = allowed - set(feature_names)
    if missing:
        raise InkparkError(f"feature_mask names not in matrix: {sorted(missing)}")
    return tuple(k for k, name in enumerate(feature_names)
                 if name in allowed)


def select_features(values_std, labels, feature_names, pool, config, seed, row_keys):
    """Feature selection on (already standardized) training data.

    Returns (selected column indices, details dict).
    """
    name_to_col = {feature_names[c]: c for c in pool}
    details = {}
    if config.selection_mode in ("topk", "topk_then_sffs"):
        ranking = rf_gini_ranking(
            values_std[:, pool], labels,
            ForestConfig(n_trees=config.rf_trees, seed=derive_seed(seed, "rf")),
            feature_names=tuple(feature_names[c] for c in pool),
            row_keys=row_keys)
        kept = top_k_percent(ranking, config.k_percent)
        selected = tuple(name_to_col[name] for name in kept)
        details["ranking_head"] = [(n, v) for n, v in ranking.entries[:20]]
    else:
        selected = pool

    if config.selection_mode in ("sffs", "topk_then_sffs"):
        inner = make_inner_cv_evaluator(values_std, labels,
                                        derive_seed(seed, "sffs-cv"),
                                        folds=config.inner_folds,
                                        tol=config.tol, max_iter=config.max_iter)

        def j_of(subset):
            spec = KernelSpec(RBF, gamma=1.0 / len(subset))
            return inner(spec, 1.0, feature_idx=subset)

        selected, trace = sffs(j_of, selected, config.sffs_max_size)
        details["sffs_trace"] = [
            {"action": s.action, "feature": feature_names[s.feature],
             "j": s.j_value, "size": s.subset_size}
            for s in trace.steps]
    return tuple(selected), details


def _majority(labels):
    pos = int(np.sum(labels == 1))
    neg = int(np.sum(labels == -1))
    return 1 if pos >= neg else -1


def _run_fold(values, labels, feature_names, subjects, train, test, config,
              fold_seed, preselected=None):
    """One CV fold: fit on train rows only, predict the held-out rows."""
    ytr = labels[train]
    flags = []
    if np.unique(ytr).size < 2:
        majority = _majority(ytr)
        return {
            "test_subjects": [subjects[t] for t in test],
            "predictions": {subjects[t]: {
                "true": int(labels[t]), "pred": majority, "decision": 0.0,
                "flags": ["single_class_train"]} for t in test},
            "selected": [], "kernel": None, "C": None, "gamma": None,
            "inner_score": None, "flags": ["single_class_train"],
            "selection": {},
        }

    params = fit_zscore(values[train], columns=feature_names)
    Xtr = apply_zscore(values[train], params)
    Xte = apply_zscore(values[test], params)

    if preselected is not None:
        selected, sel_details = preselected, {}
    else:
        pool = _allowed_columns(feature_names, config)
        selected, sel_details = select_features(
            Xtr, ytr, feature_names, pool, config,
            derive_seed(fold_seed, "select"),
            row_keys=[subjects[t] for t in train])

    Xtr_sel = Xtr[:, list(selected)]
    Xte_sel = Xte[:, list(selected)]

    space = SearchSpace(c_range=config.c_range, gamma_range=config.gamma_range,
                        kernels=config.kernels, budget=config.search_budget,
                        seed=derive_seed(fold_seed, "search"))
    inner = make_inner_cv_evaluator(Xtr_sel, ytr, derive_seed(fold_seed, "inner"),
                                    folds=config.inner_folds,
                                    tol=config.tol, max_iter=config.max_iter)
    spec, C, history = hyperparameter_search(
        Xtr_sel, ytr, space, evaluator=lambda s, c: inner(s, c))
    model = train_svm(Xtr_sel, ytr, C, spec, tol=config.tol,
                      max_iter=config.max_iter)
    decisions = decision_function(model, Xte_sel)

    best_score = max(h["score"] for h in history)
    return {
        "test_subjects": [subjects[t] for t in test],
        "predictions": {subjects[t]: {
            "true": int(labels[t]),
            "pred": 1 if decisions[k] >= 0.0 else -1,
            "decision": float(decisions[k]),
            "flags": []} for k, t in enumerate(test)},
        "selected": [feature_names[c] for c in selected],
        "kernel": spec.family, "C": C, "gamma": spec.gamma,
        "inner_score": best_score, "flags": flags,
        "selection": sel_details,
    }


@dataclass(frozen=True)
class TaskResult:
    task_id: int
    cv: str
    subjects: tuple
    predictions: dict
    confusion: ConfusionCounts
    metrics: dict
    correct: int
    total: int
    folds: tuple
    selection_scope: str
    global_selection: tuple = None
    config: dict = field(default_factory=dict)
    leakage_caveat: str = None

    @property
    def accuracy_fraction(self):
        return self.correct / self.total

    def to_json_dict(self):
        return {
            "task_id": self.task_id,
            "cv": self.cv,
            "subjects": list(self.subjects),
            "predictions": {s: dict(p) for s, p in self.predictions.items()},
            "confusion": self.confusion.as_dict(),
            "metrics": self.metrics,
            "correct": self.correct,
            "total": self.total,
            "accuracy_fraction": f"{self.correct}/{self.total}",
            "folds": [dict(f) for f in self.folds],
            "selection_scope": self.selection_scope,
            "global_selection": None if self.global_selection is None
                                else list(self.global_selection),
            "config": self.config,
            "leakage_caveat": self.leakage_caveat,
        }


def _assemble(matrix, config, cv_name, parts, jobs):
    values = matrix.values
    labels = matrix.labels
    names = matrix.feature_names
    subjects = matrix.subject_ids

    preselected = None
    caveat = None
    global_selection = None
    if config.selection_scope == "global":
        params = fit_zscore(values, columns=names)
        pool = _allowed_columns(names, config)
        preselected, _ = select_features(apply_zscore(values, params), labels, names,
                                 pool, config, derive_seed(config.seed, "global-select"),
                                 row_keys=list(subjects))
        global_selection = tuple(names[c] for c in preselected)
        caveat = ("selection was computed once on the full matrix; the outer "
                  "CV estimate is optimistically biased")

    def work(item):
        fold_index, (train, test) = item
        return _run_fold(values, labels, names, subjects, train, test, config,
                         derive_seed(config.seed, "fold", fold_index),
                         preselected=preselected)

    items = list(enumerate(parts))
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            fold_results = list(pool_exec.map(work, items))
    else:
        fold_results = [work(item) for item in items]

    predictions = {}
    for fr in fold_results:
        predictions.update(fr["predictions"])
    ordered = {s: predictions[s] for s in subjects}
    truths = [ordered[s]["true"] for s in subjects]
    preds = [ordered[s]["pred"] for s in subjects]
    counts = ConfusionCounts.from_predictions(truths, preds)
    correct = counts.tp + counts.tn

    folds = tuple(
        {"fold": k, "test_subjects": fr["test_subjects"],
         "selected": fr["selected"], "kernel": fr["kernel"], "C": fr["C"],
         "gamma": fr["gamma"], "inner_score": fr["inner_score"],
         "flags": fr["flags"], "selection": fr["selection"]}
        for k, fr in enumerate(fold_results))

    return TaskResult(
        task_id=matrix.task_id, cv=cv_name, subjects=tuple(subjects),
        predictions=ordered, confusion=counts,
        metrics=compute_metrics(counts), correct=correct, total=counts.total,
        folds=folds, selection_scope=config.selection_scope,
        global_selection=global_selection, config=config.to_json_dict(),
        leakage_caveat=caveat)


def loocv_evaluate(matrix, config, jobs=1):
    """Leave-one-subject-out evaluation of one task's feature matrix."""
    n = matrix.n_rows
    if n < 3:
        raise InkparkError("LOOCV needs at least 3 subjects")
    if len(set(matrix.subject_ids)) != n:
        raise InkparkError("LOOCV requires one row per subject")
    if np.unique(matrix.labels).size < 2:
        raise SingleClassError("evaluation needs both classes present")
    parts = [(np.delete(np.arange(n), k), np.array([k])) for k in range(n)]
    return _assemble(matrix, config, "loocv", parts, jobs)


def kfold_evaluate(matrix, k, config, jobs=1):
    """Stratified k-fold evaluation with the same per-fold hygiene."""
    if np.unique(matrix.labels).size < 2:
        raise SingleClassError("evaluation needs both classes present")
    fold_ids = stratified_fold_ids(matrix.labels, k, derive_seed(config.seed, "cv"))
    parts = fold_partitions(fold_ids, k)
    return _assemble(matrix, config, f"kfold:{k}", parts, jobs)


@dataclass(frozen=True)
class EnsembleResult:
    mode: str
    member_task_ids: tuple
    weights: tuple
    subjects: tuple
    predictions: dict
    confusion: ConfusionCounts
    metrics: dict
    correct: int
    total: int

    @property
    def accuracy_fraction(self):
        return self.correct / self.total

    def to_json_dict(self):
        return {
            "mode": self.mode,
            "member_task_ids": list(self.member_task_ids),
            "weights": list(self.weights),
            "subjects": list(self.subjects),
            "predictions": {s: dict(p) for s, p in self.predictions.items()},
            "confusion": self.confusion.as_dict(),
            "metrics": self.metrics,
            "correct": self.correct,
            "total": self.total,
            "accuracy_fraction": f"{self.correct}/{self.total}",
        }


def select_members(results, mode):
    """Members for an ensemble mode: top3/top5 by descending LOOCV accuracy
    (ties: lower task id), or all."""
    ranked = sorted(results, key=lambda r: (-r.accuracy_fraction, r.task_id))
    if mode == "top3":
        return ranked[:3]
    if mode == "top5":
        return ranked[:5]
    if mode == "all":
        return ranked
    raise InkparkError(f"unknown ensemble mode {mode!r}")


def ensemble_vote(members, weights=None, uniform=False, mode="custom"):
    """Weighted sign vote across member task results.

    Weights default to each member's accuracy fraction; a weighted sum of
    exactly 0 votes +1 (PD). Every member must cover every subject.
    """
    if not members:
        raise InkparkError("ensemble needs at least one member")
    subjects = members[0].subjects
    subject_set = set(subjects)
    for m in members:
        if set(m.subjects) != subject_set:
            raise InkparkError(
                f"member task {m.task_id} covers different subjects")
    if weights is None:
        weights = [1.0 if uniform else m.accuracy_fraction for m in members]
    if len(weights) != len(members):
        raise InkparkError("weights must align with members")

    predictions = {}
    for s in subjects:
        vote = 0.0
        for w, m in zip(weights, members):
            vote += w * m.predictions[s]["pred"]
        predictions[s] = {
            "true": members[0].predictions[s]["true"],
            "pred": 1 if vote >= 0.0 else -1,
            "decision": float(vote),
            "flags": [],
        }
    truths = [predictions[s]["true"] for s in subjects]
    preds = [predictions[s]["pred"] for s in subjects]
    counts = ConfusionCounts.from_predictions(truths, preds)
    return EnsembleResult(
        mode=mode, member_task_ids=tuple(m.task_id for m in members),
        weights=tuple(float(w) for w in weights), subjects=tuple(subjects),
        predictions=predictions, confusion=counts,
        metrics=compute_metrics(counts), correct=counts.tp + counts.tn,
        total=counts.total)


def build_report(run_config, task_results=(), ensembles=(), registry_version=None):
    """Assemble the full evaluation report; serialize with write_report."""
    from .stats_agg import REGISTRY_VERSION

    return {
        "run_config": run_config,
        "registry_version": registry_version or REGISTRY_VERSION,
        "tasks": [t.to_json_dict() for t in task_results],
        "ensembles": [e.to_json_dict() for e in ensembles],
    }


def report_text(report):
    """Canonical bytes of a report: sorted keys, two-space indent, LF."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_text(report))
