"""Operator-facing command line.

Subcommands compose through files: synth writes trials + manifest, extract
writes per-task feature CSVs, select/train/evaluate/ensemble write JSON
reports. stdout carries one machine-parseable JSON line per invocation;
human-readable progress goes to stderr. Exit codes: 0 success, 1
validation/usage error, 2 internal error.

The default seed is 0, overridable per command with --seed or globally via
the INKPARK_SEED environment variable.
"""

import argparse
import json
import os
import re
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import InkparkError
from . import evaluation, selection, svm
from .preprocess import apply_zscore, fit_zscore
from .seeding import derive_seed
from .signal_io import load_cohort, trials_by_task
from .stats_agg import build_feature_matrix, read_feature_csv, write_feature_csv
from .synth import SEVERITY_PRESETS, CohortSpec, Severity, generate_cohort, write_cohort


def _default_jobs():
    return os.cpu_count() or 1


def _seed_from(args):
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("INKPARK_SEED", "0"))


def _log(msg):
    print(msg, file=sys.stderr)


def _emit(doc):
    print(json.dumps(doc, sort_keys=True))


def _parse_tasks(text):
    try:
        tasks = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise InkparkError(f"invalid task list {text!r}")
    if not tasks:
        raise InkparkError("task list is empty")
    return tasks


def _cmd_synth(args):
    seed = _seed_from(args)
    if args.spec:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        severity = doc.get("severity", "separable")
        if isinstance(severity, str):
            severity = SEVERITY_PRESETS[severity]
        else:
            severity = Severity(**severity)
        spec = CohortSpec(n_pd=int(doc["n_pd"]), n_hc=int(doc["n_hc"]),
                          tasks=tuple(doc.get("tasks", range(1, 9))),
                          seed=int(doc.get("seed", seed)), severity=severity)
    else:
        spec = CohortSpec(n_pd=args.n_pd, n_hc=args.n_hc,
                          tasks=_parse_tasks(args.tasks), seed=seed,
                          severity=SEVERITY_PRESETS[args.preset])
    _log(f"generating cohort: {spec.n_pd} PD + {spec.n_hc} HC, "
         f"tasks {list(spec.tasks)}, seed {spec.seed}")
    trials, manifest = generate_cohort(spec)
    manifest_path = write_cohort(trials, manifest, args.out)
    _log(f"wrote {len(trials)} trials under {args.out}")
    _emit({"command": "synth", "trials": len(trials),
           "manifest": str(manifest_path)})
    return 0


def _cmd_extract(args):
    jobs = args.jobs or _default_jobs()
    trials = load_cohort(args.manifest)
    grouped = trials_by_task(trials)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for task_id in sorted(grouped):
        task_trials = grouped[task_id]
        _log(f"extracting task {task_id}: {len(task_trials)} trials")
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as ex:
                # warms each trial's array cache in parallel; extraction
                # itself stays in deterministic manifest order
                list(ex.map(lambda t: t.as_arrays(), task_trials))
        matrix = build_feature_matrix(task_trials)
        csv_path = out_dir / f"task{task_id}.csv"
        write_feature_csv(matrix, csv_path)
        prov_path = out_dir / f"task{task_id}.provenance.json"
        prov_path.write_text(json.dumps(
            {"imputed": [{"subject_id": s, "feature": f}
                         for s, f in matrix.provenance]},
            sort_keys=True, indent=2) + "\n", encoding="utf-8")
        written[str(task_id)] = str(csv_path)
    _emit({"command": "extract", "tasks": written})
    return 0


def _infer_task_id(path, override):
    if override is not None:
        return override
    m = re.search(r"task(\d+)", Path(path).stem)
    return int(m.group(1)) if m else 0


def _pipeline_config(args, seed):
    return evaluation.PipelineConfig(
        seed=seed,
        selection_mode=args.selection,
        k_percent=args.k_percent,
        sffs_max_size=args.sffs_max,
        rf_trees=args.rf_trees,
        search_budget=args.budget,
        kernels=tuple(args.kernels.split(",")),
        selection_scope=args.selection_scope,
    )


def _cmd_select(args):
    seed = _seed_from(args)
    matrix = read_feature_csv(args.features, task_id=_infer_task_id(args.features, args.task))
    params = fit_zscore(matrix.values, columns=matrix.feature_names)
    std = apply_zscore(matrix.values, params)
    config = _pipeline_config(args, seed)
    pool = tuple(range(len(matrix.feature_names)))
    selected, details = evaluation.select_features(
        std, matrix.labels, matrix.feature_names, pool, config,
        derive_seed(seed, "select"), row_keys=list(matrix.subject_ids))
    doc = {"command": "select", "task_id": matrix.task_id, "seed": seed,
           "mode": args.selection,
           "selected": [matrix.feature_names[c] for c in selected],
           "details": details}
    Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
    _emit({"command": "select", "selected": len(selected), "out": args.out})
    return 0


def _cmd_train(args):
    seed = _seed_from(args)
    matrix = read_feature_csv(args.features, task_id=_infer_task_id(args.features, args.task))
    config = _pipeline_config(args, seed)
    params = fit_zscore(matrix.values, columns=matrix.feature_names)
    std = apply_zscore(matrix.values, params)
    pool = tuple(range(len(matrix.feature_names)))
    selected, details = evaluation.select_features(
        std, matrix.labels, matrix.feature_names, pool, config,
        derive_seed(seed, "select"), row_keys=list(matrix.subject_ids))
    sub = std[:, list(selected)]
    space = svm.SearchSpace(budget=args.budget, seed=derive_seed(seed, "search"),
                            kernels=tuple(args.kernels.split(",")))
    spec, C, history = svm.hyperparameter_search(sub, matrix.labels, space)
    model = svm.train_svm(sub, matrix.labels, C, spec)
    doc = {
        "command": "train", "task_id": matrix.task_id, "seed": seed,
        "selected": [matrix.feature_names[c] for c in selected],
        "zscore": params.to_json_dict(),
        "model": model.to_json_dict(),
        "search_history": history,
        "selection_details": details,
    }
    Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                              encoding="utf-8")
    _emit({"command": "train", "kernel": spec.family, "C": C, "out": args.out})
    return 0


def _cmd_evaluate(args):
    seed = _seed_from(args)
    jobs = args.jobs or _default_jobs()
    matrix = read_feature_csv(args.features, task_id=_infer_task_id(args.features, args.task))
    config = _pipeline_config(args, seed)
    _log(f"evaluating task {matrix.task_id}: {matrix.n_rows} subjects, "
         f"cv={args.cv}, selection={args.selection}, jobs={jobs}")
    if args.cv == "loocv":
        result = evaluation.loocv_evaluate(matrix, config, jobs=jobs)
    else:
        result = evaluation.kfold_evaluate(matrix, args.k_folds, config, jobs=jobs)
    if result.leakage_caveat:
        _log(f"warning: {result.leakage_caveat}")
    run_config = {"command": "evaluate", "features": str(args.features),
                  "cv": args.cv, "k_folds": args.k_folds, "jobs": jobs,
                  "seed": seed, "pipeline": config.to_json_dict()}
    report = evaluation.build_report(run_config, [result])
    evaluation.write_report(report, args.out)
    _emit({"command": "evaluate", "task": result.task_id,
           "acc": result.metrics["acc"], "correct": result.correct,
           "total": result.total, "out": str(args.out)})
    return 0


@dataclass(frozen=True)
class _MemberShim:
    task_id: int
    subjects: tuple
    predictions: dict
    correct: int
    total: int

    @property
    def accuracy_fraction(self):
        return self.correct / self.total


def _load_members(report_paths):
    members = []
    for p in report_paths:
        doc = json.loads(Path(p).read_text(encoding="utf-8"))
        for task in doc.get("tasks", []):
            members.append(_MemberShim(
                task_id=int(task["task_id"]),
                subjects=tuple(task["subjects"]),
                predictions=task["predictions"],
                correct=int(task["correct"]),
                total=int(task["total"])))
    if not members:
        raise InkparkError("no task results found in the given reports")
    return members


def _cmd_ensemble(args):
    members = _load_members(args.reports)
    chosen = evaluation.select_members(members, args.mode)
    result = evaluation.ensemble_vote(chosen, uniform=args.uniform_weights,
                                      mode=args.mode)
    run_config = {"command": "ensemble", "reports": [str(p) for p in args.reports],
                  "mode": args.mode, "uniform_weights": args.uniform_weights}
    report = evaluation.build_report(run_config, ensembles=[result])
    evaluation.write_report(report, args.out)
    _log("members: " + ", ".join(
        f"task{m.task_id}({m.correct}/{m.total}, w={w:.4f})"
        for m, w in zip(chosen, result.weights)))
    _emit({"command": "ensemble", "mode": args.mode,
           "members": list(result.member_task_ids),
           "weights": list(result.weights),
           "acc": result.metrics["acc"], "out": str(args.out)})
    return 0


def _cmd_report(args):
    doc = json.loads(Path(args.report).read_text(encoding="utf-8"))
    digest = {"command": "report", "tasks": [], "ensembles": []}
    for task in doc.get("tasks", []):
        m = task["metrics"]
        _log(f"task {task['task_id']} [{task['cv']}] "
             f"acc={m['acc']:.2f}% precision={m['precision']:.2f}% "
             f"recall={m['recall']:.2f}% f1={m['f1']:.2f}% "
             f"({task['accuracy_fraction']})")
        digest["tasks"].append({"task": task["task_id"], "acc": m["acc"]})
    for ens in doc.get("ensembles", []):
        m = ens["metrics"]
        _log(f"ensemble {ens['mode']} members={ens['member_task_ids']} "
             f"acc={m['acc']:.2f}% ({ens['accuracy_fraction']})")
        digest["ensembles"].append({"mode": ens["mode"], "acc": m["acc"]})
    _emit(digest)
    return 0


def _add_pipeline_flags(p):
    p.add_argument("--selection", default="topk",
                   choices=evaluation.SELECTION_MODES,
                   help="feature selection mode")
    p.add_argument("--k-percent", type=float, default=10.0,
                   help="top-k%% of features kept by the forest ranking")
    p.add_argument("--sffs-max", type=int, default=10,
                   help="SFFS maximum subset size")
    p.add_argument("--rf-trees", type=int, default=200,
                   help="trees in the ranking forest")
    p.add_argument("--budget", type=int, default=100,
                   help="hyperparameter search trials")
    p.add_argument("--kernels", default="linear,rbf,sigmoid",
                   help="comma-separated kernel families to search")
    p.add_argument("--selection-scope", default="fold",
                   choices=evaluation.SELECTION_SCOPES,
                   help="run selection per fold (honest) or once globally")
    p.add_argument("--task", type=int, default=None,
                   help="task id override (default: parsed from the filename)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="inkpark",
        description="handwriting-kinematics PD/HC pipeline")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--preset", default="separable", choices=sorted(SEVERITY_PRESETS))
    p.add_argument("--spec", default=None, help="cohort spec JSON (overrides flags)")
    p.add_argument("--n-pd", type=int, default=10)
    p.add_argument("--n-hc", type=int, default=10)
    p.add_argument("--tasks", default="1,2,3,4,5,6,7,8")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("extract", help="extract per-task feature CSVs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("select", help="run feature selection on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="selection.json")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("train", help="select, search and train on all rows")
    p.add_argument("--features", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="model.json")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated evaluation of one task")
    p.add_argument("--features", required=True)
    p.add_argument("--cv", default="loocv", choices=("loocv", "kfold"))
    p.add_argument("--k-folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default="report.json")
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ensemble", help="weighted vote across task reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--mode", default="top3", choices=("top3", "top5", "all"))
    p.add_argument("--uniform-weights", action="store_true")
    p.add_argument("--out", default="ensemble.json")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("report", help="summarize a report JSON")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def cli_dispatch(argv):
    """Parse and run; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage/help; map usage errors to 1
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except InkparkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


def main():
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
