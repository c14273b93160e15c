"""Command-line driver.

Subcommands: balance, train, evaluate, run, score, recommend. A JSON
config file supplies experiment settings; unknown keys are rejected so a
typo fails fast instead of silently using a default. Every output file is
written atomically (temp file + rename), and a fixed seed makes each
subcommand's outputs byte-identical across runs.

Exit codes: 0 success, 1 runtime failure, 2 validation or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import data_model, evaluation, feature_scoring, forest, recommender
from .data_model import Dataset, FeatureSchema, derive_seed, load_csv
from .forest import ForestParams
from .recommender import FilterConfig, PipelineConfig, Prediction
from .sampler import SmoteConfig, smote_oversample

_TOP_KEYS = {
    "target",
    "positive_label",
    "roles",
    "mode",
    "test_fraction",
    "seed",
    "smote",
    "forest",
    "filter",
    "recommendation_threshold",
}
_SMOTE_KEYS = {"k_neighbors", "target_ratio"}
_FOREST_KEYS = {"n_trees", "mtry", "max_depth", "min_samples_leaf", "criterion"}
_FILTER_KEYS = {"methods", "top_k"}


def _reject_unknown(doc: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValueError(f"unknown {where} key(s): {', '.join(unknown)}")


def _expect(doc: dict, key: str, types, where: str, default):
    value = doc.get(key, default)
    if value is None or value is default:
        return value
    if not isinstance(value, types) or isinstance(value, bool):
        raise ValueError(f"config {where}.{key} has the wrong type")
    return value


@dataclass(frozen=True)
class Settings:
    """Everything a subcommand might need, merged from config and flags."""

    target: Optional[str]
    positive_label: Optional[str]
    roles: dict[str, str]
    mode: str
    test_fraction: float
    seed: int
    smote: Optional[SmoteConfig]
    forest: ForestParams
    filter: FilterConfig
    recommendation_threshold: Optional[float]


def _load_settings(args: argparse.Namespace) -> Settings:
    doc: dict = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"no such config file: {path}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("config root must be a JSON object")
        _reject_unknown(doc, _TOP_KEYS, "config")

    roles = doc.get("roles", {})
    if not isinstance(roles, dict):
        raise ValueError("config roles must be an object of feature -> role")
    for name, role in roles.items():
        if role not in (data_model.ROLE_CONTEXT, data_model.ROLE_TECHNIQUE):
            raise ValueError(f"config roles[{name!r}] must be 'context' or 'technique'")

    smote_doc = doc.get("smote", {})
    if smote_doc is None:
        smote_cfg = None
    else:
        if not isinstance(smote_doc, dict):
            raise ValueError("config smote must be an object or null")
        _reject_unknown(smote_doc, _SMOTE_KEYS, "config smote")
        smote_cfg = SmoteConfig(
            k_neighbors=_expect(smote_doc, "k_neighbors", int, "smote", 5),
            target_ratio=float(_expect(smote_doc, "target_ratio", (int, float), "smote", 1.0)),
            seed=0,
        )

    forest_doc = doc.get("forest", {})
    if not isinstance(forest_doc, dict):
        raise ValueError("config forest must be an object")
    _reject_unknown(forest_doc, _FOREST_KEYS, "config forest")
    forest_cfg = ForestParams(
        n_trees=_expect(forest_doc, "n_trees", int, "forest", 100),
        mtry=_expect(forest_doc, "mtry", int, "forest", None),
        max_depth=_expect(forest_doc, "max_depth", int, "forest", None),
        min_samples_leaf=_expect(forest_doc, "min_samples_leaf", int, "forest", 1),
        criterion=_expect(forest_doc, "criterion", str, "forest", "gini"),
        seed=0,
    )

    filter_doc = doc.get("filter", {})
    if not isinstance(filter_doc, dict):
        raise ValueError("config filter must be an object")
    _reject_unknown(filter_doc, _FILTER_KEYS, "config filter")
    methods = filter_doc.get("methods", list(feature_scoring.METHODS))
    if not isinstance(methods, list) or not all(isinstance(m, str) for m in methods):
        raise ValueError("config filter.methods must be a list of method names")
    filter_cfg = FilterConfig(
        methods=tuple(methods),
        top_k=_expect(filter_doc, "top_k", int, "filter", 10),
    )

    mode = args.mode or _expect(doc, "mode", str, "config", recommender.MODE_SOUND)
    if mode not in recommender.MODES:
        raise ValueError(f"mode must be one of {recommender.MODES}, got {mode!r}")
    seed = args.seed if args.seed is not None else _expect(doc, "seed", int, "config", 0)
    threshold = _expect(doc, "recommendation_threshold", (int, float), "config", None)

    return Settings(
        target=getattr(args, "target", None) or _expect(doc, "target", str, "config", None),
        positive_label=getattr(args, "positive_label", None)
        or _expect(doc, "positive_label", str, "config", None),
        roles=dict(roles),
        mode=mode,
        test_fraction=float(_expect(doc, "test_fraction", (int, float), "config", 0.2)),
        seed=int(seed),
        smote=smote_cfg,
        forest=forest_cfg,
        filter=filter_cfg,
        recommendation_threshold=None if threshold is None else float(threshold),
    )


def _pipeline_config(s: Settings) -> PipelineConfig:
    if not s.target:
        raise ValueError("a target column is required (config 'target' or --target)")
    return PipelineConfig(
        target_name=s.target,
        mode=s.mode,
        test_fraction=s.test_fraction,
        smote=s.smote,
        forest=s.forest,
        filter=s.filter,
        recommendation_threshold=s.recommendation_threshold,
        seed=s.seed,
    )


def _load_input(args: argparse.Namespace, s: Settings) -> Dataset:
    if not s.target:
        raise ValueError("a target column is required (config 'target' or --target)")
    return load_csv(args.input, s.target, role_map=s.roles, positive_label=s.positive_label)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    return obj


def _dump_json(doc, compact: bool = False) -> str:
    kwargs = {"separators": (",", ":")} if compact else {"indent": 2}
    return json.dumps(_jsonable(doc), sort_keys=True, allow_nan=False, **kwargs) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv_atomic(d: Dataset, path: Path, include_provenance: bool) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        data_model.write_csv(d, tmp, include_provenance=include_provenance)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out_dir)


# --- model bundle: forest + the schema needed to score new rows ---------


def _schema_to_doc(d: Dataset) -> dict:
    return {
        "schema": [
            {"name": f.name, "role": f.role, "levels": list(f.levels)} for f in d.schema
        ],
        "target_name": d.target_name,
        "target_levels": list(d.target_levels),
    }


def _bundle_to_doc(m: forest.RandomForestModel, d: Dataset) -> dict:
    doc = forest.model_to_dict(m)
    doc.update(_schema_to_doc(d))
    return doc


@dataclass(frozen=True)
class ModelBundle:
    model: forest.RandomForestModel
    schema: tuple[FeatureSchema, ...]
    target_name: str
    target_levels: tuple[str, str]


def _load_bundle(path: str) -> ModelBundle:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such model file: {p}")
    doc = json.loads(p.read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("model file must hold a JSON object")
    for key in ("schema", "target_name", "target_levels"):
        if key not in doc:
            raise ValueError(f"model file lacks {key!r}")
    schema = tuple(
        FeatureSchema(f["name"], f["role"], tuple(f["levels"])) for f in doc["schema"]
    )
    levels = doc["target_levels"]
    if len(levels) != 2:
        raise ValueError("model target_levels must list exactly two values")
    return ModelBundle(
        model=forest.model_from_dict(doc),
        schema=schema,
        target_name=str(doc["target_name"]),
        target_levels=(str(levels[0]), str(levels[1])),
    )


# --- SVG hull plot -------------------------------------------------------

_PLOT_SIZE = 600


def render_hulls_svg(
    hull_imbalanced, hull_balanced, size: int = _PLOT_SIZE
) -> str:
    """Both hulls as polylines in a square viewport.

    A point maps to (fpr * size, (1 - tpr) * size) so (0,0) sits bottom
    left and the perfect corner (fpr 0, tpr 1) top left.
    """
    w = h = size

    def poly(hull) -> str:
        return " ".join(f"{p.fpr * w!r},{(1 - p.tpr) * h!r}" for p in hull)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="-80 -30 {w + 170} {h + 110}"'
        ' font-family="sans-serif" font-size="14">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="#444"/>',
        f'<line x1="0" y1="{h}" x2="{w}" y2="0" stroke="#bbb" stroke-dasharray="6 4"/>',
    ]
    for i in range(6):
        t = i / 5
        x = t * w
        y = (1 - t) * h
        label = f"{t:g}"
        lines.append(f'<line x1="{x!r}" y1="{h}" x2="{x!r}" y2="{h + 6}" stroke="#444"/>')
        lines.append(
            f'<text x="{x!r}" y="{h + 24}" text-anchor="middle">{label}</text>'
        )
        lines.append(f'<line x1="-6" y1="{y!r}" x2="0" y2="{y!r}" stroke="#444"/>')
        lines.append(f'<text x="-12" y="{y + 5!r}" text-anchor="end">{label}</text>')
    lines.append(
        f'<text x="{w / 2!r}" y="{h + 56}" text-anchor="middle">false positive rate</text>'
    )
    lines.append(
        f'<text x="{-h / 2!r}" y="-48" transform="rotate(-90)" text-anchor="middle">'
        "true positive rate</text>"
    )
    lines.append(
        f'<polyline id="hull-imbalanced" fill="none" stroke="#767676" stroke-width="2"'
        f' points="{poly(hull_imbalanced)}"/>'
    )
    lines.append(
        f'<polyline id="hull-balanced" fill="none" stroke="#c0392b" stroke-width="2"'
        f' points="{poly(hull_balanced)}"/>'
    )
    legend_y = h + 84
    lines.append(
        f'<line x1="0" y1="{legend_y}" x2="28" y2="{legend_y}" stroke="#767676" stroke-width="2"/>'
    )
    lines.append(f'<text x="34" y="{legend_y + 5}">imbalanced</text>')
    lines.append(
        f'<line x1="160" y1="{legend_y}" x2="188" y2="{legend_y}" stroke="#c0392b" stroke-width="2"/>'
    )
    lines.append(f'<text x="194" y="{legend_y + 5}">balanced (oversampled)</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# --- subcommands ----------------------------------------------------------


def cmd_balance(args: argparse.Namespace) -> int:
    s = _load_settings(args)
    d = _load_input(args, s)
    smote_cfg = s.smote if s.smote is not None else SmoteConfig()
    smote_cfg = replace(smote_cfg, seed=derive_seed(s.seed, recommender.STREAM_SMOTE))
    balanced = smote_oversample(d, smote_cfg)
    out = _out_dir(args) / "balanced.csv"
    _write_csv_atomic(balanced, out, include_provenance=True)
    summary = data_model.summarize(balanced)
    print(
        f"balanced {d.n_rows} -> {balanced.n_rows} rows "
        f"({summary.n_majority} majority / {summary.n_minority} minority) -> {out}"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    s = _load_settings(args)
    d = _load_input(args, s)
    params = replace(s.forest, seed=s.seed)
    model = forest.train_forest(d, params)
    out = _out_dir(args) / "model.json"
    _write_atomic(out, _dump_json(_bundle_to_doc(model, d), compact=True))
    print(
        f"trained {model.n_trees} trees (mtry {model.mtry}, criterion {model.criterion}) "
        f"on {d.n_rows} rows -> {out}"
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    s = _load_settings(args)
    bundle = _load_bundle(args.model)
    positive = bundle.target_levels[1]
    d = load_csv(
        args.input,
        bundle.target_name,
        positive_label=positive,
        schema=bundle.schema,
    )
    scores = forest.predict_proba_many(bundle.model, d.X)
    preds = (scores >= 0.5).astype(np.int64)
    conf = evaluation.confusion(d.y, preds)
    analysis = evaluation.analyze_scores(scores, d.y)
    tp, fp, tn, fn = conf
    doc = {
        "format_version": 1,
        "n_rows": d.n_rows,
        "accuracy": evaluation.accuracy(conf),
        "precision": evaluation.precision(conf),
        "recall": evaluation.recall(conf),
        "auc": analysis.auc,
        "auch": analysis.auch,
        "confusion": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
    }
    out = _out_dir(args) / "evaluation.json"
    _write_atomic(out, _dump_json(doc))
    print(
        f"evaluated {d.n_rows} rows: accuracy {doc['accuracy']:.4f}, "
        f"auc {doc['auc']:.4f} -> {out}"
    )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    s = _load_settings(args)
    cfg = _pipeline_config(s)
    d = _load_input(args, s)
    cmp = recommender.compare_balancing(d, cfg)
    row = cmp.report.rows[0]
    out_dir = _out_dir(args)
    report_doc = {
        "format_version": 1,
        "target": cfg.target_name,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "comparison": {
            "hull_verdict": cmp.verdict,
            "auc_delta": cmp.auc_delta,
            "accuracy_delta": cmp.accuracy_delta,
            "entropy_delta": cmp.entropy_delta,
        },
        "report": evaluation.report_to_dict(cmp.report),
    }
    _write_atomic(out_dir / "report.json", _dump_json(report_doc))
    _write_atomic(
        out_dir / "roc_imbalanced.csv", evaluation.roc_analysis_to_csv(row.imbalanced.roc)
    )
    _write_atomic(
        out_dir / "roc_balanced.csv", evaluation.roc_analysis_to_csv(row.balanced.roc)
    )
    _write_atomic(
        out_dir / "roc_hulls.svg",
        render_hulls_svg(row.imbalanced.roc.hull, row.balanced.roc.hull),
    )
    print(
        f"run complete ({cfg.mode} mode): auc {row.imbalanced.roc.auc:.4f} -> "
        f"{row.balanced.roc.auc:.4f}, hull verdict {cmp.verdict}; wrote report.json, "
        f"roc_imbalanced.csv, roc_balanced.csv, roc_hulls.svg in {out_dir}"
    )
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    s = _load_settings(args)
    d = _load_input(args, s)
    out_dir = _out_dir(args)
    for method in s.filter.methods:
        table = feature_scoring.score_all(d, method)
        _write_atomic(out_dir / f"scores_{method}.csv", feature_scoring.table_to_csv(table))
    print(f"scored {d.n_features} features with {len(s.filter.methods)} method(s)")
    if len(s.filter.methods) > 1:
        selection = feature_scoring.select_best_filter(
            d,
            s.filter.methods,
            s.filter.top_k,
            s.forest,
            eval_seed=s.seed,
            test_fraction=s.test_fraction,
            smote_template=s.smote if s.smote is not None else SmoteConfig(),
        )
        _write_atomic(out_dir / "best_method.txt", selection.method + "\n")
        for method in s.filter.methods:
            print(f"  {method}: auch {selection.auch_by_method[method]:.6f}")
        print(f"best filter: {selection.method} -> {out_dir / 'best_method.txt'}")
    return 0


def _method_from_scores_path(path: str) -> str:
    stem = Path(path).stem
    if stem.startswith("scores_") and stem[len("scores_"):] in feature_scoring.METHODS:
        return stem[len("scores_"):]
    return feature_scoring.METHOD_MUTUAL_INFO


def cmd_recommend(args: argparse.Namespace) -> int:
    s = _load_settings(args)
    threshold = args.threshold if args.threshold is not None else s.recommendation_threshold
    if threshold is None:
        raise ValueError(
            "a recommendation threshold is required (--threshold or config key)"
        )
    bundle = _load_bundle(args.model)
    scores_path = Path(args.scores)
    if not scores_path.exists():
        raise FileNotFoundError(f"no such scores file: {scores_path}")
    table = feature_scoring.table_from_csv(
        scores_path.read_text(encoding="utf-8"), _method_from_scores_path(args.scores)
    )
    row_path = Path(args.row)
    if not row_path.exists():
        raise FileNotFoundError(f"no such context row file: {row_path}")
    row_doc = json.loads(row_path.read_text(encoding="utf-8"))
    if not isinstance(row_doc, dict) or not all(
        isinstance(v, str) for v in row_doc.values()
    ):
        raise ValueError("context row must be a JSON object of feature -> level string")
    values = []
    for f in bundle.schema:
        if f.name not in row_doc:
            raise ValueError(f"context row lacks feature {f.name!r}")
        values.append(f.encode(row_doc[f.name]))
    extra = sorted(set(row_doc) - {f.name for f in bundle.schema})
    if extra:
        raise ValueError(f"context row has unknown feature(s): {', '.join(extra)}")
    proba = forest.predict_proba(bundle.model, np.asarray(values, dtype=np.int64))
    prediction = Prediction(label=bundle.target_name, probability=proba)
    rs = recommender.form_recommendations(table, prediction, float(threshold))
    doc = {"format_version": 1, **recommender.recommendation_set_to_dict(rs)}
    out = _out_dir(args) / "recommendations.json"
    _write_atomic(out, _dump_json(doc))

    use = "use" if proba >= 0.5 else "do not use"
    print(f"prediction: {use} {bundle.target_name} (probability {proba:.3f})")
    if rs.collaborative:
        print("also consider (technique features above threshold):")
        for e in rs.collaborative:
            print(f"  {e.feature_name}: {e.score:g}")
    else:
        print("no technique features score above the threshold")
    if rs.content_based:
        print("driven by (context features above threshold):")
        for e in rs.content_based:
            print(f"  {e.feature_name}: {e.score:g}")
    else:
        print("no context features score above the threshold")
    print(f"wrote {out}")
    return 0


# --- argument parsing -----------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out-dir", default=".", help="output directory (default: .)")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument(
        "--mode", choices=list(recommender.MODES), help="pipeline mode (overrides config)"
    )
    common.add_argument("--target", help="target column (overrides config)")
    common.add_argument("--positive-label", help="positive target value (overrides config)")

    parser = argparse.ArgumentParser(
        prog="elicitrec",
        description="Elicitation-technique recommendation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_input(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--input", required=True, help="input CSV")
        return p

    with_input(
        sub.add_parser("balance", parents=[common], help="oversample the minority class")
    ).set_defaults(func=cmd_balance)
    with_input(
        sub.add_parser("train", parents=[common], help="train a forest on the input as-is")
    ).set_defaults(func=cmd_train)
    p_eval = with_input(
        sub.add_parser("evaluate", parents=[common], help="evaluate a trained model")
    )
    p_eval.add_argument("--model", required=True, help="model.json from train")
    p_eval.set_defaults(func=cmd_evaluate)
    with_input(
        sub.add_parser(
            "run", parents=[common], help="full two-arm pipeline with report and plots"
        )
    ).set_defaults(func=cmd_run)
    with_input(
        sub.add_parser("score", parents=[common], help="filter-score features")
    ).set_defaults(func=cmd_score)
    p_rec = sub.add_parser(
        "recommend", parents=[common], help="recommend techniques for a context row"
    )
    p_rec.add_argument("--model", required=True, help="model.json from train")
    p_rec.add_argument("--scores", required=True, help="scores_<method>.csv from score")
    p_rec.add_argument("--row", required=True, help="JSON file with one context row")
    p_rec.add_argument("--threshold", type=float, help="recommendation score threshold")
    p_rec.set_defaults(func=cmd_recommend)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, IsADirectoryError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure distinct from bad input
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
