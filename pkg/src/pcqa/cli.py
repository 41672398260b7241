"""Command-line front door.

Five subcommands cover the full workflow: ``score`` (graph-similarity
metric), ``baseline`` (point-wise metrics), ``distort`` and ``resample``
(fixture generation), and ``eval`` (MOS correlation).

Contract: stdout carries only the requested artifact, stderr carries
line-delimited JSON diagnostics. Exit 0 on success, 2 for I/O, parse, or
flag-validation failures, 3 for domain rejections (empty results,
colorless input with a color signal, and the like). Every command is
deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

from .baselines import METRIC_IDS, run_baselines
from .colorspace import SPACES, ColorSpaceConfig
from .distort import KINDS, DistortionSpec, apply_distortion
from .errors import DomainError, ParseError, ValidationError
from .evaluate import evaluate_records
from .graphsim import POOLING_PRESETS, GraphSimConfig, graphsim
from .jsonutil import canonical_dumps, write_report
from .mos import load_mos_csv
from .ply_io import load_ply, save_ply
from .resample import ResampleConfig, resample, write_keypoints_csv

__all__ = ["main", "build_parser"]


def _emit(report: dict, output: str | None) -> None:
    if output:
        write_report(report, output)
    else:
        print(canonical_dumps(report))


def _diag(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _signal_kinds(raw: str):
    alias = {"coord": "coordinate"}
    kinds = tuple(alias.get(p.strip(), p.strip()) for p in raw.split(",") if p.strip())
    if not kinds:
        raise ValidationError("--signal must name at least one signal kind")
    return kinds[0] if len(kinds) == 1 else kinds


def _score_config(args: argparse.Namespace) -> GraphSimConfig:
    if args.pooling and (args.feature_pooling or args.channel_pooling):
        raise ValidationError("--pooling conflicts with --feature-pooling/--channel-pooling")
    kwargs = dict(
        neighborhood_fraction=args.theta_fraction,
        matching_k=args.matching_k,
        color_space=ColorSpaceConfig(space=args.color_space),
        signal_kind=_signal_kinds(args.signal),
        tau_scope=args.tau_scope,
        normals_k=args.normals_k,
        resample=ResampleConfig(
            count=args.beta,
            ratio=args.beta_ratio,
            filter_length=args.filter_length,
            graph_k=args.graph_k,
            method="high-pass" if args.resample_method == "highpass" else args.resample_method,
            seed=args.seed,
        ),
    )
    if args.pooling:
        return GraphSimConfig.with_pooling_preset(args.pooling, **kwargs)
    kwargs["feature_pooling"] = args.feature_pooling or "multiply"
    kwargs["channel_pooling"] = args.channel_pooling or "weighted-average"
    return GraphSimConfig(**kwargs)


def cmd_score(args: argparse.Namespace) -> int:
    config = _score_config(args)
    ref = load_ply(args.reference)
    dist = load_ply(args.distorted)
    result = graphsim(ref, dist, config, jobs=args.jobs)
    report = result.to_report(config)
    report.update(
        command="score",
        inputs={"reference": args.reference, "distorted": args.distorted},
        content=args.content,
        distortion=args.distortion,
        seed=args.seed,
        scores={"graphsim": result.quality},
    )
    _emit(report, args.output)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    ref = load_ply(args.reference)
    dist = load_ply(args.distorted)
    results = run_baselines(ref, dist, metrics, normals_k=args.normals_k)
    report = {
        "command": "baseline",
        "inputs": {"reference": args.reference, "distorted": args.distorted},
        "content": args.content,
        "distortion": args.distortion,
        "metrics": {
            m: {
                "value": r.value,
                "forward_db": r.forward_db,
                "backward_db": r.backward_db,
            }
            for m, r in results.items()
        },
        "scores": {m: r.value for m, r in results.items()},
    }
    _emit(report, args.output)
    return 0


def cmd_distort(args: argparse.Namespace) -> int:
    spec = DistortionSpec(kind=args.kind, level=args.level, seed=args.seed)
    cloud = load_ply(args.input)
    distorted = apply_distortion(cloud, spec)
    save_ply(distorted, args.output, format=args.ply_format)
    manifest = {
        "command": "distort",
        "input": args.input,
        "output": args.output,
        "spec": spec.to_dict(),
        "points_in": cloud.count,
        "points_out": distorted.count,
    }
    print(canonical_dumps(manifest))
    return 0


def cmd_resample(args: argparse.Namespace) -> int:
    config = ResampleConfig(
        count=args.count,
        ratio=args.beta_ratio,
        filter_length=args.filter_length,
        graph_k=args.graph_k,
        method=args.method,
        seed=args.seed,
    )
    cloud = load_ply(args.input)
    keypoints = resample(cloud, config=config)
    write_keypoints_csv(args.output, cloud, keypoints)
    manifest = {
        "command": "resample",
        "input": args.input,
        "output": args.output,
        "config": config.to_dict(),
        "count": keypoints.count,
    }
    print(canonical_dumps(manifest))
    return 0


def _load_score_reports(directory: str):
    """Collect (content, distortion) -> {metric: value} from report JSONs."""
    root = Path(directory)
    if not root.is_dir():
        raise DomainError(f"not a directory: {directory}")
    table: dict[tuple[str, str], dict[str, float]] = {}
    for path in sorted(root.glob("*.json")):
        try:
            body = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from exc
        scores = body.get("scores")
        if not isinstance(scores, dict):
            continue
        key = (str(body.get("content") or ""), str(body.get("distortion") or ""))
        bucket = table.setdefault(key, {})
        for metric, value in scores.items():
            if metric in bucket:
                raise DomainError(
                    f"{path}: duplicate score for metric '{metric}' at key {key}"
                )
            # Canonical reports store non-finite values as the strings
            # "inf"/"-inf"/"nan", which float() parses directly.
            bucket[metric] = float(value)
    return table


def _eval_one_metric(metric: str, records: list[dict], fit_scope: str) -> dict:
    by_content = evaluate_records(
        [dict(r, group=r["content"]) for r in records], fit_scope=fit_scope
    )
    by_distortion = evaluate_records(
        [dict(r, group=r["distortion"]) for r in records], fit_scope=fit_scope
    )
    body = by_content.to_dict()
    return {
        "overall": {k: body[k] for k in ("size", "plcc", "srocc", "rmse", "fit", "degenerate")},
        "by_content": body["groups"],
        "by_distortion": by_distortion.to_dict()["groups"],
        "excluded_groups": sorted(
            set(body["excluded_groups"]) | set(by_distortion.to_dict()["excluded_groups"])
        ),
    }


def _print_eval_table(report: dict) -> None:
    header = f"{'metric':<12} {'scope':<12} {'group':<16} {'n':>4} {'plcc':>9} {'srocc':>9} {'rmse':>9}"
    print(header)
    print("-" * len(header))

    def row(metric, scope, group, n, p, s, r):
        print(f"{metric:<12} {scope:<12} {group:<16} {n:>4d} {p:>9.4f} {s:>9.4f} {r:>9.4f}")

    for metric in sorted(report["metrics"]):
        body = report["metrics"][metric]
        o = body["overall"]
        row(metric, "overall", "-", o["size"], o["plcc"], o["srocc"], o["rmse"])
        for scope in ("by_content", "by_distortion"):
            for g in body[scope]:
                row(metric, scope[3:], g["name"], g["size"], g["plcc"], g["srocc"], g["rmse"])


def cmd_eval(args: argparse.Namespace) -> int:
    mos = load_mos_csv(args.mos_csv)
    scores = _load_score_reports(args.scores_dir)

    metrics = sorted({m for bucket in scores.values() for m in bucket})
    if not metrics:
        raise DomainError(f"no score reports with a 'scores' object found in {args.scores_dir}")

    missing: list[str] = []
    dropped = 0
    records: dict[str, list[dict]] = {m: [] for m in metrics}
    for mos_row in mos:
        key = (mos_row.content, mos_row.distortion)
        bucket = scores.get(key, {})
        for metric in metrics:
            if metric not in bucket:
                missing.append(f"{metric}:{mos_row.content}/{mos_row.distortion}")
                continue
            value = bucket[metric]
            if not math.isfinite(value):
                dropped += 1
                continue
            records[metric].append(
                {
                    "score": value,
                    "mos": mos_row.mos,
                    "content": mos_row.content,
                    "distortion": mos_row.distortion,
                }
            )
    if missing and not args.allow_partial:
        raise DomainError(
            "missing scores for MOS rows (use --allow-partial to skip): "
            + ", ".join(sorted(missing))
        )

    report = {
        "command": "eval",
        "fit_scope": args.fit_scope,
        "mos_rows": len(mos),
        "non_finite_dropped": dropped,
        "missing": sorted(missing),
        "metrics": {m: _eval_one_metric(m, recs, args.fit_scope) for m, recs in records.items() if recs},
    }
    _print_eval_table(report)
    if args.output:
        write_report(report, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcqa", description="Point-cloud quality assessment toolkit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="graph-similarity quality score for a cloud pair")
    score.add_argument("reference")
    score.add_argument("distorted")
    score.add_argument("--color-space", choices=SPACES, default="gcm")
    score.add_argument("--signal", default="color",
                       help="signal kind(s): color, coordinate, normal, mixed, or a comma list")
    score.add_argument("--theta-fraction", type=float, default=0.1,
                       help="cluster radius as a fraction of the smallest box extent")
    score.add_argument("--matching-k", type=int, default=50,
                       help="neighbor rank that sets the edge cutoff")
    score.add_argument("--filter-length", type=int, default=4)
    score.add_argument("--graph-k", type=int, default=10)
    score.add_argument("--beta-ratio", type=float, default=1e-3,
                       help="keypoint budget as a fraction of the reference size")
    score.add_argument("--beta", type=int, default=None, help="explicit keypoint count")
    score.add_argument("--resample", dest="resample_method",
                       choices=("highpass", "high-pass", "random"), default="high-pass",
                       help="keypoint selection method")
    score.add_argument("--pooling", choices=sorted(POOLING_PRESETS), default=None,
                       help="pooling preset (overrides the two pooling flags)")
    score.add_argument("--feature-pooling", choices=("multiply", "average"), default=None)
    score.add_argument("--channel-pooling", choices=("weighted-average", "multiply"), default=None)
    score.add_argument("--tau-scope", choices=("union", "per-side"), default="union")
    score.add_argument("--normals-k", type=int, default=12)
    score.add_argument("--seed", type=int, default=0)
    score.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker threads for per-keypoint scoring")
    score.add_argument("--content", default="")
    score.add_argument("--distortion", default="")
    score.add_argument("--output", default=None)
    score.set_defaults(func=cmd_score)

    baseline = sub.add_parser("baseline", help="point-wise baseline metrics for a cloud pair")
    baseline.add_argument("reference")
    baseline.add_argument("distorted")
    baseline.add_argument("--metrics", "--metric", default=",".join(METRIC_IDS),
                          help="comma-separated metric ids")
    baseline.add_argument("--normals-k", type=int, default=12)
    baseline.add_argument("--content", default="")
    baseline.add_argument("--distortion", default="")
    baseline.add_argument("--output", default=None)
    baseline.set_defaults(func=cmd_baseline)

    distort = sub.add_parser("distort", help="apply a seeded distortion to a cloud")
    distort.add_argument("input")
    distort.add_argument("--kind", choices=KINDS, required=True)
    distort.add_argument("--level", type=float, required=True)
    distort.add_argument("--seed", type=int, default=0)
    distort.add_argument("--output", required=True, help="destination PLY path")
    distort.add_argument("--ply-format", choices=("binary", "ascii"), default="binary")
    distort.set_defaults(func=cmd_distort)

    res = sub.add_parser("resample", help="select reference keypoints")
    res.add_argument("input")
    res.add_argument("--beta-ratio", type=float, default=1e-3)
    res.add_argument("--count", type=int, default=None)
    res.add_argument("--method", choices=("high-pass", "random"), default="high-pass")
    res.add_argument("--filter-length", type=int, default=4)
    res.add_argument("--graph-k", type=int, default=10)
    res.add_argument("--seed", type=int, default=0)
    res.add_argument("--output", required=True, help="destination CSV path")
    res.set_defaults(func=cmd_resample)

    ev = sub.add_parser("eval", help="correlate score reports against a MOS table")
    ev.add_argument("scores_dir")
    ev.add_argument("mos_csv")
    ev.add_argument("--fit-scope", choices=("global", "per-group"), default="global")
    ev.add_argument("--allow-partial", action="store_true",
                    help="tolerate MOS rows without a matching score")
    ev.add_argument("--output", default=None, help="also write the JSON report here")
    ev.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args)
        for w in caught:
            _diag({"warning": w.category.__name__, "message": str(w.message)})
        return code
    except (ParseError, ValidationError) as exc:
        _diag({"error": type(exc).__name__, "message": str(exc)})
        return 2
    except OSError as exc:
        _diag({"error": type(exc).__name__, "message": str(exc)})
        return 2
    except DomainError as exc:
        _diag({"error": type(exc).__name__, "message": str(exc)})
        return 3


if __name__ == "__main__":
    sys.exit(main())
