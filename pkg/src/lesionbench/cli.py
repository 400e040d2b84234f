"""Command-line surface: batch evaluation, ensembling, ranking, bootstraps,
phenotyping, agreement analysis and the rating-study tooling.

Exit codes: 0 success, 2 validation failure, 3 partial case failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import cohort, ensemble, ranking
from .errors import LesionBenchError
from .labeling import connected_components
from .metrics import METRIC_NAMES
from .nifti import read_mask, read_volume, write_mask
from .phenotype import (
    Territory,
    classification_report,
    classify_pattern,
    territory_assignment,
)
from .renders import render_case
from .stats import bland_altman, pearson_r

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def _write_json(doc: dict, out_path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_csv(rows: list[dict], out_path) -> None:
    if not rows:
        return
    fields = list(rows[0].keys())
    with open(out_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _run_meta(args, **extra) -> dict:
    meta = {"command": args.command}
    for key in ("manifest", "connectivity", "seed", "n_boot", "workers", "scheme"):
        if hasattr(args, key) and getattr(args, key) is not None:
            meta[key] = getattr(args, key)
    meta.update(extra)
    return meta


# --- eval -------------------------------------------------------------------

def cmd_eval(args) -> int:
    records = cohort.load_manifest(args.manifest)
    result = cohort.evaluate_cohort(
        records, conn=args.connectivity, workers=args.workers
    )
    doc = {
        "run": _run_meta(args),
        "cases": result.rows,
        "case_info": result.case_info,
        "summaries": result.summaries,
        "failures": result.failures,
    }
    _write_json(doc, args.out)
    _write_csv(result.rows, Path(args.out).with_suffix(".csv"))
    if result.failures:
        print(f"{result.failures} case evaluation(s) failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --- ensemble ---------------------------------------------------------------

def cmd_ensemble(args) -> int:
    if args.inputs:
        masks = [read_mask(p) for p in args.inputs]
        fused = ensemble.majority_vote(masks)
        write_mask(fused, args.out)
        return EXIT_OK

    records = cohort.load_manifest(args.manifest)
    algorithms = args.algorithms.split(",")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for rec in records:
        try:
            masks = [read_mask(rec.predictions[a]) for a in algorithms]
            fused = ensemble.majority_vote(masks)
            write_mask(fused, out_dir / f"{rec.case_id}.nii.gz")
        except (LesionBenchError, KeyError, OSError) as exc:
            print(f"{rec.case_id}: {exc}", file=sys.stderr)
            failures += 1
    return EXIT_PARTIAL if failures else EXIT_OK


# --- rank / bootstrap -------------------------------------------------------

def _matrix_from_eval(path) -> ranking.MetricMatrix:
    with open(path) as f:
        doc = json.load(f)
    rows = doc["cases"]
    teams = sorted({r["algorithm"] for r in rows})
    cases = sorted({r["case_id"] for r in rows})
    values = np.full((len(teams), len(cases), len(METRIC_NAMES)), np.nan)
    tix = {t: i for i, t in enumerate(teams)}
    cix = {c: i for i, c in enumerate(cases)}
    for r in rows:
        if r.get("error") is not None:
            continue
        for k, name in enumerate(METRIC_NAMES):
            values[tix[r["algorithm"]], cix[r["case_id"]], k] = r[name]
    return ranking.MetricMatrix(teams=teams, cases=cases, values=values)


def cmd_rank(args) -> int:
    matrix = _matrix_from_eval(args.metrics)
    if args.scheme == ranking.RANK_THEN_AGGREGATE:
        table = ranking.rank_then_aggregate(matrix)
    else:
        table = ranking.aggregate_then_rank(matrix, args.aggregator)
    significance = ranking.significance_map(matrix)
    doc = {
        "run": _run_meta(args, metrics_file=str(args.metrics)),
        "teams": table.teams,
        "scheme": table.scheme,
        "aggregate_rank_score": table.aggregate_rank_score.tolist(),
        "final_positions": table.final_positions.tolist(),
        "leaderboard": [
            {"position": int(p), "team": t, "score": float(s)}
            for p, t, s in sorted(
                zip(table.final_positions, table.teams, table.aggregate_rank_score),
                key=lambda x: (x[0], x[1]),
            )
        ],
        "significance": {m: mat.tolist() for m, mat in significance.items()},
    }
    _write_json(doc, args.out)
    _write_csv(doc["leaderboard"], Path(args.out).with_suffix(".csv"))
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    matrix = _matrix_from_eval(args.metrics)
    result = ranking.bootstrap_ranks(
        matrix, scheme=args.scheme, n_boot=args.n_boot, seed=args.seed
    )
    hist = result.rank_histogram()
    doc = {
        "run": _run_meta(args, metrics_file=str(args.metrics)),
        "teams": result.teams,
        "scheme": result.scheme,
        "n_boot": args.n_boot,
        "seed": args.seed,
        "rank_histogram": hist.tolist(),
        "mean_position": result.positions.mean(axis=0).tolist(),
    }
    _write_json(doc, args.out)
    return EXIT_OK


# --- phenotype / territory --------------------------------------------------

def cmd_phenotype(args) -> int:
    records = cohort.load_manifest(args.manifest)
    algorithms = sorted({a for r in records for a in r.predictions})
    rows = []
    failures = 0
    for rec in records:
        row = {"case_id": rec.case_id}
        try:
            gt = read_mask(rec.gt_path)
            gt_pattern = classify_pattern(connected_components(gt, args.connectivity))
            row["gt_pattern"] = gt_pattern.label.value
            row["gt_volume_ml"] = gt_pattern.total_volume_ml
            row["size_bin"] = cohort.size_bin(gt_pattern.total_volume_ml)
            for alg in algorithms:
                if alg not in rec.predictions:
                    row[f"pred_pattern_{alg}"] = None
                    continue
                pred = read_mask(rec.predictions[alg])
                pattern = classify_pattern(connected_components(pred, args.connectivity))
                row[f"pred_pattern_{alg}"] = pattern.label.value
            row["error"] = None
        except (LesionBenchError, OSError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            failures += 1
        rows.append(row)

    reports = {}
    ok = [r for r in rows if r["error"] is None]
    classes = sorted({r["gt_pattern"] for r in ok})
    for alg in algorithms:
        pairs = [
            (r["gt_pattern"], r[f"pred_pattern_{alg}"])
            for r in ok
            if r.get(f"pred_pattern_{alg}") is not None
        ]
        if not pairs:
            continue
        all_classes = sorted(set(classes) | {p for _, p in pairs})
        rep = classification_report([t for t, _ in pairs], [p for _, p in pairs], all_classes)
        reports[alg] = {
            "per_class_f1": rep.per_class_f1,
            "balanced_accuracy": rep.balanced_accuracy,
            "confusion": rep.confusion.tolist(),
            "classes": rep.classes,
            "empty_classes": rep.empty_classes,
        }

    doc = {"run": _run_meta(args), "cases": rows, "classification": reports}
    _write_json(doc, args.out)
    _write_csv(rows, Path(args.out).with_suffix(".csv"))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_territory(args) -> int:
    records = cohort.load_manifest(args.manifest)
    algorithms = sorted({a for r in records for a in r.predictions})
    _, atlas = read_volume(args.atlas)
    atlas = np.asarray(atlas).astype(np.int64)
    with open(args.legend) as f:
        legend = {int(k): v for k, v in json.load(f).items()}

    rows = []
    failures = 0
    for rec in records:
        row = {"case_id": rec.case_id}
        try:
            gt = read_mask(rec.gt_path)
            gt_assign = territory_assignment(
                connected_components(gt, args.connectivity), atlas, legend
            )
            row["gt_territory"] = gt_assign.territory.value
            row["gt_tie"] = gt_assign.tie_flag
            for alg in algorithms:
                if alg not in rec.predictions:
                    row[f"pred_territory_{alg}"] = None
                    continue
                pred = read_mask(rec.predictions[alg])
                assign = territory_assignment(
                    connected_components(pred, args.connectivity), atlas, legend
                )
                row[f"pred_territory_{alg}"] = assign.territory.value
            row["error"] = None
        except (LesionBenchError, OSError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            failures += 1
        rows.append(row)

    reports = {}
    ok = [r for r in rows if r["error"] is None]
    classes = [t.value for t in Territory]
    for alg in algorithms:
        pairs = [
            (r["gt_territory"], r[f"pred_territory_{alg}"])
            for r in ok
            if r.get(f"pred_territory_{alg}") is not None
        ]
        if not pairs:
            continue
        rep = classification_report([t for t, _ in pairs], [p for _, p in pairs], classes)
        reports[alg] = {
            "per_class_f1": rep.per_class_f1,
            "balanced_accuracy": rep.balanced_accuracy,
            "confusion": rep.confusion.tolist(),
            "classes": rep.classes,
            "empty_classes": rep.empty_classes,
        }

    doc = {"run": _run_meta(args, atlas=str(args.atlas)), "cases": rows, "classification": reports}
    _write_json(doc, args.out)
    _write_csv(rows, Path(args.out).with_suffix(".csv"))
    return EXIT_PARTIAL if failures else EXIT_OK


# --- agree ------------------------------------------------------------------

def cmd_agree(args) -> int:
    records = cohort.load_manifest(args.manifest)
    algorithms = sorted({a for r in records for a in r.predictions})
    per_case = []
    failures = 0
    for rec in records:
        row = {"case_id": rec.case_id}
        try:
            gt = read_mask(rec.gt_path)
            row["gt_volume_ml"] = gt.volume_ml
            row["size_bin"] = cohort.size_bin(gt.volume_ml)
            for alg in algorithms:
                if alg in rec.predictions:
                    row[f"pred_volume_ml_{alg}"] = read_mask(rec.predictions[alg]).volume_ml
            if args.column:
                row[args.column] = float(rec.clinical.get(args.column))
            row["error"] = None
        except (LesionBenchError, OSError, TypeError, ValueError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            failures += 1
        per_case.append(row)

    ok = [r for r in per_case if r["error"] is None]

    def agreement(rows, alg):
        ref_key = args.column if args.column else "gt_volume_ml"
        pred = [r[f"pred_volume_ml_{alg}"] for r in rows if f"pred_volume_ml_{alg}" in r]
        ref = [r[ref_key] for r in rows if f"pred_volume_ml_{alg}" in r]
        if len(ref) < 2:
            return None
        try:
            r_val = pearson_r(ref, pred)
        except LesionBenchError:
            r_val = None
        ba = bland_altman(ref, pred)
        return {
            "n": len(ref),
            "pearson_r": r_val,
            "mean_diff": ba.mean_diff,
            "sd_diff": ba.sd_diff,
            "loa_low": ba.loa_low,
            "loa_high": ba.loa_high,
            "diff_percentiles": list(ba.diff_percentiles),
        }

    analysis = {}
    for alg in algorithms:
        entry = {"overall": agreement(ok, alg), "by_size_bin": {}}
        for bin_name in ("under5", "from5to20", "over20"):
            subset = [r for r in ok if r["size_bin"] == bin_name]
            entry["by_size_bin"][bin_name] = agreement(subset, alg)
        analysis[alg] = entry

    doc = {"run": _run_meta(args), "cases": per_case, "agreement": analysis}
    _write_json(doc, args.out)
    _write_csv(per_case, Path(args.out).with_suffix(".csv"))
    return EXIT_PARTIAL if failures else EXIT_OK


# --- turing -----------------------------------------------------------------

def cmd_turing_export(args) -> int:
    records = cohort.load_manifest(args.manifest)
    out_dir = Path(args.out)
    pool = []
    failures = 0
    for rec in records:
        try:
            gt = read_mask(rec.gt_path)
            pred = read_mask(rec.predictions[args.algorithm])
            background = None
            if "image" in rec.clinical:
                _, background = read_volume(rec.clinical["image"])
            entry = render_case(
                rec.case_id,
                gt,
                {"expert": gt, "algorithm": pred},
                out_dir / "renders",
                args.seed,
                background=background,
            )
            pool.append(entry)
        except (LesionBenchError, KeyError, OSError) as exc:
            print(f"{rec.case_id}: {exc}", file=sys.stderr)
            failures += 1
    _write_json({"run": _run_meta(args), "pool": pool}, out_dir / "pool.json")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_turing_serve(args) -> int:
    from .turing.service import serve

    serve(
        data_dir=args.data_dir,
        host=args.host,
        port=args.port,
        admin_token=args.admin_token,
        renders_dir=args.renders,
    )
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lesionbench")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=True, seed=False):
        if manifest:
            p.add_argument("--manifest", required=True)
        p.add_argument("--connectivity", type=int, choices=(6, 18, 26), default=26)
        p.add_argument("--workers", type=int, default=1)
        if seed:
            p.add_argument("--seed", type=int, required=True)
        p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="evaluate all (case, algorithm) pairs")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ensemble", help="majority-vote fusion of masks")
    p.add_argument("--inputs", nargs="+", help="explicit mask paths (else use manifest)")
    p.add_argument("--manifest")
    p.add_argument("--algorithms", help="comma-separated algorithm names")
    p.add_argument("--out", required=True, help="output mask path or directory")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("rank", help="leaderboard from an eval result")
    p.add_argument("--metrics", required=True, help="eval JSON output")
    p.add_argument(
        "--scheme",
        choices=(ranking.RANK_THEN_AGGREGATE, ranking.AGGREGATE_THEN_RANK),
        default=ranking.RANK_THEN_AGGREGATE,
    )
    p.add_argument("--aggregator", choices=("median", "mean"), default="median")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("bootstrap", help="bootstrap ranking stability")
    p.add_argument("--metrics", required=True)
    p.add_argument(
        "--scheme",
        choices=(ranking.RANK_THEN_AGGREGATE, ranking.AGGREGATE_THEN_RANK),
        default=ranking.RANK_THEN_AGGREGATE,
    )
    p.add_argument("--n-boot", dest="n_boot", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("phenotype", help="stroke-pattern classification")
    common(p)
    p.set_defaults(func=cmd_phenotype)

    p = sub.add_parser("territory", help="vascular-territory assignment")
    common(p)
    p.add_argument("--atlas", required=True)
    p.add_argument("--legend", required=True, help="JSON {atlas label: territory}")
    p.set_defaults(func=cmd_territory)

    p = sub.add_parser("agree", help="volumetric agreement (Pearson, Bland-Altman)")
    common(p)
    p.add_argument("--column", help="clinical manifest column to correlate against")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("turing", help="rating study tooling")
    tsub = p.add_subparsers(dest="turing_command", required=True)

    tp = tsub.add_parser("export", help="pre-generate blinded renderings")
    tp.add_argument("--manifest", required=True)
    tp.add_argument("--algorithm", required=True)
    tp.add_argument("--seed", type=int, required=True)
    tp.add_argument("--out", required=True, help="output directory")
    tp.set_defaults(func=cmd_turing_export)

    tp = tsub.add_parser("serve", help="run the rating service")
    tp.add_argument("--data-dir", required=True)
    tp.add_argument("--renders")
    tp.add_argument("--host", default="127.0.0.1")
    tp.add_argument("--port", type=int, default=8040)
    tp.add_argument("--admin-token")
    tp.set_defaults(func=cmd_turing_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LesionBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
