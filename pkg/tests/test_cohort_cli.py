import csv
import json

import numpy as np
import pytest

from lesionbench.cli import main
from lesionbench.cohort import (
    evaluate_cohort,
    load_manifest,
    size_bin,
    subgroup_analysis,
)
from lesionbench.errors import ManifestError
from lesionbench.nifti import read_mask, write_mask

from conftest import make_mask, random_mask


def test_size_bin_boundaries():
    assert size_bin(0.0) == "under5"
    assert size_bin(4.999) == "under5"
    assert size_bin(5.0) == "from5to20"
    assert size_bin(19.999) == "from5to20"
    assert size_bin(20.0) == "over20"
    assert size_bin(250.0) == "over20"


def write_cohort(tmp_path, n_cases=4, algorithms=("alpha", "beta"), seed=5):
    """Write NIfTI masks plus a CSV manifest; returns the manifest path."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n_cases):
        cid = f"case{i:03d}"
        gt = random_mask(rng, shape=(12, 12, 12), density=0.15)
        gt_path = tmp_path / f"{cid}_gt.nii.gz"
        write_mask(gt, gt_path)
        row = {"case_id": cid, "gt_path": str(gt_path), "center_id": f"c{i % 2}",
               "phase": "acute" if i % 2 else "subacute", "nihss": str(3 + i)}
        for alg in algorithms:
            noisy = gt.data.copy()
            flips = rng.random(noisy.shape) < 0.05
            noisy[flips] = 1 - noisy[flips]
            pred_path = tmp_path / f"{cid}_{alg}.nii.gz"
            write_mask(make_mask(noisy), pred_path)
            row[f"pred_{alg}"] = str(pred_path)
        rows.append(row)
    manifest = tmp_path / "manifest.csv"
    with open(manifest, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return manifest


class TestManifest:
    def test_csv_roundtrip(self, tmp_path):
        manifest = write_cohort(tmp_path)
        records = load_manifest(manifest)
        assert [r.case_id for r in records] == sorted(r.case_id for r in records)
        assert set(records[0].predictions) == {"alpha", "beta"}
        assert records[0].clinical["nihss"] == "3"
        assert records[0].phase in ("acute", "subacute")

    def test_json_manifest_with_nested_predictions(self, tmp_path):
        doc = [
            {
                "case_id": "x1",
                "gt_path": "/data/x1.nii.gz",
                "predictions": {"alpha": "/data/x1_a.nii.gz"},
                "seen_center": True,
            }
        ]
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        records = load_manifest(path)
        assert records[0].predictions == {"alpha": "/data/x1_a.nii.gz"}
        assert records[0].seen_center is True

    def test_duplicate_case_id(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("case_id,gt_path,pred_a\nc1,g.nii,p.nii\nc1,g.nii,p.nii\n")
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(ManifestError):
            load_manifest(tmp_path / "nope.csv")

    def test_missing_columns_and_empty(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("name,path\nx,y\n")
        with pytest.raises(ManifestError):
            load_manifest(bad)
        empty = tmp_path / "empty.csv"
        empty.write_text("case_id,gt_path\n")
        with pytest.raises(ManifestError, match="empty"):
            load_manifest(empty)

    def test_bad_phase(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("case_id,gt_path,phase\nc1,g.nii,chronic\n")
        with pytest.raises(ManifestError, match="phase"):
            load_manifest(path)


class TestEvaluateCohort:
    def test_full_run(self, tmp_path):
        records = load_manifest(write_cohort(tmp_path))
        result = evaluate_cohort(records)
        assert len(result.rows) == 4 * 2
        assert result.failures == 0
        keys = [(r["case_id"], r["algorithm"]) for r in result.rows]
        assert keys == sorted(keys)
        for r in result.rows:
            assert 0.0 <= r["dsc"] <= 1.0
        assert set(result.summaries) == {"alpha", "beta"}
        assert result.summaries["alpha"]["dsc"]["n"] == 4
        info = result.case_info["case000"]
        assert info["size_bin"] == size_bin(info["gt_volume_ml"])

    def test_missing_file_recorded_not_fatal(self, tmp_path):
        records = load_manifest(write_cohort(tmp_path))
        records[1].predictions["alpha"] = str(tmp_path / "gone.nii.gz")
        result = evaluate_cohort(records)
        assert result.failures == 1
        bad = [r for r in result.rows if r["error"] is not None]
        assert len(bad) == 1
        assert bad[0]["dsc"] is None

    def test_parallel_matches_serial(self, tmp_path):
        records = load_manifest(write_cohort(tmp_path, n_cases=6))
        serial = evaluate_cohort(records, workers=1)
        parallel = evaluate_cohort(records, workers=4)
        assert serial.rows == parallel.rows


class TestSubgroupAnalysis:
    def rows_for(self, values, group_offset=0):
        return [
            {"case_id": f"g{group_offset}_{i}", "dsc": v, "error": None}
            for i, v in enumerate(values)
        ]

    def test_identical_groups_not_significant(self):
        values = [0.1, 0.3, 0.5, 0.7, 0.9, 0.2, 0.4, 0.6]
        rows = self.rows_for(values, 0) + self.rows_for(values, 1)
        groups = {r["case_id"]: r["case_id"][:2] for r in rows}
        res = subgroup_analysis(rows, groups, metrics=("dsc",))
        (p,) = res["pairwise"]["dsc"].values()
        assert p > 0.9

    def test_shifted_groups_detected(self):
        lo = self.rows_for([0.05, 0.1, 0.12, 0.08, 0.11, 0.09, 0.07, 0.13], 0)
        hi = self.rows_for([0.85, 0.9, 0.92, 0.88, 0.91, 0.89, 0.87, 0.93], 1)
        groups = {r["case_id"]: r["case_id"][:2] for r in lo + hi}
        res = subgroup_analysis(lo + hi, groups, metrics=("dsc",))
        (p,) = res["pairwise"]["dsc"].values()
        assert p < 0.01
        assert res["groups"]["g1"]["dsc"]["median"] > res["groups"]["g0"]["dsc"]["median"]

    def test_empty_input(self):
        res = subgroup_analysis([], {})
        assert res == {"groups": {}, "pairwise": {}}


class TestCli:
    def test_eval_rank_bootstrap_pipeline(self, tmp_path):
        manifest = write_cohort(tmp_path, n_cases=5)
        eval_out = tmp_path / "eval.json"
        assert main(["eval", "--manifest", str(manifest), "--out", str(eval_out)]) == 0
        assert eval_out.exists() and eval_out.with_suffix(".csv").exists()
        doc = json.loads(eval_out.read_text())
        assert len(doc["cases"]) == 10

        rank_out = tmp_path / "rank.json"
        assert main(["rank", "--metrics", str(eval_out), "--out", str(rank_out)]) == 0
        rank_doc = json.loads(rank_out.read_text())
        assert sorted(rank_doc["final_positions"]) == [1, 2]
        assert {e["team"] for e in rank_doc["leaderboard"]} == {"alpha", "beta"}

        boot_out = tmp_path / "boot.json"
        args = ["bootstrap", "--metrics", str(eval_out), "--n-boot", "50",
                "--seed", "9", "--out", str(boot_out)]
        assert main(args) == 0
        first = boot_out.read_bytes()
        assert main(args) == 0
        assert boot_out.read_bytes() == first  # byte-identical rerun

    def test_eval_rerun_byte_identical(self, tmp_path):
        manifest = write_cohort(tmp_path)
        out = tmp_path / "eval.json"
        main(["eval", "--manifest", str(manifest), "--out", str(out)])
        first = out.read_bytes()
        main(["eval", "--manifest", str(manifest), "--out", str(out)])
        assert out.read_bytes() == first

    def test_eval_partial_failure_exit_code(self, tmp_path):
        manifest = write_cohort(tmp_path)
        text = manifest.read_text().replace("case001_alpha", "missing_alpha")
        manifest.write_text(text)
        code = main(["eval", "--manifest", str(manifest), "--out", str(tmp_path / "e.json")])
        assert code == 3

    def test_validation_exit_code(self, tmp_path):
        code = main(["eval", "--manifest", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "out.json")])
        assert code == 2

    def test_ensemble_inputs(self, tmp_path):
        rng = np.random.default_rng(17)
        paths = []
        masks = [random_mask(rng, shape=(8, 8, 8), density=0.3) for _ in range(3)]
        for i, m in enumerate(masks):
            p = tmp_path / f"m{i}.nii.gz"
            write_mask(m, p)
            paths.append(str(p))
        out = tmp_path / "fused.nii.gz"
        assert main(["ensemble", "--inputs", *paths, "--out", str(out)]) == 0
        fused = read_mask(out)
        votes = sum(m.data.astype(int) for m in masks)
        assert np.array_equal(fused.data, (votes >= 2).astype(np.uint8))

    def test_ensemble_manifest_mode(self, tmp_path):
        manifest = write_cohort(tmp_path, n_cases=3)
        out_dir = tmp_path / "fused"
        code = main(["ensemble", "--manifest", str(manifest),
                     "--algorithms", "alpha,beta", "--out", str(out_dir)])
        assert code == 0
        assert sorted(p.name for p in out_dir.iterdir()) == [
            "case000.nii.gz", "case001.nii.gz", "case002.nii.gz"]

    def test_phenotype_command(self, tmp_path):
        manifest = write_cohort(tmp_path, n_cases=4)
        out = tmp_path / "pheno.json"
        assert main(["phenotype", "--manifest", str(manifest), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["cases"]) == 4
        for row in doc["cases"]:
            assert row["gt_pattern"] is not None
        assert set(doc["classification"]) <= {"alpha", "beta"}

    def test_territory_command(self, tmp_path):
        manifest = write_cohort(tmp_path, n_cases=3)
        from lesionbench.nifti import VolumeHeader, write_volume

        atlas = np.ones((12, 12, 12), dtype=np.int16)
        atlas[6:] = 2
        atlas_path = tmp_path / "atlas.nii.gz"
        write_volume(VolumeHeader(dims=atlas.shape, datatype_code=4,
                                  pixdim=(1, 1, 1)), atlas, atlas_path)
        legend_path = tmp_path / "legend.json"
        legend_path.write_text(json.dumps({"1": "MCA", "2": "PCA"}))
        out = tmp_path / "terr.json"
        code = main(["territory", "--manifest", str(manifest), "--atlas", str(atlas_path),
                     "--legend", str(legend_path), "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert all(r["gt_territory"] in ("MCA", "PCA") for r in doc["cases"])

    def test_agree_command(self, tmp_path):
        manifest = write_cohort(tmp_path, n_cases=5)
        out = tmp_path / "agree.json"
        assert main(["agree", "--manifest", str(manifest), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        for alg in ("alpha", "beta"):
            overall = doc["agreement"][alg]["overall"]
            assert overall["n"] == 5
            assert overall["loa_low"] <= overall["mean_diff"] <= overall["loa_high"]
