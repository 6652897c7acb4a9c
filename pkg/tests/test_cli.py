import json
import math
from pathlib import Path

import pytest

from wickllt.cli import main
from wickllt.serialize import sha256_file


def write_config(tmp_path: Path, name: str, data: dict) -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=1))
    return path


def base_llt_config(**overrides):
    data = {
        "schema_version": 1,
        "seed": 424242,
        "space": {"dimension": 1, "max_degree": 16},
        "density": {
            "kind": "coefficients",
            "terms": [{"index": [2], "coeff": 0.1}, {"index": [3], "coeff": 0.05}],
        },
        "alpha": 0.5,
        "n_values": [4, 16],
        "distance": {"method": "quadrature", "nodes_per_axis": 32},
    }
    data.update(overrides)
    return data


class TestAuditCommand:
    def test_unit_density_passes(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "a.json",
            {
                "schema_version": 1,
                "seed": 1,
                "space": {"dimension": 1, "max_degree": 8},
                "density": {"kind": "coefficients", "terms": []},
            },
        )
        assert main(["audit", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
        report = json.loads((tmp_path / "out" / "audit.json").read_text())
        assert report["all_passed"] is True

    def test_bad_normalization_exits_one_and_names_check(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "a.json",
            {
                "schema_version": 1,
                "seed": 1,
                "space": {"dimension": 1, "max_degree": 8},
                "density": {"kind": "coefficients", "coeffs": [0.5] + [0.0] * 8},
            },
        )
        assert main(["audit", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 1
        err = capsys.readouterr().err
        assert "normalization" in err

    def test_mixture_reports_sufficient_condition(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "a.json",
            {
                "schema_version": 1,
                "seed": 1,
                "space": {"dimension": 1, "max_degree": 12},
                "density": {
                    "kind": "shift_mixture",
                    "weights": [0.5, 0.5],
                    "shifts": [[0.4], [-0.4]],
                },
            },
        )
        assert main(["audit", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
        report = json.loads((tmp_path / "out" / "audit.json").read_text())
        assert report["shift_variance_total"] == pytest.approx(0.16)


class TestLltCommand:
    def test_fixed_point_distances_zero(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "c.json",
            base_llt_config(
                density={"kind": "gaussian_cov", "g2": [[0.2]]},
                space={"dimension": 1, "max_degree": 14},
                n_values=[2, 5],
            ),
        )
        assert main(["llt", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
        rows = (tmp_path / "out" / "rate.csv").read_text().strip().splitlines()
        assert rows[0] == "n,l1,bound,err,seconds"
        for line in rows[1:]:
            assert float(line.split(",")[1]) <= 1e-10

    def test_corpus_run_and_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", base_llt_config())
        out = tmp_path / "out"
        assert main(["llt", "--config", str(cfg), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["audit"]["all_passed"] is True
        assert not summary["audit_overridden"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["artifact_sha256"]) == {"rate.csv", "summary.json"}
        assert manifest["library_version"]

    def test_determinism_across_threads_and_reruns(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", base_llt_config())
        digests = []
        for run, threads in (("r1", "1"), ("r2", "4"), ("r3", "1")):
            out = tmp_path / run
            assert (
                main(
                    [
                        "llt",
                        "--config",
                        str(cfg),
                        "--out",
                        str(out),
                        "--threads",
                        threads,
                    ]
                )
                == 0
            )
            digests.append(
                (sha256_file(out / "rate.csv"), sha256_file(out / "summary.json"))
            )
        assert digests[0] == digests[1] == digests[2]

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "c.json",
            base_llt_config(distance={"method": "mc", "samples": 4000}),
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["llt", "--config", str(cfg), "--out", str(out_a)]) == 0
        assert main(
            ["llt", "--config", str(cfg), "--out", str(out_b), "--seed", "7"]
        ) == 0
        assert sha256_file(out_a / "rate.csv") != sha256_file(out_b / "rate.csv")

    def test_override_audit_watermarks(self, tmp_path):
        # the cubic corpus density dips negative near -3.9; a wide screening
        # grid catches the dip and fails the audit, while the sweep itself is
        # still mathematically sound
        bad = base_llt_config(
            n_values=[4],
            audit_grid={"halfwidth": 6.0, "points_per_axis": 121},
        )
        cfg = write_config(tmp_path, "c.json", bad)
        out = tmp_path / "out"
        assert main(["llt", "--config", str(cfg), "--out", str(out)]) == 1
        assert (
            main(
                [
                    "llt",
                    "--config",
                    str(cfg),
                    "--out",
                    str(out),
                    "--override-audit",
                ]
            )
            == 0
        )
        summary = json.loads((out / "summary.json").read_text())
        assert summary["audit_overridden"] is True
        assert not summary["audit"]["all_passed"]

    @pytest.mark.parametrize(
        "dim,method",
        [(1, "quadrature"), (2, "quadrature"), (4, "mc")],
    )
    def test_dimension_sweep_product_density(self, tmp_path, dim, method):
        # the same per-axis density replicated across dimensions; the bound
        # constant and the distances come out per dimension
        distance = (
            {"method": "quadrature", "nodes_per_axis": 20}
            if method == "quadrature"
            else {"method": "mc", "samples": 10000}
        )
        cfg = write_config(
            tmp_path,
            "c.json",
            base_llt_config(
                space={"dimension": dim, "max_degree": 8},
                density={"kind": "product_hermite", "axis_coeffs": [1.0, 0.0, 0.1]},
                n_values=[4, 16],
                distance=distance,
            ),
        )
        out = tmp_path / "out"
        assert main(["llt", "--config", str(cfg), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["constant"] > 0.0
        rows = summary["rows"]
        assert all(r["l1"] <= r["bound"] + r["err"] + 1e-12 for r in rows)

    def test_wall_times_zeroed_by_default(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", base_llt_config(n_values=[4]))
        out = tmp_path / "out"
        main(["llt", "--config", str(cfg), "--out", str(out)])
        for line in (out / "rate.csv").read_text().strip().splitlines()[1:]:
            assert float(line.split(",")[4]) == 0.0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["stage_wall_seconds"]["sweep"] > 0


class TestValidateCommand:
    def test_default_suite_passes(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "v.json",
            {
                "schema_version": 1,
                "seed": 99,
                "validate": {"dimension": 2, "max_degree": 8, "ks_samples": 20000},
            },
        )
        out = tmp_path / "out"
        assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "validate.json").read_text())
        assert report["all_passed"] is True
        names = {r["name"] for r in report["identities"]}
        assert {"orthogonality", "functor", "exponential_group_law", "young"} <= names

    @pytest.mark.parametrize(
        "identity",
        ["orthogonality", "exponential_group_law", "self_similarity", "young"],
    )
    def test_injected_error_detected(self, tmp_path, identity):
        cfg = write_config(
            tmp_path,
            "v.json",
            {
                "schema_version": 1,
                "seed": 99,
                "validate": {
                    "dimension": 2,
                    "max_degree": 8,
                    "ks_samples": 4000,
                    "inject_error": identity,
                },
            },
        )
        out = tmp_path / "out"
        assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 1
        report = json.loads((out / "validate.json").read_text())
        failing = [r["name"] for r in report["identities"] if not r["passed"]]
        assert failing == [identity]

    def test_small_degree_reports_tail_bounds(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "v.json",
            {
                "schema_version": 1,
                "seed": 7,
                "validate": {"dimension": 2, "max_degree": 4, "ks_samples": 8000},
            },
        )
        out = tmp_path / "out"
        assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "validate.json").read_text())
        s_result = next(
            r for r in report["identities"] if r["name"] == "s_transform_factorization"
        )
        assert s_result["tail_bound"] > 0.0


class TestSdeCommand:
    def test_zero_drift_trivial(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "s.json",
            {
                "schema_version": 1,
                "seed": 5,
                "sde": {
                    "drift": {"kind": "zero"},
                    "steps": 4,
                    "paths": 64,
                    "max_degree": 4,
                },
            },
        )
        out = tmp_path / "out"
        assert main(["sde", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "sde_report.json").read_text())
        assert report["novikov_estimate"] == 1.0
        assert report["drift_energy_estimate"] == 0.0
        density = json.loads((out / "density.json").read_text())
        assert density["coeffs"][0] == 1.0
        assert all(c == 0.0 for c in density["coeffs"][1:])

    def test_constant_half_drift_values(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "s.json",
            {
                "schema_version": 1,
                "seed": 5,
                "sde": {
                    "drift": {"kind": "constant", "value": 0.5},
                    "steps": 8,
                    "paths": 1024,
                    "max_degree": 6,
                },
            },
        )
        out = tmp_path / "out"
        assert main(["sde", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "sde_report.json").read_text())
        assert report["novikov_estimate"] == pytest.approx(math.exp(0.125), rel=1e-15)
        assert report["drift_energy_estimate"] == 0.25
        assert report["drift_energy_passed"] is True

    def test_sin_drift_with_llt(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "s.json",
            {
                "schema_version": 1,
                "seed": 11,
                "space": {"dimension": 8, "max_degree": 8},
                "alpha": 0.5,
                "n_values": [4, 16],
                "distance": {"method": "mc", "samples": 6000},
                "sde": {
                    "drift": {"kind": "scaled_sin", "scale": 0.5},
                    "steps": 8,
                    "paths": 2000,
                    "max_degree": 8,
                    "run_llt": True,
                },
            },
        )
        out = tmp_path / "out"
        assert main(["sde", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "sde_report.json").read_text())
        assert report["drift_energy_passed"] is True
        rows = (out / "rate.csv").read_text().strip().splitlines()[1:]
        l1s = [float(r.split(",")[1]) for r in rows]
        bounds = [float(r.split(",")[2]) for r in rows]
        errs = [float(r.split(",")[3]) for r in rows]
        assert all(v <= b + e for v, b, e in zip(l1s, bounds, errs))


class TestBuildXi:
    def test_writes_series_and_report(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "x.json",
            {
                "schema_version": 1,
                "seed": 5,
                "space": {"dimension": 1, "max_degree": 12},
                "density": {"kind": "gaussian_cov", "g2": [[0.2]]},
            },
        )
        out = tmp_path / "out"
        assert main(["build-xi", "--config", str(cfg), "--out", str(out)]) == 0
        data = json.loads((out / "xi_series.json").read_text())
        assert data["g2"] == [[0.2]]
        assert data["series"]["coeffs"][0] == 1.0
        assert data["series"]["dimension"] == 1
        report = json.loads((out / "xi_report.json").read_text())
        assert report["norm_sq_eigenproduct"] == pytest.approx((1 - 0.16) ** -0.5)


class TestConfigErrors:
    def test_unknown_field_exit_two(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "c.json",
            {**base_llt_config(), "extra_field": 1},
        )
        assert main(["llt", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "extra_field" in capsys.readouterr().err

    def test_unknown_nested_field_exit_two(self, tmp_path, capsys):
        data = base_llt_config()
        data["distance"]["nodess"] = 3
        cfg = write_config(tmp_path, "c.json", data)
        assert main(["llt", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "nodess" in capsys.readouterr().err

    def test_malformed_json_exit_two(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"schema_version": 1,,}')
        assert main(["llt", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
        assert "line" in capsys.readouterr().err

    def test_wrong_schema_version(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {**base_llt_config(), "schema_version": 2})
        assert main(["llt", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_alpha_domain_checked(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", base_llt_config(alpha=1.0))
        assert main(["llt", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_missing_file(self, tmp_path):
        assert (
            main(["llt", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
            == 2
        )
