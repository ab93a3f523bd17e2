import json

import pytest

from speciesid import fixture
from speciesid.cli import main as cli_main
from speciesid.config import PipelineConfig, config_from_mapping, load_config
from speciesid.errors import ConfigError, StageError
from speciesid.pipeline import (
    ablation_table,
    emit_run_artifacts,
    run_ablation,
    run_experiment,
)


@pytest.fixture(scope="module")
def separable_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sep_pipe")
    fixture.make_feature_fixture(out, fixture.PROFILES["separable"])
    return out


@pytest.fixture(scope="module")
def image_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("img_pipe")
    fixture.make_image_fixture(out, n_classes=3, counts=(4,), size=36, seed=5)
    return out


def sep_cfg(separable_dir, **kw):
    base = {
        "manifest": str(separable_dir / "manifest.csv"),
        "seed": 7,
        "repeats": 2,
        "ctv_grid": (50, 90),
        "out_dir": str(separable_dir / "out"),
    }
    base.update(kw)
    return config_from_mapping(base)


class TestConfig:
    def test_file_parsing(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(
            "# demo config\n"
            'manifest = "m.csv"\n'
            "seed = 42\n"
            "smote = true\n"
            "svm_c = 2.5\n"
            "ctv_grid = [10, 50, 90]\n",
            encoding="utf-8",
        )
        cfg = load_config(cfg_file)
        assert cfg.manifest == "m.csv"
        assert cfg.seed == 42
        assert cfg.smote is True
        assert cfg.svm_c == 2.5
        assert cfg.ctv_grid == (10, 50, 90)

    def test_overrides_win(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("manifest = m.csv\nseed = 1\n", encoding="utf-8")
        cfg = load_config(cfg_file, {"seed": 9})
        assert cfg.seed == 9

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            config_from_mapping({"manifest": "m.csv", "bogus": 1})

    def test_rotation_with_fvec_contradiction(self):
        with pytest.raises(ConfigError, match="rotation"):
            config_from_mapping(
                {"manifest": "m.csv", "feature_source": "fvec", "rotation": True}
            )

    def test_off_grid_ctv(self):
        with pytest.raises(ConfigError, match="ctv_grid"):
            config_from_mapping({"manifest": "m.csv", "ctv_grid": (15,)})

    def test_manifest_required(self):
        with pytest.raises(ConfigError):
            PipelineConfig(manifest="")


class TestRunExperiment:
    def test_missing_manifest_names_ingest(self, tmp_path):
        cfg = config_from_mapping({"manifest": str(tmp_path / "nope.csv")})
        with pytest.raises(StageError, match=r"\[ingest\]"):
            run_experiment(cfg)

    def test_rotation_count_law_in_split_sizes(self, image_dir):
        cfg = config_from_mapping(
            {
                "manifest": str(image_dir / "manifest.csv"),
                "seed": 3,
                "repeats": 1,
                "ctv_grid": (90,),
                "rotation": True,
                "mock_grid": 3,
            }
        )
        report = run_experiment(cfg)
        total = 12  # 3 classes x 4 originals
        for split in report.splits:
            train_originals = total - split.n_test
            assert split.n_train == train_originals * 9  # original + 8 rotations

    def test_rotation_off_uses_originals_only(self, image_dir):
        cfg = config_from_mapping(
            {
                "manifest": str(image_dir / "manifest.csv"),
                "seed": 3,
                "repeats": 1,
                "ctv_grid": (90,),
                "mock_grid": 3,
            }
        )
        report = run_experiment(cfg)
        for split in report.splits:
            assert split.n_train + split.n_test == 12

    def test_deterministic_artifacts(self, separable_dir, tmp_path):
        cfg = sep_cfg(separable_dir, out_dir=str(tmp_path / "out"))
        paths_a = emit_run_artifacts(run_experiment(cfg), cfg.out_dir)
        blobs_a = {k: p.read_bytes() for k, p in paths_a.items()}
        paths_b = emit_run_artifacts(run_experiment(cfg), cfg.out_dir)
        assert {k: p.read_bytes() for k, p in paths_b.items()} == blobs_a

    def test_report_json_schema(self, separable_dir):
        report = run_experiment(sep_cfg(separable_dir))
        payload = json.loads(report.to_json())
        assert set(payload) == {
            "config",
            "ctv_percent",
            "retained_components",
            "mean_accuracy",
            "std_accuracy",
            "splits",
            "ctv_rows",
            "confusion",
            "convergence_warnings",
        }
        assert len(payload["splits"]) == 4
        assert payload["confusion"]["labels"] == [f"species_{i:02d}" for i in range(5)]
        matrix = payload["confusion"]["matrix"]
        assert sum(sum(row) for row in matrix) == sum(
            s["n_test"] for s in payload["splits"]
        )


@pytest.fixture(scope="module")
def gan_dir(tmp_path_factory):
    from dataclasses import replace

    out = tmp_path_factory.mktemp("gan_pipe")
    spec = replace(fixture.PROFILES["separable"], gan_per_class=3, noise_scale=1.5)
    fixture.make_feature_fixture(out, spec)
    return out


class TestRunAblation:

    def test_ladder_shape_and_deltas(self, gan_dir):
        cfg = config_from_mapping(
            {
                "manifest": str(gan_dir / "manifest.csv"),
                "seed": 2,
                "repeats": 2,
                "ctv_grid": (50, 90),
            }
        )
        rungs = run_ablation(cfg)
        assert [r.name for r in rungs] == [
            "baseline",
            "+rotation",
            "+gan",
            "+rotation+gan+smote",
        ]
        # feature fixture: the rotation rung is skipped with a notice
        assert rungs[1].report is None and "image" in rungs[1].notice
        assert rungs[2].report is not None
        table = ablation_table(rungs)
        assert "baseline" in table and "NA" in table

    def test_ladder_deterministic(self, gan_dir):
        cfg = config_from_mapping(
            {
                "manifest": str(gan_dir / "manifest.csv"),
                "seed": 2,
                "repeats": 2,
                "ctv_grid": (50,),
            }
        )
        a = [r.report.to_json() for r in run_ablation(cfg) if r.report]
        b = [r.report.to_json() for r in run_ablation(cfg) if r.report]
        assert a == b

    def test_gan_rung_skipped_without_gan_rows(self, separable_dir):
        rungs = run_ablation(sep_cfg(separable_dir))
        gan_rung = next(r for r in rungs if r.name == "+gan")
        assert gan_rung.report is None
        assert "gan" in gan_rung.notice


class TestCli:
    def test_run_and_exit_zero(self, separable_dir, tmp_path, capsys):
        code = cli_main(
            [
                "run",
                "--manifest",
                str(separable_dir / "manifest.csv"),
                "--out",
                str(tmp_path / "out"),
                "--seed",
                "3",
                "--set",
                "repeats = 2",
                "--set",
                "ctv_grid = [50]",
            ]
        )
        assert code == 0
        assert (tmp_path / "out" / "report.json").exists()
        assert (tmp_path / "out" / "table.txt").exists()
        assert (tmp_path / "out" / "ctv_curve.csv").exists()

    def test_config_error_exit_two(self, capsys):
        assert cli_main(["run", "--set", "seed = 3"]) == 2

    def test_data_error_exit_three(self, tmp_path, capsys):
        assert cli_main(["run", "--manifest", str(tmp_path / "missing.csv")]) == 3

    def test_make_fixture_and_sweep(self, tmp_path, capsys):
        assert cli_main(["make-fixture", "--out", str(tmp_path / "fx"),
                         "--profile", "separable"]) == 0
        code = cli_main(
            [
                "sweep-ctv",
                "--manifest",
                str(tmp_path / "fx" / "manifest.csv"),
                "--out",
                str(tmp_path / "fx" / "out"),
                "--set",
                "repeats = 1",
            ]
        )
        assert code == 0
        curve = (tmp_path / "fx" / "out" / "ctv_curve.csv").read_text()
        assert len(curve.strip().splitlines()) == 11  # header + 10 grid rows

    def test_extract_mock_round_trip(self, image_dir, tmp_path, capsys):
        out_fvec = tmp_path / "mock.fvec"
        code = cli_main(
            [
                "extract-mock",
                "--manifest",
                str(image_dir / "manifest.csv"),
                "--set",
                "mock_grid = 3",
                "--out-fvec",
                str(out_fvec),
            ]
        )
        assert code == 0
        from speciesid.features import read_feature_table

        table = read_feature_table(out_fvec)
        # pooled descriptors: one value per stat map
        assert table.dims == 8 and len(table) == 12

    def test_heatmap_command(self, image_dir, tmp_path, capsys):
        code = cli_main(
            [
                "heatmap",
                "--manifest",
                str(image_dir / "manifest.csv"),
                "--out",
                str(tmp_path / "heat"),
                "--set",
                "mock_grid = 3",
                "--set",
                "ctv_grid = [50]",
                "--samples",
                "s0000,s0004",
            ]
        )
        assert code == 0
        written = sorted((tmp_path / "heat" / "heatmaps").glob("*.png"))
        assert [p.name for p in written] == ["s0000.png", "s0004.png"]

    def test_heatmap_per_class(self, image_dir, tmp_path, capsys):
        code = cli_main(
            [
                "heatmap",
                "--manifest",
                str(image_dir / "manifest.csv"),
                "--out",
                str(tmp_path / "heatc"),
                "--set",
                "mock_grid = 3",
                "--per-class",
            ]
        )
        assert code == 0
        written = sorted((tmp_path / "heatc" / "heatmaps").glob("class_*.png"))
        assert len(written) == 3

    def test_ablate_command(self, separable_dir, tmp_path, capsys):
        code = cli_main(
            [
                "ablate",
                "--manifest",
                str(separable_dir / "manifest.csv"),
                "--out",
                str(tmp_path / "abl"),
                "--set",
                "repeats = 1",
                "--set",
                "ctv_grid = [50]",
            ]
        )
        assert code == 0
        assert (tmp_path / "abl" / "table.txt").exists()
