from gols.cli import main, read_config_file


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestHeuristic:
    def test_iris_row(self, capsys):
        code, out, _ = run_cli(capsys, "heuristic", "--m", "150", "--d", "4",
                               "--k", "3")
        assert code == 0
        assert out.strip() == "3"

    def test_custom_cr(self, capsys):
        code, out, _ = run_cli(capsys, "heuristic", "--m", "699", "--d", "9",
                               "--k", "2", "--cr", "1.5")
        assert code == 0
        assert out.strip() == "8"


class TestTrain:
    def test_writes_expected_files(self, capsys, iris_path, tmp_path):
        code, out, _ = run_cli(capsys, "train", "--dataset", str(iris_path),
                               "--optimizer", "sgd", "--step", "golsi",
                               "--iters", "15", "--runs", "1", "--seed", "0",
                               "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "curve_iris_sgd_golsi.csv").exists()
        assert (tmp_path / "envelope_iris_sgd_golsi.csv").exists()
        assert (tmp_path / "summary.csv").exists()
        assert "final train loss" in out

    def test_multiple_optimizers(self, capsys, iris_path, tmp_path):
        code, _, _ = run_cli(capsys, "train", "--dataset", str(iris_path),
                             "--optimizer", "sgd,adagrad", "--iters", "8",
                             "--runs", "1", "--out", str(tmp_path))
        assert code == 0
        assert len(list(tmp_path.glob("curve_*.csv"))) == 2

    def test_missing_dataset(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "train", "--iters", "5",
                               "--out", str(tmp_path))
        assert code == 2
        assert "dataset" in err

    def test_unknown_optimizer(self, capsys, iris_path, tmp_path):
        code, _, err = run_cli(capsys, "train", "--dataset", str(iris_path),
                               "--optimizer", "rmsprop", "--out", str(tmp_path))
        assert code == 2
        assert "rmsprop" in err

    def test_plots_flag(self, capsys, iris_path, tmp_path):
        code, _, _ = run_cli(capsys, "train", "--dataset", str(iris_path),
                             "--iters", "8", "--runs", "1", "--plots",
                             "--out", str(tmp_path))
        assert code == 0
        assert list(tmp_path.glob("curves_*.png"))

    def test_byte_determinism(self, capsys, iris_path, tmp_path):
        for sub in ("a", "b"):
            code, _, _ = run_cli(capsys, "train", "--dataset", str(iris_path),
                                 "--iters", "10", "--runs", "2", "--seed", "5",
                                 "--out", str(tmp_path / sub))
            assert code == 0
        for name in ("curve_iris_sgd_golsi.csv", "summary.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()


class TestConfigFile:
    def test_file_supplies_settings(self, capsys, iris_path, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"dataset = {iris_path}\n"
                       "optimizer = adagrad\n"
                       "iters = 6\n"
                       "runs = 1\n"
                       "# a comment\n"
                       "seed = 2\n")
        code, _, _ = run_cli(capsys, "train", "--config", str(cfg),
                             "--out", str(tmp_path / "out"))
        assert code == 0
        assert (tmp_path / "out" / "curve_iris_adagrad_golsi.csv").exists()

    def test_cli_overrides_file(self, capsys, iris_path, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"dataset = {iris_path}\noptimizer = adagrad\n"
                       "iters = 6\nruns = 1\n")
        code, _, _ = run_cli(capsys, "train", "--config", str(cfg),
                             "--optimizer", "sgd", "--out", str(tmp_path / "out"))
        assert code == 0
        assert (tmp_path / "out" / "curve_iris_sgd_golsi.csv").exists()
        assert not (tmp_path / "out" / "curve_iris_adagrad_golsi.csv").exists()

    def test_unknown_key_rejected(self, capsys, iris_path, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"dataset = {iris_path}\nlearning_rate = 3\n")
        code, _, err = run_cli(capsys, "train", "--config", str(cfg),
                               "--out", str(tmp_path / "out"))
        assert code == 2
        assert "learning_rate" in err

    def test_parse_bool_and_comments(self, tmp_path):
        cfg = tmp_path / "x.cfg"
        cfg.write_text("paper_literal = true  # archaeology\nseed = 4\n")
        values = read_config_file(cfg)
        assert values == {"paper_literal": "true", "seed": "4"}


class TestScan:
    def test_scan_outputs(self, capsys, iris_path, iris_reference_path, tmp_path):
        code, out, _ = run_cli(capsys, "scan", "--dataset", str(iris_path),
                               "--reference", str(iris_reference_path),
                               "--grid-count", "51", "--runs", "10",
                               "--batch-sizes", "10,76",
                               "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "scan_pdf_b10.csv").exists()
        assert (tmp_path / "scan_pdf_b76.csv").exists()
        assert (tmp_path / "scan_summary.csv").exists()
        assert "support width" in out

    def test_scan_plots(self, capsys, iris_path, iris_reference_path, tmp_path):
        code, _, _ = run_cli(capsys, "scan", "--dataset", str(iris_path),
                             "--reference", str(iris_reference_path),
                             "--grid-count", "26", "--runs", "5",
                             "--batch-sizes", "10", "--plots",
                             "--out", str(tmp_path))
        assert code == 0
        assert (tmp_path / "scan_pdfs.png").exists()


class TestPlotCommand:
    def test_rerenders_from_directory(self, capsys, iris_path, tmp_path):
        out_dir = tmp_path / "run"
        code, _, _ = run_cli(capsys, "train", "--dataset", str(iris_path),
                             "--iters", "8", "--runs", "1",
                             "--out", str(out_dir))
        assert code == 0
        fig_dir = tmp_path / "figs"
        code, _, _ = run_cli(capsys, "plot", "--in", str(out_dir),
                             "--out", str(fig_dir))
        assert code == 0
        assert list(fig_dir.glob("curves_*.png"))
