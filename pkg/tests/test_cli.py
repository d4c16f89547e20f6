"""
End-to-end tests of the scatternet command line on tiny problems.
"""
import pytest

from scatternet.exceptions import ConfigurationError, InversionError, ValidationError
from scatternet.main import _subparser, build_parser, main
from scatternet.models.inversion import InversionTrace, IterationRecord
from scatternet.models.run_config import RunConfig

TINY = ["--grid", "8x8", "--cells-per-wavelength", "10", "--tx", "8", "--rx", "8", "--radius-wavelengths", "3"]


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "tiny.nisd"
    assert main(["generate", *TINY, "--count", "12", "--seed", "1", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def weights_file(data_file):
    path = data_file.parent / "tiny.nisw"
    code = main([
        "train", "--data", str(data_file), "--modules", "2", "--epochs", "2", "--pretrain-epochs", "1",
        "--kernels", "3,3,3", "--channels", "4,2", "--batch", "4", "--val-frac", "0.2", "--init-std", "0.1",
        "--out", str(path),
    ])
    assert code == 0
    return path


class TestGenerate:
    """Test cases for the generate command."""

    def test_summary_line(self, tmp_path, capsys):
        assert main(["generate", *TINY, "--count", "2", "--out", str(tmp_path / "a.nisd")]) == 0

        assert capsys.readouterr().out.strip() == "generated count=2 grid=8x8 snr=inf"

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        first, second = tmp_path / "one.nisd", tmp_path / "four.nisd"
        common = ["generate", *TINY, "--count", "4", "--snr", "30", "--seed", "5"]

        assert main(["--threads", "1", *common, "--out", str(first)]) == 0
        assert main(["--threads", "4", *common, "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert b"snr_db=30.0\n" in first.read_bytes()

    def test_letters(self, tmp_path, capsys):
        assert main(["generate", *TINY, "--source", "letters", "--count", "3", "--out", str(tmp_path / "l.nisd")]) == 0
        assert "count=3" in capsys.readouterr().out

    def test_sub_cell_forward_solve(self, tmp_path, capsys):
        plain, fine = tmp_path / "plain.nisd", tmp_path / "fine.nisd"

        assert main(["generate", *TINY, "--count", "1", "--out", str(plain)]) == 0
        assert main(["generate", *TINY, "--count", "1", "--oversample", "2", "--out", str(fine)]) == 0
        assert plain.read_bytes() != fine.read_bytes()

    def test_rejects_zero_oversample(self, tmp_path):
        assert main(["generate", *TINY, "--oversample", "0", "--out", str(tmp_path / "x.nisd")]) == 2

    def test_unknown_source(self, tmp_path, capsys):
        assert main(["generate", *TINY, "--source", "circles", "--out", str(tmp_path / "x.nisd")]) == 2
        assert capsys.readouterr().err.startswith("error code=CONFIG_ERROR")

    def test_bad_snr(self, tmp_path):
        assert main(["generate", *TINY, "--snr", "nan", "--out", str(tmp_path / "x.nisd")]) == 2

    def test_non_square_grid(self, tmp_path):
        assert main(["generate", "--grid", "8x6", "--out", str(tmp_path / "x.nisd")]) == 2


class TestInvert:
    """Test cases for the invert command."""

    def test_backpropagation(self, data_file, tmp_path, capsys):
        out = tmp_path / "bp"
        assert main(["invert", "--method", "bp", "--data", str(data_file), "--out", str(out)]) == 0

        line = capsys.readouterr().out.strip()
        assert line.startswith("method=bp index=0 ssim=")
        assert "iterations=0" in line
        assert (tmp_path / "bp_trace.csv").read_text() == "iteration,data_residual,objective\n"
        assert (tmp_path / "bp_recon.pgm").read_bytes().startswith(b"P5\n8 8\n255\n")
        assert (tmp_path / "bp_truth.pgm").exists()

    def test_csi_trace(self, data_file, tmp_path, capsys):
        out = tmp_path / "csi"
        assert main(["invert", "--method", "csi", "--iters", "3", "--index", "2",
                     "--data", str(data_file), "--out", str(out)]) == 0

        assert "iterations=3" in capsys.readouterr().out
        assert len((tmp_path / "csi_trace.csv").read_text().splitlines()) == 4

    def test_dbim(self, data_file, tmp_path, capsys):
        assert main(["invert", "--method", "dbim", "--iters", "2", "--transform", "haar", "--tau", "1e-3",
                     "--data", str(data_file), "--out", str(tmp_path / "dbim")]) == 0

        assert capsys.readouterr().out.startswith("method=dbim")
        assert len((tmp_path / "dbim_trace.csv").read_text().splitlines()) <= 3

    def test_unknown_method(self, data_file, tmp_path, capsys):
        code = main(["invert", "--method", "magic", "--data", str(data_file), "--out", str(tmp_path / "x")])

        assert code == 2
        assert "error code=CONFIG_ERROR" in capsys.readouterr().err

    def test_index_out_of_range(self, data_file, tmp_path):
        assert main(["invert", "--method", "bp", "--index", "12", "--data", str(data_file),
                     "--out", str(tmp_path / "x")]) == 2

    def test_missing_data(self, tmp_path):
        assert main(["invert", "--method", "bp", "--data", str(tmp_path / "none.nisd"),
                     "--out", str(tmp_path / "x")]) == 2

    def test_failed_inversion_keeps_partial_trace(self, data_file, tmp_path, capsys, mocker):
        trace = InversionTrace(method="csi")
        trace.append(IterationRecord(iteration=1, data_residual=0.5, objective=1.0))
        mocker.patch("scatternet.commands.invert.csi_solve", side_effect=InversionError("stalled", trace=trace))

        code = main(["invert", "--method", "csi", "--data", str(data_file), "--out", str(tmp_path / "f")])

        assert code == 1
        assert "error code=INVERSION_ERROR" in capsys.readouterr().err
        assert (tmp_path / "f_trace.csv").read_text().splitlines()[1] == "1,0.5,1.0"

    def test_runtime_validation_failure_is_not_usage_error(self, data_file, tmp_path, capsys, mocker):
        mocker.patch(
            "scatternet.commands.invert.csi_solve", side_effect=ValidationError("Initial sources have shape (3, 3)")
        )

        code = main(["invert", "--method", "csi", "--data", str(data_file), "--out", str(tmp_path / "v")])

        assert code == 1
        assert "error code=VALIDATION_ERROR" in capsys.readouterr().err


class TestTrainAndEval:
    """Test cases for the train and eval commands."""

    def test_train_outputs(self, weights_file, capsys):
        history = weights_file.with_name("tiny_history.csv").read_text().splitlines()

        assert weights_file.read_bytes()[:4] == b"NISW"
        assert history[0].startswith("epoch,stage,module,train_loss,val_loss,lr_0")
        assert len(history) == 1 + 2 * 1 + 1

    def test_train_rejects_fractions(self, data_file, tmp_path):
        assert main(["train", "--data", str(data_file), "--val-frac", "0.5", "--test-frac", "0.5",
                     "--out", str(tmp_path / "w.nisw")]) == 2

    def test_train_rejects_even_kernel(self, data_file, tmp_path):
        assert main(["train", "--data", str(data_file), "--kernels", "3,4,3",
                     "--out", str(tmp_path / "w.nisw")]) == 2

    def test_eval(self, weights_file, data_file, tmp_path, capsys):
        out = tmp_path / "eval"
        assert main(["eval", "--weights", str(weights_file), "--data", str(data_file), "--out", str(out)]) == 0

        line = capsys.readouterr().out.strip()
        assert line.startswith("bp_ssim=") and "net_ssim=" in line and "net_mse=" in line
        assert len((tmp_path / "eval_net_metrics.csv").read_text().splitlines()) == 13
        assert len((tmp_path / "eval_bp_metrics.csv").read_text().splitlines()) == 13
        assert (tmp_path / "eval_grid_net.pgm").read_bytes().startswith(b"P5\n32 24\n255\n")
        assert not (tmp_path / "eval_net_00000_recon.pgm").exists()

    def test_eval_truncated_cascade_with_images(self, weights_file, data_file, tmp_path):
        out = tmp_path / "eval1"
        assert main(["eval", "--weights", str(weights_file), "--data", str(data_file),
                     "--modules", "1", "--images", "--out", str(out)]) == 0

        assert (tmp_path / "eval1_net_00011_recon.pgm").exists()

    def test_eval_too_many_modules(self, weights_file, data_file, tmp_path):
        assert main(["eval", "--weights", str(weights_file), "--data", str(data_file),
                     "--modules", "3", "--out", str(tmp_path / "x")]) == 2


class TestConfigFile:
    """Test cases for --config handling."""

    def test_values_become_defaults(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(f"# tiny run\ncount = 3\ncells-per-wavelength = 10\nout = {tmp_path / 'cfg.nisd'}\n")

        assert main(["--config", str(config), "generate", "--grid", "8x8", "--tx", "8", "--rx", "8",
                     "--radius-wavelengths", "3"]) == 0
        assert "count=3" in capsys.readouterr().out
        assert (tmp_path / "cfg.nisd").exists()

    def test_explicit_flag_wins(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("count = 3\n")

        assert main(["--config", str(config), "generate", *TINY, "--count", "1",
                     "--out", str(tmp_path / "x.nisd")]) == 0
        assert "count=1" in capsys.readouterr().out

    def test_unknown_key(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("colour = blue\n")

        assert main(["--config", str(config), "generate", "--out", str(tmp_path / "x.nisd")]) == 2
        assert "colour" in capsys.readouterr().err

    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "generate" in capsys.readouterr().out

    def test_parse(self):
        config = RunConfig.parse("--seed = 4\nsnr=30 # noisy\n\n")

        assert config.entries == {"seed": "4", "snr": "30"}

    @pytest.mark.parametrize("text", ["seed 4\n", "= 4\n", "seed = 1\nseed = 2\n"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigurationError):
            RunConfig.parse(text)

    def test_boolean_values(self):
        parser = build_parser()
        values = RunConfig.parse("residual = yes\nbins = 4\n").resolve(parser, _subparser(parser, "eval"))

        assert values == {"residual": True, "bins": 4}

    def test_missing_config(self, tmp_path):
        assert main(["--config", str(tmp_path / "none.cfg"), "generate", "--out", "x"]) == 2
