import json
import subprocess
import sys

import numpy as np
import pytest

from deephybrid import __version__
from deephybrid.cli import load_config, run_cli
from deephybrid.exceptions import ConfigError
from deephybrid.matrix_core import read_matrix, write_matrix


@pytest.fixture
def low_rank_file(tmp_path, rng):
    path = tmp_path / "in.bin"
    write_matrix(rng.standard_normal((18, 4)) @ rng.standard_normal((4, 24)), path)
    return path


def _manifest(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


class TestDecompose:
    def test_outputs(self, tmp_path, low_rank_file):
        out = tmp_path / "out"
        assert run_cli(["decompose", "--input", str(low_rank_file), "--out", str(out)]) == 0
        man = _manifest(out / "manifest.txt")
        depth = int(man["depth"])
        assert man["version"] == __version__
        assert man["terminated_by"] in ("rank_one", "flat_spectrum")
        assert len(man["input_sha256"]) == 64
        for k in range(1, depth + 1):
            for name in "XYUVS":
                assert (out / f"layer_{k}_{name}.bin").exists()
        lines = (out / "ranks.csv").read_text().splitlines()
        assert lines[0] == "layer,rank_linear,rank_nonlinear" and len(lines) == depth + 1
        assert (out / "loss_history.csv").read_text().startswith("sweep,layer,loss\n")
        x1 = read_matrix(out / "layer_1_X.bin")
        assert x1.shape == (18, int(lines[1].split(",")[1]))

    def test_flag_beats_file(self, tmp_path, low_rank_file):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"rho": 4.0, "seed": 2, "activation": "sigmoid"}))
        out = tmp_path / "out"
        argv = ["decompose", "--input", str(low_rank_file), "--out", str(out),
                "--config", str(cfg), "--rho", "6", "--no-mbp"]
        assert run_cli(argv) == 0
        config = json.loads(_manifest(out / "manifest.txt")["config"])
        assert config["rho"] == 6.0 and config["seed"] == 2 and config["activation"] == "sigmoid"
        assert config["mbp_enabled"] is False

    def test_deterministic(self, tmp_path, low_rank_file):
        blobs = []
        for run in range(2):
            out = tmp_path / f"o{run}"
            assert run_cli(["decompose", "--input", str(low_rank_file), "--out", str(out), "--seed", "4"]) == 0
            blobs.append({p.name: p.read_bytes() for p in out.glob("*.bin")})
        assert blobs[0] == blobs[1]


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["decompose", "--input", "missing.bin", "--out", "o"],
        ["decompose"],
        ["bogus"],
        ["estimate-rank", "x.bin", "--threads", "0"],
    ])
    def test_usage_errors(self, argv, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert run_cli(argv) == 2

    def test_bad_rho(self, tmp_path, low_rank_file, capsys):
        code = run_cli(["decompose", "--input", str(low_rank_file), "--out", str(tmp_path / "o"), "--rho", "0.5"])
        assert code == 2
        assert "rho" in capsys.readouterr().err

    def test_malformed_matrix(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3,x\n")
        assert run_cli(["estimate-rank", str(bad)]) == 2
        assert "line 2, column 2" in capsys.readouterr().err

    def test_all_zero(self, tmp_path):
        z = tmp_path / "z.bin"
        write_matrix(np.zeros((5, 5)), z)
        assert run_cli(["decompose", "--input", str(z), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"nope": 1}')
        with pytest.raises(ConfigError, match="nope"):
            load_config(cfg)


class TestOtherCommands:
    def test_estimate_rank(self, low_rank_file, capsys):
        assert run_cli(["estimate-rank", str(low_rank_file)]) == 0
        fields = capsys.readouterr().out.strip().split(",")
        assert len(fields) == 4 and fields[0] == "4"

    def test_similarity(self, tmp_path, rng, capsys):
        a = rng.standard_normal((3, 40))
        write_matrix(a, tmp_path / "a.bin")
        write_matrix(a, tmp_path / "b.csv")
        assert run_cli(["similarity", "--a", str(tmp_path / "a.bin"), "--b", str(tmp_path / "b.csv")]) == 0
        assert capsys.readouterr().out.strip() == "0,0,0"

    def test_synth_and_identifiability(self, tmp_path, capsys):
        out = tmp_path / "syn"
        argv = ["synth", "--out", str(out), "--rows", "30", "--cols", "40",
                "--ranks", "6,3", "--nranks", "4,2", "--seed", "1"]
        assert run_cli(argv) == 0
        assert read_matrix(out / "noisy.bin").shape == (30, 40)
        assert _manifest(out / "manifest.txt")["ranks"] == "6,3"
        assert run_cli(["identifiability", "--input", str(out / "noisy.bin"), "--initial-rank", "6"]) == 0
        score, n_test, n_retest = capsys.readouterr().out.strip().split(",")
        assert -1.0 <= float(score) <= 1.0
        assert int(n_test) >= 1 and int(n_retest) >= 1

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "deephybrid", "--version"], capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.strip() == __version__
