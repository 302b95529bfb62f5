"""Config validation, task runs, manifests, determinism, exit codes."""

import json

import pytest

from hyperres import cli
from hyperres.errors import ValidationError


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def base_config(task="invariants", **extra):
    cfg = {"schema_version": 1, "task": task, "dimension": 3,
           "potential": {"kind": "bump", "amplitude": 1.0, "radius": 1.0}}
    cfg.update(extra)
    return cfg


class TestConfigValidation:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = base_config()
        cfg["tolerances"] = {"specfun_tol": 1e-10}  # typo'd name
        with pytest.raises(ValidationError, match="specfun_tol"):
            cli.load_config(write_config(tmp_path, cfg))

    def test_unknown_top_level_key(self, tmp_path):
        cfg = base_config(bogus=1)
        with pytest.raises(ValidationError, match="bogus"):
            cli.load_config(write_config(tmp_path, cfg))

    def test_missing_required_block(self, tmp_path):
        cfg = base_config(task="phase")
        with pytest.raises(ValidationError, match="xi_grid"):
            cli.load_config(write_config(tmp_path, cfg))

    def test_schema_version(self, tmp_path):
        cfg = base_config()
        cfg["schema_version"] = 2
        with pytest.raises(ValidationError, match="schema_version"):
            cli.load_config(write_config(tmp_path, cfg))

    def test_task_mismatch(self, tmp_path):
        path = write_config(tmp_path, base_config(task="invariants"))
        with pytest.raises(ValidationError, match="does not match"):
            cli.load_config(path, task="phase")

    def test_dimension_check(self, tmp_path):
        cfg = base_config()
        cfg["dimension"] = 1
        with pytest.raises(ValidationError, match="dimension"):
            cli.load_config(write_config(tmp_path, cfg))

    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HYPERRES_HEAT_TAIL", "1e-7")
        cfg = cli.load_config(write_config(tmp_path, base_config()))
        assert cfg.tolerances["heat_tail"] == 1e-7
        monkeypatch.setenv("HYPERRES_HEAT_TAIL", "abc")
        with pytest.raises(ValidationError):
            cli.load_config(write_config(tmp_path, base_config()))

    def test_validation_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config(bogus=2))
        assert cli.main(["invariants", "--config", path]) == 2
        assert "validation error" in capsys.readouterr().err


class TestRuns:
    def test_invariants_zero_potential(self, tmp_path, capsys):
        cfg = base_config()
        cfg["potential"] = {"kind": "zero"}
        cfg["output"] = {"dir": str(tmp_path / "out")}
        path = write_config(tmp_path, cfg)
        assert cli.main(["invariants", "--config", path]) == 0
        data = json.loads((tmp_path / "out" / "invariants.json").read_text())
        assert data["a1"] == 0.0 and data["a2"] == 0.0

    def test_invariants_deterministic_manifest(self, tmp_path):
        for sub in ("a", "b"):
            cfg = base_config()
            cfg["output"] = {"dir": str(tmp_path / sub)}
            cli.main(["invariants", "--config", write_config(tmp_path, cfg, f"{sub}.json")])
        blob_a = (tmp_path / "a" / "invariants.json").read_bytes()
        blob_b = (tmp_path / "b" / "invariants.json").read_bytes()
        assert blob_a == blob_b
        man_a = json.loads((tmp_path / "a" / "manifest.json").read_text())
        man_b = json.loads((tmp_path / "b" / "manifest.json").read_text())
        assert man_a["files"] == man_b["files"]
        assert "config" in man_a

    def test_phase_zero_potential(self, tmp_path):
        cfg = base_config(task="phase")
        cfg["potential"] = {"kind": "zero"}
        cfg["xi_grid"] = {"xi_max": 1.5}
        cfg["L_max"] = 2
        cfg["output"] = {"dir": str(tmp_path / "out")}
        rc = cli.main(["phase", "--config", write_config(tmp_path, cfg), "--threads", "1"])
        assert rc == 0
        lines = (tmp_path / "out" / "phase.csv").read_text().splitlines()
        assert lines[0] == "xi,sigma,dsigma,tail_estimate"
        sig = [float(l.split(",")[1]) for l in lines[1:]]
        assert max(abs(s) for s in sig) < 1e-8

    def test_kernels_table(self, tmp_path):
        cfg = base_config(task="kernels")
        cfg["kernel"] = {"which": "resolvent", "s": [1.2, 0.7],
                        "r_min": 0.1, "r_max": 2.0, "points": 10}
        cfg["output"] = {"dir": str(tmp_path / "out")}
        assert cli.main(["kernels", "--config", write_config(tmp_path, cfg)]) == 0
        lines = (tmp_path / "out" / "kernel.csv").read_text().splitlines()
        assert lines[0] == "r,re,im"
        assert len(lines) == 11

    def test_manifest_checksums_cover_files(self, tmp_path):
        cfg = base_config(task="kernels")
        cfg["kernel"] = {"which": "spectral", "xi": 1.0, "points": 5}
        cfg["output"] = {"dir": str(tmp_path / "out")}
        cli.main(["kernels", "--config", write_config(tmp_path, cfg)])
        man = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert set(man["files"]) == {"kernel.csv"}
        import hashlib
        blob = (tmp_path / "out" / "kernel.csv").read_bytes()
        assert man["files"]["kernel.csv"] == hashlib.sha256(blob).hexdigest()

    def test_verify_subset(self, tmp_path, capsys):
        cfg = base_config(task="verify")
        cfg["criteria"] = [1]
        cfg["output"] = {"dir": str(tmp_path / "out")}
        rc = cli.main(["verify", "--config", write_config(tmp_path, cfg)])
        assert rc == 0
        data = json.loads((tmp_path / "out" / "acceptance.json").read_text())
        assert data["all_passed"] is True
        assert data["criteria"][0]["index"] == 1
        out = capsys.readouterr().out
        assert "criterion  1" in out and "PASS" in out
