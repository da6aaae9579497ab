import csv
import io
import json

import pytest

from cliquecolor import GenSpec, generate
from cliquecolor.cli import SWEEP_HEADER, main
from cliquecolor.errors import InvalidSpec


class TestGenerate:
    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["generate", "--gen", "gnp:n=64,p=0.1", "--seed", "7", "--out", str(a)]) == 0
        assert main(["generate", "--gen", "gnp:n=64,p=0.1", "--seed", "7", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_dregular(self):
        inst = generate(GenSpec.parse("dregular:n=10,d=3"))
        assert all(inst.degree(v) == 3 and len(inst.palettes[v]) == 4 for v in range(10))

    def test_shared_too_small(self):
        with pytest.raises(InvalidSpec):
            generate(GenSpec.parse("dregular:n=10,d=6", palettes="shared:6"))

    def test_powerlaw_valid(self):
        inst = generate(GenSpec.parse("powerlaw:n=100,exponent=2.5,avg=4", seed=2))
        assert all(len(inst.palettes[v]) >= inst.degree(v) + 1 for v in range(100))

    @pytest.mark.parametrize("text", ["blob:n=3", "gnp:n=5,q=1", "gnp:n", "dregular:n=5,d=3", "gnp:n=4,p=2"])
    def test_invalid(self, text):
        with pytest.raises(InvalidSpec):
            generate(GenSpec.parse(text))

    def test_invalid_exit_code(self, capsys):
        assert main(["generate", "--gen", "blob:n=3"]) == 3
        assert "InvalidSpec" in capsys.readouterr().err


class TestRunVerify:
    def _instance(self, tmp_path):
        path = tmp_path / "inst.json"
        main(["generate", "--gen", "gnp:n=80,p=0.1", "--seed", "3", "--out", str(path)])
        return path

    def test_run_then_verify(self, tmp_path):
        inst = self._instance(tmp_path)
        rep, col = tmp_path / "rep.json", tmp_path / "col.json"
        code = main(["run", "--input", str(inst), "--collect-kappa", "0.5", "--constant-C", "4",
                     "--out", str(rep), "--coloring-out", str(col)])
        assert code == 0
        report = json.loads(rep.read_text())
        assert report["verified"] and report["total_rounds"] > 0
        assert main(["verify", "--input", str(inst), "--coloring", str(col)]) == 0

    def test_corrupted_coloring(self, tmp_path, capsys):
        inst = self._instance(tmp_path)
        col = tmp_path / "col.json"
        main(["run", "--input", str(inst), "--out", str(tmp_path / "r.json"), "--coloring-out", str(col)])
        data = json.loads(inst.read_text())
        u, v = data["edges"][0]
        cols = json.loads(col.read_text())["coloring"]
        cols[v] = cols[u]
        col.write_text(json.dumps({"coloring": cols}))
        capsys.readouterr()
        assert main(["verify", "--input", str(inst), "--coloring", str(col)]) == 1
        assert f"monochromatic edge ({min(u, v)},{max(u, v)})" in capsys.readouterr().out

    def test_run_with_gen(self, capsys):
        assert main(["run", "--gen", "dregular:n=20,d=3", "--derand", "sample:4"]) == 0
        assert json.loads(capsys.readouterr().out)["n"] == 20

    def test_needs_one_source(self, capsys):
        assert main(["run"]) == 2
        assert "exactly one" in capsys.readouterr().err

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["verify", "--input", str(bad), "--coloring", str(bad)]) == 2

    def test_budget_breach_exits_1(self, tmp_path):
        inst = self._instance(tmp_path)
        assert main(["run", "--input", str(inst), "--collect-kappa", "0.5", "--constant-C", "4",
                     "--budget", "1", "--out", str(tmp_path / "r.json")]) == 1

    def test_env_mirrors_flags(self, monkeypatch, capsys):
        monkeypatch.setenv("CLIQUECOLOR_COLLECT_KAPPA", "0.5")
        monkeypatch.setenv("CLIQUECOLOR_CONSTANT_C", "4")
        main(["run", "--gen", "gnp:n=60,p=0.15"])
        cfg = json.loads(capsys.readouterr().out)["config"]
        assert cfg["kappa"] == 0.5 and cfg["C"] == 4


class TestSweep:
    def test_csv(self, capsys):
        assert main(["sweep", "--ns", "32,64", "--collect-kappa", "0.5", "--constant-C", "4"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [int(r["n"]) for r in rows] == [32, 64]
        assert list(rows[0]) == SWEEP_HEADER

    def test_bad_ns(self):
        assert main(["sweep", "--ns", "a,b"]) == 2
