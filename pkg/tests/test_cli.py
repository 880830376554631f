import copy
import csv
import io
import json

import numpy as np
import pytest

from twincheck import cli
from twincheck.geometry import projective_plane
from twincheck.reports import CheckReport, Failure, merge_details


@pytest.fixture
def a2_matrix(tmp_path):
    path = tmp_path / "a2.txt"
    path.write_text("2\n1 3\n3 1\n")
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestPlaneInfo:
    @pytest.mark.parametrize("q,counts", [(2, (7, 7, 21)), (4, (21, 21, 105))])
    def test_counts(self, capsys, q, counts):
        code, out, _ = run(capsys, "plane", "info", "--q", str(q))
        data = json.loads(out)
        assert code == 0
        assert (data["points"], data["lines"], data["flags"]) == counts

    def test_not_prime_power(self, capsys):
        code, _, err = run(capsys, "plane", "info", "--q", "6")
        assert code == 2 and "prime power" in err


class TestScan:
    def test_q2(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, _, err = run(capsys, "scan", "dualities", "--q", "2", "--workers", "1", "--out", str(out))
        data = json.loads(out.read_text())
        assert code == 0 and data["total"] == 168 and data["failures"] == []
        assert set(data) >= {"model", "check", "total", "failures", "elapsed_ms"}
        assert "PASS" in err

    def test_q3_csv(self, capsys):
        code, out, _ = run(capsys, "scan", "dualities", "--q", "3", "--workers", "1", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert rows[0] == ["model", "check", "total", "element", "witness", "elapsed_ms"]
        assert rows[-1][4].startswith("SUMMARY failures=0") and rows[-1][2] == "5616"

    def test_corrupted_geometry(self, capsys, monkeypatch):
        broken = copy.copy(projective_plane(2))
        broken.incidence = np.zeros_like(broken.incidence)
        monkeypatch.setattr(cli, "projective_plane", lambda q: broken)
        code, out, _ = run(capsys, "scan", "dualities", "--q", "2", "--workers", "1")
        data = json.loads(out)
        assert code == 1
        assert len(data["failures"]) == 168
        assert "no absolute point" in data["failures"][0]["witness"]

    def test_unsupported_q(self, capsys):
        code, _, _ = run(capsys, "scan", "dualities", "--q", "7")
        assert code == 2

    def test_bad_workers(self, capsys):
        code, _, _ = run(capsys, "scan", "dualities", "--q", "2", "--workers", "0")
        assert code == 2

    def test_workers_do_not_change_report(self, capsys):
        outputs = []
        for workers in ("1", "2"):
            code, out, _ = run(capsys, "verify", "main0", "--model", "pg", "--q", "2", "--workers", workers)
            data = json.loads(out)
            data["elapsed_ms"] = 0
            outputs.append(json.dumps(data))
            assert code == 0
        assert outputs[0] == outputs[1]


class TestVerify:
    @pytest.mark.parametrize("argv", [
        ("main3", "--model", "a3"),
        ("axioms", "--model", "thin", "--type", "A2"),
        ("axioms", "--model", "thin", "--type", "B2"),
        ("axioms", "--model", "pg", "--q", "3"),
        ("main2", "--model", "gq"),
        ("main0", "--model", "pg", "--q", "3"),
        ("baer", "--model", "pg", "--q", "5"),
    ])
    def test_passes(self, capsys, argv):
        code, out, _ = run(capsys, "verify", *argv, "--workers", "1")
        assert code == 0, out
        assert json.loads(out)["failures"] == []

    def test_beukjeeven(self, capsys):
        code, out, _ = run(capsys, "verify", "beukjeeven", "--model", "gq")
        data = json.loads(out)
        assert code == 0 and data["details"]["max_min_displacement"] == 2 and data["total"] == 720

    def test_thin_has_failures(self, capsys):
        # thin complexes are not thick, so the opposite-residue argument does not apply
        code, out, _ = run(capsys, "verify", "main0", "--model", "thin", "--type", "A2", "--workers", "1")
        assert code == 1 and json.loads(out)["failures"]

    @pytest.mark.parametrize("argv", [
        ("baer", "--model", "pg", "--q", "4"),
        ("baer", "--model", "gq"),
        ("beukjeeven", "--model", "a3"),
        ("main2", "--model", "pg", "--q", "6"),
        ("main2", "--model", "a3", "--q", "3"),
        ("main2", "--model", "torus"),
    ])
    def test_usage_errors(self, capsys, argv):
        code, _, _ = run(capsys, "verify", *argv)
        assert code == 2


class TestCoxeter:
    @pytest.mark.parametrize("action,word,expected", [
        ("reduce", "stst", "ts"),
        ("reduce", "ss", ""),
        ("length", "sts", "3"),
        ("longest", None, "sts"),
        ("longest", "s", "s"),
        ("descents", "st", "left=s right=t"),
    ])
    def test_actions(self, capsys, a2_matrix, action, word, expected):
        argv = ["coxeter", action, "--matrix", a2_matrix] + (["--word", word] if word else [])
        code, out, _ = run(capsys, *argv)
        assert code == 0 and out.strip() == expected

    def test_json(self, capsys, a2_matrix):
        code, out, _ = run(capsys, "coxeter", "reduce", "--matrix", a2_matrix, "--word", "stst", "--json")
        assert json.loads(out) == {"action": "reduce", "word": "stst", "result": "ts"}

    def test_bad_inputs(self, capsys, a2_matrix, tmp_path):
        assert run(capsys, "coxeter", "reduce", "--matrix", a2_matrix, "--word", "sq")[0] == 2
        assert run(capsys, "coxeter", "reduce", "--matrix", str(tmp_path / "missing"), "--word", "s")[0] == 2
        bad = tmp_path / "bad.txt"
        bad.write_text("2\n1 1\n1 1\n")
        assert run(capsys, "coxeter", "reduce", "--matrix", str(bad), "--word", "s")[0] == 2
        assert run(capsys, "nonsense")[0] == 2


class TestReports:
    def test_roundtrip(self):
        r = CheckReport("m", "c", total=3, failures=[Failure(2, "x")], failure_count=1, elapsed_ms=5)
        assert CheckReport.from_dict(json.loads(r.to_json())).to_dict() == r.to_dict()
        assert not r.passed

    def test_timing_free_output(self):
        r = CheckReport("m", "c", total=1, elapsed_ms=17)
        assert r.to_dict(timing=False)["elapsed_ms"] == 0

    def test_truncation(self):
        r = CheckReport("m", "c")
        for i in range(1500):
            r.fail(i, "w")
        d = r.to_dict()
        assert len(d["failures"]) == 1000 and d["details"]["failures_truncated"] == 1500

    def test_merge_details(self):
        a = {"histogram": {"1": 2, "3": 1}, "max_min_displacement": 1, "polarity_min_absolute": 4, "involutions": 3}
        b = {"histogram": {"11": 1, "3": 1}, "max_min_displacement": 2, "polarity_min_absolute": 3, "involutions": 1}
        out = merge_details(a, b)
        assert list(out["histogram"]) == ["1", "3", "11"]
        assert out["histogram"]["3"] == 2
        assert out["max_min_displacement"] == 2 and out["polarity_min_absolute"] == 3 and out["involutions"] == 4

    def test_csv_failure_rows(self):
        r = CheckReport("m", "c", total=2)
        r.fail(1, "bad, really")
        rows = list(csv.reader(io.StringIO(r.to_csv(timing=False))))
        assert rows[1] == ["m", "c", "2", "1", "bad, really", "0"]
        assert rows[2][4] == "SUMMARY failures=1 passed=false"
