import json

import pytest

from cuntzframe.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestInspect:
    def test_ex411(self, capsys):
        code, out, _ = run(capsys, "inspect", "--config", "ex411")
        assert code == 0
        assert "Unitary" in out and "no-overlap: true" in out

    def test_json(self, capsys, tmp_path):
        p = tmp_path / "r.json"
        assert run(capsys, "inspect", "--config", "mu4", "--json", str(p))[0] == 0
        assert isinstance(json.loads(p.read_text()), dict)

    def test_walk(self, capsys):
        code, out, _ = run(capsys, "walk", "analyze", "--config", "remmc")
        assert code == 0 and "separating" in out


class TestInputErrors:
    def test_missing_config(self, capsys, tmp_path):
        assert run(capsys, "inspect", "--config", str(tmp_path / "none.json"))[0] == 1

    def test_no_config(self, capsys):
        assert run(capsys, "inspect")[0] == 1

    def test_bad_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{")
        code, _, err = run(capsys, "inspect", "--config", str(p))
        assert code == 1 and "line 1" in err

    def test_unknown_command(self, capsys):
        assert run(capsys, "frobnicate")[0] == 1


class TestCommands:
    def test_minimal_sets(self, capsys):
        code, out, _ = run(capsys, "minimal-sets", "--config", "mu4")
        assert code == 0 and "{0}" in out

    def test_cycle_words_csv(self, capsys):
        code, out, _ = run(capsys, "cycle-words", "--config", "remmc", "--vertex", "1", "--csv", "-")
        assert code == 0
        lines = out.splitlines()
        assert "vertex,word,length,weight_re,weight_im,weight_abs" in lines

    def test_gram_orthonormal(self, capsys):
        assert run(capsys, "gram", "--config", "mu4", "--lmax", "5", "--expect-orthonormal")[0] == 0

    def test_gram_not_orthonormal(self, capsys):
        # the isometry (non-unitary) system yields a Parseval frame with norms below one
        assert run(capsys, "gram", "--config", "ex411_reduced", "--lmax", "4", "--expect-orthonormal")[0] == 2

    def test_gram_union_of_minimal_sets(self, capsys):
        assert run(capsys, "gram", "--config", "l03", "--lmax", "4", "--expect-orthonormal")[0] == 0

    def test_parseval(self, capsys):
        code, out, _ = run(capsys, "parseval", "--config", "l03", "--lmax", "6", "--t", "3/7", "--csv", "-")
        assert code == 0 and out.count("\n") >= 7

    def test_walsh_verify(self, capsys):
        assert run(capsys, "walsh", "verify", "--config", "walsh32", "--lmax", "5", "--samples", "10")[0] == 0

    def test_l2q(self, capsys):
        assert run(capsys, "counterexample", "l2q", "--config", "l2q")[0] == 0

    def test_frame_export_deterministic(self, capsys, tmp_path):
        outs = []
        for k in range(2):
            p = tmp_path / f"f{k}.csv"
            assert run(capsys, "frame", "export", "--config", "ex411_reduced", "--lmax", "4", "--csv", str(p))[0] == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1] and outs[0].startswith(b"basepoint,word")

    def test_seeded_csv_byte_identical(self, capsys, tmp_path):
        outs = []
        for k in range(2):
            p = tmp_path / f"p{k}.csv"
            run(capsys, "parseval", "--config", "mu4", "--lmax", "5", "--seed", "11", "--csv", str(p))
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]

    def test_selftest(self, capsys):
        code, out, _ = run(capsys, "selftest", "--only", "3", "--only", "10")
        assert code == 0 and out.count("[PASS]") == 2
