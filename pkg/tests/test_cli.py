import json
import os
import subprocess
import sys

import numpy as np
import pytest

from krafty.cli import main
from krafty.io import write_assignment, write_matrix, write_spectrum


@pytest.fixture
def fig1_files(tmp_path, fig1):
    _, z1, z2 = fig1
    p1, p2 = tmp_path / "z1.csv", tmp_path / "z2.csv"
    write_assignment(p1, z1)
    write_assignment(p2, z2)
    return p1, p2


def tree(path):
    return sorted(str(p.relative_to(path)) for p in path.rglob("*"))


def read_json(path):
    return json.loads(path.read_text())


class TestCluster:
    def test_fig1_krafty(self, tmp_path, fig1_files, fig1, capsys):
        out = tmp_path / "out"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}", "--out", str(out)]) == 0
        assert "k_used=5" in capsys.readouterr().out
        summary = read_json(out / "summary.json")
        assert summary["k_used"] == 5 and summary["k_source"] == "estimated"
        assert sorted(summary["cluster_sizes"]) == sorted(int(s) for s in (352, 172, 165, 156, 155))
        lines = (out / "spectrum.csv").read_text().splitlines()[1:]
        values = [float(line.split(",")[1]) for line in lines]
        assert len(values) == 9 and sum(v < 1e-8 * values[0] for v in values) == 4
        labels = np.loadtxt(out / "labels.csv", dtype=int)
        from krafty import adjusted_rand_index

        assert adjusted_rand_index(fig1[0], labels) == 1.0
        assert {"labels.csv", "spectrum.csv", "dendrogram.csv", "manifest.json"} <= set(os.listdir(out))

    def test_fig1_mase(self, tmp_path, fig1_files):
        out = tmp_path / "out"
        args = ["cluster", "--method", "mase", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}"]
        assert main(args + ["--out", str(out)]) == 0
        summary = read_json(out / "summary.json")
        assert summary["k_used"] <= 5 and summary["k_source"] == "estimated"

    def test_k_one(self, tmp_path, fig1_files):
        out = tmp_path / "out"
        args = ["cluster", "--k", "1", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}"]
        assert main(args + ["--out", str(out)]) == 0
        assert set(np.loadtxt(out / "labels.csv", dtype=int)) == {0}
        assert read_json(out / "summary.json")["k_source"] == "given"

    def test_embedding_views(self, tmp_path, fig1):
        from krafty import embedding_from_assignment

        paths = []
        for i, z in enumerate(fig1[1:]):
            p = tmp_path / f"u{i}.csv"
            write_matrix(p, embedding_from_assignment(z).matrix)
            paths.append(p)
        out = tmp_path / "out"
        args = ["cluster", "--clusterer", "kmeans", "--view", f"u:{paths[0]}", "--view", f"x:{paths[1]}"]
        assert main(args + ["--out", str(out)]) == 0
        assert read_json(out / "summary.json")["k_used"] == 5
        assert "dendrogram.csv" not in os.listdir(out)

    def test_single_view_rejected(self, tmp_path, fig1_files, capsys):
        out = tmp_path / "out"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--out", str(out)]) == 2
        assert not out.exists()
        assert "two" in capsys.readouterr().err

    def test_missing_input_leaves_nothing(self, tmp_path, fig1_files):
        out = tmp_path / "out"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{tmp_path / 'nope.csv'}", "--out", str(out)]) == 2
        assert not out.exists()

    def test_length_mismatch(self, tmp_path, fig1_files):
        short = tmp_path / "short.csv"
        short.write_text("0\n1\n")
        out = tmp_path / "out"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{short}", "--out", str(out)]) == 2
        assert not out.exists()

    def test_existing_out_kept_clean(self, tmp_path, fig1_files):
        out = tmp_path / "out"
        out.mkdir()
        (out / "keep.txt").write_text("x")
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", "z:/nonexistent", "--out", str(out)]) == 2
        assert tree(out) == ["keep.txt"]

    def test_writes_only_inside_out(self, tmp_path, fig1_files):
        before = set(tree(tmp_path))
        out = tmp_path / "out"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}", "--out", str(out)]) == 0
        new = set(tree(tmp_path)) - before
        assert all(p == "out" or p.startswith("out" + os.sep) for p in new)
        assert not any(".krafty-stage" in p for p in new)


class TestReplay:
    def test_byte_identical(self, tmp_path, fig1_files):
        out, again = tmp_path / "a", tmp_path / "b"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}", "--out", str(out)]) == 0
        assert main(["replay", str(out / "manifest.json"), "--out", str(again)]) == 0
        man = read_json(out / "manifest.json")
        for name in man["outputs"]:
            if name not in man["nondeterministic"]:
                assert (out / name).read_bytes() == (again / name).read_bytes()

    def test_changed_input(self, tmp_path, fig1_files):
        out = tmp_path / "a"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}", "--out", str(out)]) == 0
        fig1_files[0].write_text(fig1_files[0].read_text() + "0\n")
        assert main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "b")]) == 2

    def test_changed_output_digest(self, tmp_path, fig1_files):
        out = tmp_path / "a"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}", "--out", str(out)]) == 0
        man = read_json(out / "manifest.json")
        man["outputs"]["labels.csv"] = "0" * 64
        (out / "manifest.json").write_text(json.dumps(man))
        assert main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "b")]) == 3

    def test_manifest_contents(self, tmp_path, fig1_files):
        out = tmp_path / "a"
        assert main(["cluster", "--seed", "7", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}", "--out", str(out)]) == 0
        man = read_json(out / "manifest.json")
        assert man["command"] == "cluster" and man["seed"] == 7
        assert man["nondeterministic"] == ["timings.json"]
        assert set(man["inputs"]) == {str(fig1_files[0]), str(fig1_files[1])}


class TestSelectK:
    def spectrum(self, tmp_path, values):
        p = tmp_path / "s.csv"
        write_spectrum(p, values)
        return p

    @pytest.mark.parametrize("strategy,expected", [("gap", "3"), ("profile", "3")])
    def test_spectrum(self, tmp_path, capsys, strategy, expected):
        p = self.spectrum(tmp_path, [10.0, 9.0, 8.0, 1.0, 0.9, 0.8])
        out = tmp_path / "out"
        assert main(["select-k", "--spectrum", str(p), "--strategy", strategy, "--which", "1", "--out", str(out)]) == 0
        printed = capsys.readouterr().out.strip()
        assert printed == read_json(out / "select_k.json")["k_hat"].__str__()
        assert (out / "scores.csv").exists()
        assert printed == expected

    def test_profile_example(self, tmp_path, capsys):
        p = tmp_path / "s.csv"
        p.write_text("10\n10\n10\n1\n1\n1\n")
        assert main(["select-k", "--spectrum", str(p), "--which", "1", "--out", str(tmp_path / "o")]) == 0
        assert capsys.readouterr().out.strip() == "3"

    def test_dendrogram(self, tmp_path, fig1_files, capsys):
        out = tmp_path / "c"
        assert main(["cluster", "--view", f"z:{fig1_files[0]}", "--view", f"z:{fig1_files[1]}", "--out", str(out)]) == 0
        capsys.readouterr()
        assert main(["select-k", "--dendrogram", str(out / "dendrogram.csv"), "--out", str(tmp_path / "k")]) == 0
        assert capsys.readouterr().out.strip() == "5"

    def test_dendrogram_wrong_strategy(self, tmp_path):
        d = tmp_path / "d.csv"
        d.write_text("step,left,right,new_id,height\n1,0,1,2,1.0\n")
        assert main(["select-k", "--dendrogram", str(d), "--strategy", "gap", "--out", str(tmp_path / "k")]) == 2

    def test_both_inputs(self, tmp_path):
        p = self.spectrum(tmp_path, [2.0, 1.0])
        assert main(["select-k", "--spectrum", str(p), "--dendrogram", str(p), "--out", str(tmp_path / "k")]) == 2

    def test_increasing_spectrum(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("1\n2\n")
        assert main(["select-k", "--spectrum", str(p), "--out", str(tmp_path / "k")]) == 2
        assert not (tmp_path / "k").exists()


def block_edges(path, blocks, rng):
    lines = ["source,target,weight"]
    for i, bi in enumerate(blocks):
        for j, bj in enumerate(blocks):
            w = rng.uniform(1, 2) if bi == bj else rng.uniform(0, 0.05)
            lines.append(f"c{i:02d},c{j:02d},{w!r}")
    path.write_text("\n".join(lines) + "\n")


class TestTrade:
    def test_identical_years(self, tmp_path, rng, capsys):
        blocks = np.repeat([0, 1, 2], 8)
        a, b = tmp_path / "y1.csv", tmp_path / "y2.csv"
        block_edges(a, blocks, rng)
        block_edges(b, blocks, rng)
        out = tmp_path / "out"
        assert main(["trade", "--view", f"{a}:3:3", "--view", f"{b}:3:3:importer", "--out", str(out)]) == 0
        summary = read_json(out / "summary.json")
        assert summary["k_used"] == 3 and summary["vertices"] == 24
        rows = (out / "membership.csv").read_text().splitlines()
        assert rows[0] == "vertex_name,cluster" and len(rows) == 25
        assert {"view1_labels.csv", "view2_labels.csv", "spectrum.csv"} <= set(os.listdir(out))

    def test_universe_adds_isolated(self, tmp_path, rng):
        blocks = np.repeat([0, 1], 6)
        a = tmp_path / "y1.csv"
        block_edges(a, blocks, rng)
        u = tmp_path / "u.txt"
        u.write_text("\n".join([f"c{i:02d}" for i in range(12)] + ["lonely"]) + "\n")
        out = tmp_path / "out"
        assert main(["trade", "--universe", str(u), "--view", f"{a}:2:2", "--view", f"{a}:2:2", "--out", str(out)]) == 0
        assert read_json(out / "summary.json")["excluded"] == ["lonely"]
        assert "lonely,-1" in (out / "membership.csv").read_text()

    def test_missing_weight(self, tmp_path, capsys):
        a = tmp_path / "bad.csv"
        a.write_text("source,target,weight\nx,y,1\nx,z\n")
        out = tmp_path / "out"
        assert main(["trade", "--view", f"{a}:1:1", "--view", f"{a}:1:1", "--out", str(out)]) == 2
        assert "bad.csv:3:" in capsys.readouterr().err
        assert not out.exists()

    def test_bad_view_spec(self, tmp_path):
        assert main(["trade", "--view", "a.csv:x:2", "--view", "b.csv:1:1", "--out", str(tmp_path / "o")]) == 2


class TestSimulate:
    def config(self, tmp_path, body):
        p = tmp_path / "grid.ini"
        p.write_text(body)
        return p

    def test_config_and_replay(self, tmp_path):
        cfg = self.config(tmp_path, "[small]\nn = 120\nk1 = 3\nk2 = 3\nk = 4, 6\nmethod = krafty, mase\nreps = 2\n")
        out = tmp_path / "a"
        assert main(["simulate", "--config", str(cfg), "--seed", "5", "--out", str(out)]) == 0
        rows = (out / "results.csv").read_text().splitlines()
        assert len(rows) == 1 + 4 * 2
        header = rows[0].split(",")
        assert header[-6:] == ["config_hash", "rep", "ari", "k_hat", "abs_err_k", "error"]
        summary = (out / "summary.csv").read_text().splitlines()
        assert len(summary) == 5 and "reps" not in summary[0].split(",")
        assert read_json(out / "manifest.json")["nondeterministic"] == ["timings.csv"]
        assert main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "b")]) == 0

    def test_threads_match_serial(self, tmp_path):
        cfg = self.config(tmp_path, "[small]\nn = 100\nk = 5, 8\nreps = 3\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
        assert main(["simulate", "--config", str(cfg), "--threads", "3", "--out", str(tmp_path / "b")]) == 0
        for name in ("results.csv", "summary.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_config_field(self, tmp_path, capsys):
        cfg = self.config(tmp_path, "[bad]\nk = 30\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "k:" in capsys.readouterr().err

    def test_unknown_field(self, tmp_path, capsys):
        cfg = self.config(tmp_path, "[bad]\nbeta = 1\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "beta" in capsys.readouterr().err

    def test_needs_one_source(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path / "o")]) == 2

    def test_bad_reps(self, tmp_path):
        assert main(["simulate", "--preset", "fig2", "--reps", "0", "--out", str(tmp_path / "o")]) == 2


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "krafty.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "kernels" in res.stdout
