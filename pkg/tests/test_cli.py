from pathlib import Path

import numpy as np
import pytest

from mdne.cli import main
from mdne.embeddings import load_embeddings

CONFIG = """\
seed = 0
output_dir = "out"

[dataset]
name = "toy"
format = "generic"
edges = "edges.tsv"
attributes = "attrs.tsv"
labels = "labels.tsv"

[train]
max_iters = 5
lr = 0.05

[train.spec]
pre_struct_dim = 4
pre_attr_dim = 3
hidden_dims = [2]

[train.pretrain]
epochs = 2
batch = 4

[eval]
ks = [5, 10]
link_ratios = [0.25]
attr_ratios = [0.25]
test_ratios = [0.5]
repeats = 2

[sweep]
k = 5

[sweep.grid]
"weights.lambda" = [0.0, 0.02]
"""

NODES = 12
ATTRS = 6


@pytest.fixture
def workspace(tmp_path: Path) -> Path:
    edges = [(i, (i + 1) % NODES) for i in range(NODES)] + [(0, 6), (2, 8), (3, 9)]
    (tmp_path / "edges.tsv").write_text(
        "".join(f"v{i} v{j}\n" for i, j in edges),
        encoding="utf-8",
    )
    (tmp_path / "attrs.tsv").write_text(
        "".join(f"v{i} {i % ATTRS}:1 {(i * 5 + 1) % ATTRS}:1\n" for i in range(NODES)),
        encoding="utf-8",
    )
    (tmp_path / "labels.tsv").write_text(
        "".join(f"v{i} {'even' if i % 2 == 0 else 'odd'}\n" for i in range(NODES)),
        encoding="utf-8",
    )
    (tmp_path / "experiment.toml").write_text(CONFIG, encoding="utf-8")
    return tmp_path


@pytest.fixture
def trained(workspace: Path) -> Path:
    assert main(["train", "--config", str(workspace / "experiment.toml")]) == 0
    return workspace / "out"


def run(workspace: Path, *args: str) -> int:
    return main([args[0], "--config", str(workspace / "experiment.toml"), *args[1:]])


class TestTrain:
    def test_writes_artifacts(self, trained: Path) -> None:
        assert (trained / "model.ckpt").is_file()
        emb = load_embeddings(trained / "embeddings.tsv")
        assert (emb.n, emb.d) == (NODES, 2)
        report = (trained / "train_report.csv").read_text(encoding="utf-8").splitlines()
        assert report[0] == "iteration,l_1st,l_2nd,l_att,l_reg,l_mix,elapsed_ms"
        assert len(report) == 6

    def test_rerun_is_byte_identical(self, workspace: Path, trained: Path) -> None:
        other = workspace / "again"
        assert run(workspace, "train", "--out", str(other)) == 0
        assert (other / "embeddings.tsv").read_bytes() == (trained / "embeddings.tsv").read_bytes()

    def test_missing_config(self, tmp_path: Path) -> None:
        assert main(["train", "--config", str(tmp_path / "nope.toml")]) == 2

    def test_layers_too_wide(self, workspace: Path) -> None:
        text = CONFIG.replace("hidden_dims = [2]", "hidden_dims = [6]")
        (workspace / "experiment.toml").write_text(text, encoding="utf-8")
        assert run(workspace, "train") == 2


class TestEval:
    def test_reconstruct_from_checkpoint(self, workspace: Path, trained: Path) -> None:
        args = ("eval", "--task", "reconstruct", "--input", str(trained / "model.ckpt"))
        assert run(workspace, *args) == 0
        lines = (trained / "metrics_reconstruct.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "task,dataset,ratio_or_k,metric,value,seed"
        assert [line.split(",")[2:4] for line in lines[1:]] == [
            ["5", "precision@5"],
            ["10", "precision@10"],
        ]

    def test_checkpoint_and_embeddings_agree(self, workspace: Path, trained: Path) -> None:
        outputs = []
        for name in ("model.ckpt", "embeddings.tsv"):
            args = ("eval", "--task", "reconstruct", "--input", str(trained / name), "--k", "7")
            assert run(workspace, *args) == 0
            outputs.append((trained / "metrics_reconstruct.csv").read_text(encoding="utf-8"))
        assert outputs[0] == outputs[1]

    def test_bad_embeddings_file(self, workspace: Path, trained: Path) -> None:
        bad = workspace / "bad.tsv"
        bad.write_text("#mdne v1 n=12 d=2\nv0\t0.5\n", encoding="utf-8")
        assert run(workspace, "eval", "--task", "reconstruct", "--input", str(bad)) == 2

    def test_k_out_of_range(self, workspace: Path, trained: Path) -> None:
        args = ("eval", "--task", "reconstruct", "--input", str(trained / "model.ckpt"))
        assert run(workspace, *args, "--k", "1000") == 2

    def test_classify(self, workspace: Path, trained: Path) -> None:
        args = ("eval", "--task", "classify", "--input", str(trained / "embeddings.tsv"))
        assert run(workspace, *args) == 0
        lines = (trained / "metrics_classify.csv").read_text(encoding="utf-8").splitlines()
        assert [line.split(",")[3] for line in lines[1:]] == ["micro_f1", "macro_f1"]
        assert all(0.0 <= float(line.split(",")[4]) <= 1.0 for line in lines[1:])

    @pytest.mark.parametrize("task", ["linkpred", "attrpred"])
    def test_masked_tasks_retrain(self, workspace: Path, task: str) -> None:
        assert run(workspace, "eval", "--task", task) == 0
        lines = (workspace / "out" / f"metrics_{task}.csv").read_text(encoding="utf-8")
        rows = lines.splitlines()[1:]
        assert len(rows) == 1
        assert rows[0].startswith(f"{task},toy,0.25,auc,")

    def test_masked_tasks_reject_input(self, workspace: Path, trained: Path) -> None:
        args = ("eval", "--task", "linkpred", "--input", str(trained / "model.ckpt"))
        assert run(workspace, *args) == 2

    def test_runs_configured_tasks(self, workspace: Path, trained: Path) -> None:
        text = CONFIG.replace("[eval]\n", '[eval]\ntasks = ["reconstruct", "classify"]\n')
        (workspace / "experiment.toml").write_text(text, encoding="utf-8")
        assert run(workspace, "eval", "--input", str(trained / "model.ckpt")) == 0
        assert (trained / "metrics_reconstruct.csv").exists()
        assert (trained / "metrics_classify.csv").exists()
        assert not (trained / "metrics_linkpred.csv").exists()

    def test_configured_masked_task_rejects_input(self, workspace: Path, trained: Path) -> None:
        text = CONFIG.replace("[eval]\n", '[eval]\ntasks = ["reconstruct", "attrpred"]\n')
        (workspace / "experiment.toml").write_text(text, encoding="utf-8")
        assert run(workspace, "eval", "--input", str(trained / "model.ckpt")) == 2
        assert not (trained / "metrics_reconstruct.csv").exists()


class TestEmbedNode:
    def test_prints_embedding(
        self,
        trained: Path,
        tmp_path: Path,
        capsys: pytest.CaptureFixture[str],
    ) -> None:
        structure = tmp_path / "s.txt"
        structure.write_text(" ".join(["0"] * (NODES - 1) + ["1"]), encoding="utf-8")
        attributes = tmp_path / "a.txt"
        attributes.write_text("1 0 0 0 0 1\n", encoding="utf-8")
        capsys.readouterr()
        code = main(
            [
                "embed-node",
                "--checkpoint",
                str(trained / "model.ckpt"),
                "--structure",
                str(structure),
                "--attributes",
                str(attributes),
            ],
        )
        assert code == 0
        values = np.array(capsys.readouterr().out.strip().split("\t"), dtype=float)
        assert values.shape == (2,)
        assert np.all((values > 0) & (values < 1))

    def test_attributes_only(self, trained: Path, tmp_path: Path) -> None:
        attributes = tmp_path / "a.txt"
        attributes.write_text("0 1 0 0 1 0\n", encoding="utf-8")
        args = ["--checkpoint", str(trained / "model.ckpt"), "--attributes", str(attributes)]
        assert main(["embed-node", *args]) == 0

    def test_needs_a_modality(self, trained: Path) -> None:
        assert main(["embed-node", "--checkpoint", str(trained / "model.ckpt")]) == 2

    def test_wrong_length(self, trained: Path, tmp_path: Path) -> None:
        attributes = tmp_path / "a.txt"
        attributes.write_text("1 0 1\n", encoding="utf-8")
        args = ["--checkpoint", str(trained / "model.ckpt"), "--attributes", str(attributes)]
        assert main(["embed-node", *args]) == 2


class TestSweep:
    def test_writes_ranked_cells(self, workspace: Path) -> None:
        assert run(workspace, "sweep") == 0
        lines = (workspace / "out" / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "rank,cell,weights.lambda,score,seed,error"
        assert len(lines) == 3

    def test_grid_file_overrides_config(self, workspace: Path) -> None:
        grid = workspace / "grid.toml"
        grid.write_text('[grid]\n"weights.alpha" = [0.1, 0.3, 0.5]\n', encoding="utf-8")
        assert run(workspace, "sweep", "--grid", str(grid)) == 0
        lines = (workspace / "out" / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "rank,cell,weights.alpha,score,seed,error"
        assert len(lines) == 4

    def test_bad_grid_key(self, workspace: Path) -> None:
        grid = workspace / "grid.toml"
        grid.write_text('[grid]\n"weights.beta" = [0.1]\n', encoding="utf-8")
        assert run(workspace, "sweep", "--grid", str(grid)) == 2


def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.startswith("mdne ")
