"""End-to-end run of every CLI stage on the toy corpus.

Trains small embeddings, builds candidate sets, fits the retrieval head and
both confirmation-time regressors, then asks an ad-hoc query. Everything
lands under demos/workspace; re-running overwrites it.
"""

import shutil
import sys
from pathlib import Path

from duptriage import cli

from toy_dump import write_toy_dump

WORKSPACE = Path(__file__).parent / "workspace"

# full-size defaults are overkill for 20 questions
FAST = [
    "--word2vec.dimension", "32", "--word2vec.epochs", "3",
    "--node2vec.dimension", "16", "--node2vec.epochs", "2",
    "--head.output_dim", "64", "--head.epochs", "15",
    "--timepred.hidden1", "32", "--timepred.hidden2", "16",
    "--timepred.epochs", "150", "--timepred.learning_rate", "1e-2",
]


def run(command, *extra):
    argv = [command, "--paths.workdir", str(WORKSPACE / "work"),
            "--paths.dump_dir", str(WORKSPACE / "dump"), *FAST, *extra]
    print(f"\n$ duptriage {command} " + " ".join(extra), flush=True)
    code = cli.main(argv)
    if code != 0:
        sys.exit(f"{command} failed with exit code {code}")


def show(relative):
    path = WORKSPACE / "work" / relative
    print(f"--- {relative} ---")
    print(path.read_text().rstrip(), flush=True)


def main():
    shutil.rmtree(WORKSPACE, ignore_errors=True)
    write_toy_dump(WORKSPACE / "dump")

    run("ingest")
    run("stats")
    run("build-graph")
    run("train-embeddings")
    run("build-candidates")
    run("train-retrieval")
    run("eval-retrieval", "--method", "head")
    run("eval-retrieval", "--method", "bm25",
        "--compare-with", str(WORKSPACE / "work" / "reports" / "ranked_head.tsv"))
    run("train-timepred", "--model", "mlp")
    run("eval-timepred", "--model", "mlp")
    run("train-timepred", "--model", "tree")
    run("eval-timepred", "--model", "tree")

    print()
    show(Path("reports") / "report_head.kv")
    show(Path("reports") / "report_bm25.kv")
    show(Path("reports") / "time_report_mlp.kv")
    show(Path("reports") / "time_report_tree.kv")

    run("query",
        "--title", "grub menu gone after a windows update",
        "--body", "windows update removed the grub bootloader and boot skips the menu",
        "--tags", "boot,grub2",
        "--k", "3")


if __name__ == "__main__":
    main()
