"""Shared fixtures: the planted corpus, a full pipeline run, and the
per-criterion summary lines printed after the run."""

from __future__ import annotations

import time

import pytest

import synth
from duptriage import cli

_SEVERITY = {"PASS": 0, "SKIP": 1, "FAIL": 2}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, label): tags a test as one acceptance criterion"
    )


def pytest_collection_modifyitems(config, items):
    mapping = {}
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            mapping[item.nodeid] = (mark.args[0], mark.args[1])
    config._criterion_map = mapping


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mapping = getattr(config, "_criterion_map", None)
    if not mapping:
        return
    results: dict[int, list] = {}
    for reps in terminalreporter.stats.values():
        for rep in reps:
            nodeid = getattr(rep, "nodeid", None)
            if nodeid not in mapping or not hasattr(rep, "when"):
                continue
            if rep.when == "call" and rep.passed:
                word = "PASS"
            elif rep.skipped:
                word = "SKIP"
            elif rep.failed:
                word = "FAIL"
            else:
                continue
            number, label = mapping[nodeid]
            current = results.get(number)
            if current is None or _SEVERITY[word] > _SEVERITY[current[0]]:
                results[number] = [word, label]
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(results):
        word, label = results[number]
        terminalreporter.write_line(f"criterion {number:>2} ({label}): {word}")


@pytest.fixture(scope="session")
def planted():
    return synth.planted_corpus()


def run_pipeline(workdir, dump_dir, include_timepred=True):
    """Runs the training pipeline in-process; returns seconds elapsed."""
    base = ["--paths.workdir", str(workdir), "--paths.dump_dir", str(dump_dir)]

    def run(*argv):
        code = cli.main([argv[0], *base, *argv[1:]])
        assert code == 0, f"{argv[0]} exited with {code}"

    started = time.perf_counter()
    run("ingest")
    run("train-embeddings")
    run("build-candidates", "--candidates.title_cosine", "-1.0")
    run("train-retrieval")
    if include_timepred:
        run("train-timepred", "--model", "mlp")
        run("train-timepred", "--model", "tree")
    return time.perf_counter() - started


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory, planted):
    """One full single-threaded training run over the planted corpus."""
    root = tmp_path_factory.mktemp("pipeline")
    dump = root / "dump"
    records, pairs = planted
    synth.write_dump(dump, records, pairs)
    workdir = root / "work"
    duration = run_pipeline(workdir, dump)
    code = cli.main(
        [
            "eval-retrieval",
            "--method",
            "head",
            "--paths.workdir",
            str(workdir),
            "--paths.dump_dir",
            str(dump),
        ]
    )
    assert code == 0
    return {"workdir": workdir, "dump": dump, "train_seconds": duration}
