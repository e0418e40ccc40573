import numpy as np
import pytest

from gslearn.synth import GraphEnsembleSpec, sample_graph

ACCEPTANCE = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")


def random_spd(rng, n, ridge=0.5):
    w = rng.standard_normal((n, n))
    return w @ w.T / n + ridge * np.eye(n)


def random_adjacency(seed, n=10, p=0.3):
    return sample_graph(GraphEnsembleSpec("ER", n, {"p": p}, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
