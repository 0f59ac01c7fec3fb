import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from combpso.datasets import gen_synthetic2, make_split
from combpso.oracle import ForestParams, WrapperOracle

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def syn2():
    return gen_synthetic2(m=200, n_total=10, seed=0)


@pytest.fixture(scope="session")
def syn2_split(syn2):
    return make_split(syn2, seed=0)


@pytest.fixture
def stump_oracle(syn2, syn2_split):
    return WrapperOracle(syn2, syn2_split, kind="stump", memoize=True)


@pytest.fixture
def rf_oracle(syn2, syn2_split):
    return WrapperOracle(syn2, syn2_split, ForestParams(ntree=25, seed=0))


def mask_of(n, idx):
    m = np.zeros(n, dtype=bool)
    m[list(idx)] = True
    return m


VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion (echoed in the terminal summary)."""
    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if ok else 'FAIL'} - {detail}"
        VERDICTS.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
