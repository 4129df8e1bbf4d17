import os
from pathlib import Path

import pytest
from hypothesis import settings

from rashomon_surv.simulate import write_surrogate_cmapss

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

REPO = Path(__file__).resolve().parents[1]


def real_cmapss_dir():
    """Directory with the NASA train_FD00x.txt files, if present."""
    for cand in (os.environ.get("CMAPSS_DIR"), REPO / "data" / "CMAPSS"):
        if cand and (Path(cand) / "train_FD001.txt").exists():
            return Path(cand)
    return None


@pytest.fixture(scope="session")
def surrogate_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("surrogate_cmapss")
    write_surrogate_cmapss(d, subsets=("FD001", "FD003"), seed=0)
    return d


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
