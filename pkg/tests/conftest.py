import json
from pathlib import Path

import pytest

from qsembed.construction import Construction
from qsembed.params import params_from_dict

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# criterion lines collected by test_acceptance, printed at the end of the run
CRITERIA = {}


def config(name):
    return json.loads((CONFIGS / f"{name}.json").read_text())


def build(raw, **kw):
    return Construction(params_from_dict(raw), use_cache=False, **kw)


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("QSEMBED_CACHE_DIR", str(tmp_path / "cache"))


@pytest.fixture(scope="session")
def two_level():
    return build(config("two_level"))


@pytest.fixture(scope="session")
def reference():
    return build(config("reference"))


@pytest.fixture(scope="session")
def lebesgue():
    return build(config("lebesgue"))


@pytest.fixture(scope="session")
def pipeline():
    return build(config("pipeline"))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
