from importlib import resources
from pathlib import Path

import pytest

from cascade_verify.dictionary import load_sample_dictionary
from cascade_verify.dsl import parse_script

DATA = Path(str(resources.files("cascade_verify") / "data"))
CORPUS = DATA / "corpus"


def corpus_text(name: str) -> str:
    return (CORPUS / f"{name}.cascade").read_text(encoding="utf-8")


def corpus_script(name: str):
    return parse_script(corpus_text(name))


@pytest.fixture(scope="session")
def sample_dict():
    return load_sample_dictionary()


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


def pytest_terminal_summary(terminalreporter):
    from acceptance_registry import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
