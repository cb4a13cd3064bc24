import io
from importlib import resources
from pathlib import Path

import pytest

from ontoport.ontology import FeatureDataset, Outcome, Representation, Row, default_taxonomy

SPEC_DIR = Path(str(resources.files("ontoport").joinpath("data/specs")))


def make_dataset(values, outcomes, names=None, code="T", representation=None):
    """Build a FeatureDataset from parallel lists of value tuples and outcomes."""
    names = tuple(names or (f"a{i}" for i in range(len(values[0]))))
    if representation is None:
        representation = (Representation.DISCRETIZED if isinstance(values[0][0], str)
                          else Representation.NUMERIC)
    rows = tuple(Row(f"s{i:03d}", tuple(v), Outcome(o) if isinstance(o, str) else o)
                 for i, (v, o) in enumerate(zip(values, outcomes)))
    return FeatureDataset(code, representation, names, rows)


def csv_stream(text: str) -> io.StringIO:
    return io.StringIO(text.lstrip("\n"))


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


@pytest.fixture(scope="session")
def spec_dir():
    return SPEC_DIR


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
