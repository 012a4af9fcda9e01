import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def zoo():
    from elbow.syntax import parse_tbox

    return parse_tbox((DATA / "zoo.tbox").read_text())


@pytest.fixture
def example2():
    from elbow.feature_model import FeatureInterpretation

    return FeatureInterpretation.from_json((DATA / "example2.json").read_text())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
