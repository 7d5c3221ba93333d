import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from routebench.cli import DATA_ROOT  # noqa: E402
from routebench.demand import load_agents  # noqa: E402
from routebench.network import load_network  # noqa: E402

SAINT_ARNOULT = DATA_ROOT / "networks" / "saint_arnoult"


@pytest.fixture(scope="session")
def sa_net():
    return load_network(SAINT_ARNOULT)


@pytest.fixture(scope="session")
def sa_agents():
    return load_agents(SAINT_ARNOULT / "agents.csv")


def write_csv(path: Path, text: str) -> Path:
    path.write_text(text.lstrip(), encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        name, ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}: {name}: {detail}")
