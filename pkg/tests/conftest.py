import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key, (title, _) in mod.CRITERIA.items():
        if key in mod.RESULTS:
            ok, detail = mod.RESULTS[key]
            terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
