"""Echo acceptance verdict lines after the run, outside output capture."""

import sys


def pytest_terminal_summary(terminalreporter):
    for name, module in sys.modules.items():
        if name.rsplit(".", 1)[-1] == "test_acceptance":
            verdicts = getattr(module, "VERDICTS", [])
            if verdicts:
                terminalreporter.section("acceptance criteria")
                for line in verdicts:
                    terminalreporter.write_line(line)
            break
