import numpy as np
import pytest

import helpers


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    rows = helpers.ACCEPTANCE
    if not rows:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, ok, detail in rows:
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {crit:<5} {detail}")
    tr.write_line("")
    tops = sorted({c.split(".")[0] for c, _, _ in rows}, key=int)
    for top in tops:
        mine = [ok for c, ok, _ in rows if c.split(".")[0] == top]
        status = "PASS" if all(mine) else "FAIL"
        tr.write_line(f"{status}  criterion {top} ({sum(mine)}/{len(mine)} checks)")
