import numpy as np
import pytest


def make_jump(n, to, frm, rate):
    """sqrt(rate) |to><frm| with 1-based level labels."""
    op = np.zeros((n, n), dtype=complex)
    op[to - 1, frm - 1] = np.sqrt(float(rate))
    return op


@pytest.fixture
def jump():
    return make_jump


@pytest.fixture
def three_level_jump_system():
    """Six jump operators on n=3 with order-one rates; every pairwise
    transfer is present so all distinguished flags give invertible fields."""
    import flagdyn as fd

    ops = [
        make_jump(3, 1, 2, 5.0),
        make_jump(3, 2, 1, 3.0),
        make_jump(3, 2, 3, 4.0),
        make_jump(3, 3, 2, 2.0),
        make_jump(3, 3, 1, 7.0),
        make_jump(3, 1, 3, 1.0),
    ]
    return fd.make_system(3, ops)


@pytest.fixture
def cascade_system():
    """The four-level cascade whose balance set avoids the vertices."""
    import flagdyn as fd

    ops = [
        make_jump(4, 1, 2, 5.0),
        make_jump(4, 2, 1, 3.0),
        make_jump(4, 2, 3, 4.0),
        make_jump(4, 3, 4, 3.0),
    ]
    return fd.make_system(4, ops)


#: (criterion number, description, passed) tuples appended by the
#: acceptance tests as they run
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance-criterion verdict lines after the test run so
    they are visible regardless of capture settings."""
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, desc, ok in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(
            f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} — {desc}"
        )
