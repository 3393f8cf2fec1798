import numpy as np
import pytest

from termkrig.calibrate import build_constraints, fit_hyperparams, solve_map
from termkrig.curve import TimeGrid
from termkrig.synthetic import standard_snapshot

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


@pytest.fixture(scope="session")
def standard_fit():
    """Calibrated standard snapshot shared by expensive tests."""
    snapshot, curve = standard_snapshot()
    grid = TimeGrid.for_snapshot(snapshot)
    cs = build_constraints(snapshot, grid)
    params, mle_report = fit_hyperparams(cs, grid)
    model, map_report = solve_map(cs, grid, params, None)
    return {
        "snapshot": snapshot,
        "curve": curve,
        "grid": grid,
        "cs": cs,
        "params": params,
        "mle_report": mle_report,
        "model": model,
        "map_report": map_report,
    }


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_RESULTS.append((name, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        mark = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"{name}: {mark}")


def assert_repriced(cs, xi, scale=1.0):
    """Shared repricing check: model prices inside widened bid/ask tubes."""
    prices = cs.A @ np.asarray(xi)
    tol = scale * 1e-10 * (1.0 + np.abs(cs.q_mid))
    assert np.all(prices >= cs.q_bid - tol), "bid violated"
    assert np.all(prices <= cs.q_ask + tol), "ask violated"
