import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from koopgen.dataset import SnapshotDataset
from koopgen.quadrature import gl_rule

settings.register_profile("koopgen", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("koopgen")

# criterion number -> list of (test id, passed, detail)
_CRITERIA: dict[int, list] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def exact_linear_dataset(a=-1.0, M=50, T=1.0, G=20, seed=0, dim=1):
    """Exact-flow snapshots of x' = a x, so only quadrature and algebra errors remain."""
    x0 = np.random.default_rng(seed).uniform(-1, 1, (M, dim))
    rule = gl_rule(T, G)
    grid = np.linspace(0.0, T, G + 1)

    def flow(t):
        return x0[:, None, :] * np.exp(a * np.asarray(t))[None, :, None]

    return SnapshotDataset(
        x0, T, G, flow([T])[:, 0], node_states=flow(rule.nodes), uniform_states=flow(grid), rule=rule
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (report.when == "call" or (report.when == "setup" and report.failed)):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if report.failed and not detail:
        detail = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else "error"
    _CRITERIA.setdefault(marker.args[0], []).append((item.name, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        ok = all(passed for _, passed, _ in results)
        details = " | ".join(f"{name}: {d}" for name, _, d in results if d)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {details}")
