import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from oscikernel import H3, H3xH3

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=[H3, H3xH3], ids=["h3", "h3xh3"])
def model(request):
    return request.param


def grid_points(model, r):
    """Tensor points (N, d) from a 1-D radial axis."""
    r = np.asarray(r, dtype=float)
    if model.d == 1:
        return r[:, None]
    A, B = np.meshgrid(r, r, indexing="ij")
    return np.stack([A.ravel(), B.ravel()], axis=-1)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
