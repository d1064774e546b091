import math

import numpy as np
import pytest

from facepose.geometry import CameraIntrinsics, Pose6DoF
from facepose.landmarks import generic_model


@pytest.fixture(scope="session")
def model():
    return generic_model()


@pytest.fixture(scope="session")
def cam():
    return CameraIntrinsics.for_crop(256)


def random_rotvec(rng, max_angle=math.pi):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return axis * rng.uniform(0.0, max_angle)


def random_head_pose(rng, tz=(3.0, 8.0), yaw=75.0, pitch=30.0, roll=45.0):
    p, y, r = np.radians(rng.uniform([-pitch, -yaw, -roll], [pitch, yaw, roll]))
    t = [*rng.uniform(-0.5, 0.5, 2), rng.uniform(*tz)]
    return Pose6DoF.from_euler(p, y, r, t)


# -- acceptance summary -----------------------------------------------------

_criteria = {}


def pytest_runtest_logreport(report):
    mark = getattr(report, "criterion", None)
    if mark is None or (report.when != "call" and report.passed):
        return
    n, title = mark
    detail = dict(report.user_properties).get("detail", "")
    _, ok, details = _criteria.get(n, (title, True, []))
    _criteria[n] = (title, ok and report.passed, details + ([detail] if detail else []))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok, details = _criteria[n]
        line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title}"
        terminalreporter.write_line(line + (f" ({'; '.join(details)})" if details else ""))
