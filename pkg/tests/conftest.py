import numpy as np
import pytest

from hilbertgeom import _kernels as K
from hilbertgeom.body import (BasedBody, based, disk, ellipse, implicit_poly, p_ball, polygon,
                              superellipse)


def smooth_corpus():
    """Strictly convex planar based bodies used across the suites."""
    return {
        "disk": based(disk()),
        "disk_off": BasedBody(disk(), [0.5, 0.0]),
        "ellipse": based(ellipse((2.0, 1.0))),
        "ellipse_rot": BasedBody(ellipse((2.0, 1.0), center=(1.0, -0.5), angle=0.4), [1.6, -0.3]),
        "p3": based(p_ball(3)),
        "p4": based(p_ball(4)),
        "p6": based(p_ball(6)),
        "p4_off": BasedBody(p_ball(4), [0.3, 0.2]),
        "superellipse": based(superellipse((4.0, 2.5), (1.5, 1.0))),
        "quartic": based(implicit_poly([(1, (4, 0)), (1, (2, 2)), (1, (0, 4)), (-1, (0, 0))], (0, 0))),
    }


def square():
    return polygon([[-1, -1], [1, -1], [1, 1], [-1, 1]])


def triangle():
    return polygon([[0, 0], [2, 0], [0, 1.5]])


@pytest.fixture(scope="session")
def corpus():
    return smooth_corpus()


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and K.numba_kernels is None:
        try:
            K.use_backend("numba")
        except ImportError:
            pytest.skip("numba unavailable")
    old = K.BACKEND
    K.use_backend(request.param)
    yield request.param
    K.use_backend(old)


# closed forms used as oracles


def klein_distance(x, y):
    """Hilbert distance in the unit disk: twice the hyperbolic distance of
    the Klein model."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    c = (1 - x @ y) / np.sqrt((1 - x @ x) * (1 - y @ y))
    return 2 * np.arccosh(max(c, 1.0))


def disk_modulus(eps):
    return 1 - np.sqrt(1 - np.asarray(eps) ** 2 / 4)


def lp_modulus(p, eps):
    """Modulus of convexity of l_p^2 for p >= 2 (Hanner)."""
    return 1 - (1 - (np.asarray(eps) / 2) ** p) ** (1 / p)


def disk_ray(x, v):
    """``t > 0`` with ``|x + t v| = 1`` for ``|x| < 1``."""
    x, v = np.asarray(x, float), np.asarray(v, float)
    a, b, c = v @ v, x @ v, x @ x - 1
    return (-b + np.sqrt(b * b - a * c)) / a


# acceptance summary: one line per criterion in the terminal report

ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of an acceptance criterion under the test's docstring title."""
    title = request.function.__doc__.strip().splitlines()[0]
    ACCEPTANCE[title] = ("FAIL", "")

    def done(detail):
        ACCEPTANCE[title] = ("PASS", detail)
        print(f"PASS  {title}: {detail}")

    yield done


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for title in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[title]
        terminalreporter.write_line(f"{status}  {title}" + (f": {detail}" if detail else ""))
