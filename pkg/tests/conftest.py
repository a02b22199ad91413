import warnings

import numpy as np
import pytest

from emdec import mesh

ACCEPTANCE_LOG: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Recorder for acceptance-criterion outcomes, printed in the summary."""

    def record(name: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LOG.append((name, ok, detail))
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LOG:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}")


def jittered_delaunay(n: int, seed: int, jitter: float = 0.22) -> mesh.CellComplex:
    """Well-shaped unstructured triangulation: jittered lattice + square frame."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, n + 1)
    pts = []
    h = 1.0 / n
    for i, x in enumerate(xs):
        for j, y in enumerate(xs):
            if 0 < i < n and 0 < j < n:
                pts.append([x + rng.uniform(-jitter, jitter) * h,
                            y + rng.uniform(-jitter, jitter) * h])
            else:
                pts.append([x, y])
    return mesh.delaunay_mesh(np.array(pts))


def quiet_dual(K: mesh.CellComplex) -> mesh.DualComplex:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return mesh.circumcentric_dual(K)


@pytest.fixture(scope="session")
def grid_2d_small():
    K = mesh.build_rect_grid((1.0, 1.0), (4, 4))
    return K, mesh.circumcentric_dual(K)


@pytest.fixture(scope="session")
def grid_2d_unit():
    K = mesh.build_rect_grid((3.0, 3.0), (3, 3))  # unit spacing
    return K, mesh.circumcentric_dual(K)


@pytest.fixture(scope="session")
def tri_pair():
    """Two equilateral unit triangles sharing the edge (0, 1)."""
    pts = np.array([[0.0, 0.0], [1.0, 0.0],
                    [0.5, np.sqrt(3) / 2], [0.5, -np.sqrt(3) / 2]])
    K = mesh.complex_from_top_cells(2, pts, [(0, 1, 2), (0, 1, 3)])
    return K, mesh.circumcentric_dual(K)
