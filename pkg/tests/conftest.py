from dataclasses import replace

import numpy as np
import pytest

from wgheat.mesh import Mesh, build_uniform_mesh


def make_reference_mesh() -> Mesh:
    """A one-triangle mesh on (0,0), (1,0), (0,1); all edges on the boundary."""
    return replace(
        build_uniform_mesh(1),
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        triangles=np.array([[0, 1, 2]]),
        edges=np.array([[1, 2], [0, 2], [0, 1]]),
        tri_edges=np.array([[0, 1, 2]]),
        tri_signs=np.array([[1, -1, 1]]),
        edge_tris=np.array([[0, -1], [0, -1], [0, -1]]),
        boundary_tag=np.ones(3, dtype=np.int64),
    )


@pytest.fixture
def reference_mesh() -> Mesh:
    return make_reference_mesh()


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Append one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def log(number, title, ok, detail):
        line = f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        lines.append((number, line))
        print(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
