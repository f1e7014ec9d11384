import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

# verdict lines recorded by the acceptance suite, echoed after the run so
# they are visible regardless of pytest's output capturing
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_triangle(seed=42, n_extra=57, conc=0.35, outlier=None):
    """Planted-vertex dataset: 3 triangle vertices plus convex combinations.

    Returns (X, V) with the vertices included as the first three columns.
    conc < 1 concentrates points near the vertices.
    """
    rng = np.random.default_rng(seed)
    V = np.array([[0.0, 4.0, 1.0], [0.0, 0.0, 3.0]])
    W = rng.dirichlet(np.full(3, conc), size=n_extra).T
    X = np.concatenate([V, V @ W], axis=1)
    if outlier is not None:
        X = np.concatenate([X, np.asarray(outlier, dtype=float).reshape(2, 1)],
                           axis=1)
    return np.asfortranarray(X), V


def make_outlier_triangle(seed=42, n_extra=117, conc=0.02):
    """Planted-vertex dataset with one far outlier beyond an edge midpoint.

    The triangle is large and the interior points are concentrated hard at
    the vertices (each vertex appears three extra times) so that the
    vertex-preserving configuration is the robust optimum: relocating any
    archetype to cover the outlier strands a whole vertex cluster, which
    costs far more under the Huber loss than leaving the outlier uncovered.
    The outlier sits 100 units from the hull along the outward normal of
    the bottom edge, so no single archetype can reach it "for free" by
    sliding outward within its normal cone.

    Returns (X, V) with the outlier as the last column.
    """
    rng = np.random.default_rng(seed)
    V = np.array([[0.0, 32.0, 8.0], [0.0, 0.0, 24.0]])
    W = rng.dirichlet(np.full(3, conc), size=n_extra).T
    outlier = np.array([[16.0], [-100.0]])
    X = np.concatenate([V, V, V, V @ W, outlier], axis=1)
    return np.asfortranarray(X), V


@pytest.fixture
def triangle():
    return make_triangle()
