import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weakbw.families import FAMILY_NAMES, family
from weakbw.forward import build_sequence
from weakbw.oracle import Oracle
from weakbw.reverse import weak_cluster


class _ClusterRuns:
    """One certified weak cluster point per family, shared across the session."""

    def __init__(self):
        self.points = {}
        self.seqs = {}
        self.elapsed = {}

    def get(self, name):
        if name not in self.points:
            t0 = time.perf_counter()
            xs = build_sequence(family(name)).xs
            self.seqs[name] = xs
            self.points[name] = weak_cluster(xs, Oracle("certified"))
            self.elapsed[name] = time.perf_counter() - t0
        return self.points[name]


@pytest.fixture(scope="session")
def cluster_runs():
    return _ClusterRuns()


@pytest.fixture(params=FAMILY_NAMES)
def family_name(request):
    return request.param
