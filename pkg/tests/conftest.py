import shutil
from pathlib import Path

import pytest

from holefill import labelers, pooling, synthetic

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def track():
    return synthetic.make_track(seed=0)


@pytest.fixture(scope="session")
def pool(track):
    return pooling.simulate_shallow_pool(track.baseline, track.qrels, rel_threshold=2)


@pytest.fixture(scope="session")
def holes(track, pool):
    return pooling.find_holes(track.runs, pool, depth=10)


@pytest.fixture(scope="session")
def oracle_records(track, pool, holes):
    return labelers.label(labelers.OracleLabeler(track.qrels), pool, holes)


@pytest.fixture(scope="session")
def track_dir(tmp_path_factory, track):
    out = tmp_path_factory.mktemp("track")
    synthetic.write_track(track, out)
    return out


@pytest.fixture()
def mini_dir(tmp_path):
    """Fresh copy of the checked-in mini track (2 queries, 2 runs)."""
    dest = tmp_path / "mini"
    shutil.copytree(DATA_DIR / "mini", dest)
    return dest
