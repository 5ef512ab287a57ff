import pytest

HEADER = "scenario,method,seed,step,n_valid,mean,q1,median,q3,likelihood"

# small two-method run: rejection loses all particles by step 2
CANON = [
    "deep-box,clasp,0,0,30,0.0123,0.008,0.0115,0.016,81.25",
    "deep-box,clasp,0,1,28,0.0095,0.006,0.009,0.012,105.5",
    "deep-box,clasp,0,2,27,0.005,0.003,0.0045,0.007,210.125",
    "deep-box,rejection,0,0,30,0.015,0.009,0.014,0.02,66.0",
    "deep-box,rejection,0,1,4,0.02,0.012,0.018,0.025,50.0",
    "deep-box,rejection,0,2,0,,,,,0",
]


@pytest.fixture
def stats_header():
    return HEADER


@pytest.fixture
def canon_lines():
    return list(CANON)


@pytest.fixture
def write_stats(tmp_path):
    """Factory writing a stats.csv with the canonical header; csv.writer
    line endings, matching the engine's artifact files."""
    def _write(lines, name="stats.csv", header=HEADER):
        path = tmp_path / name
        path.write_text("\r\n".join([header, *lines]) + "\r\n")
        return path
    return _write
