"""Shared fixtures: the desk rings at small precision and crystal files."""

import json

import pytest

from prismkit.base_rings import OKMatrix, RingSpec
from prismkit.crystal import Crystal


@pytest.fixture
def q3():
    """Q_3 with E = u - 3, stored mod 3^4."""
    return RingSpec(3, (0, 1), (-3, 1), 4)


@pytest.fixture
def q9():
    """The unramified quadratic extension of Q_3, h = x^2 + 1."""
    return RingSpec(3, (1, 0, 1), (-3, 1), 4)


@pytest.fixture
def ram5():
    """Q_5(5^{1/3}), E = u^3 - 5, stored mod 5^3."""
    return RingSpec(5, (0, 1), (-5, 0, 0, 1), 3)


@pytest.fixture
def ram3():
    """Q_3(zeta_3), E = u^2 + 3u + 3."""
    return RingSpec(3, (0, 1), (3, 3, 1), 4)


@pytest.fixture
def pi_crystal(q3):
    """Rank 1, phi = 3."""
    return Crystal(q3, OKMatrix.from_rows(q3, [[3]]))


@pytest.fixture
def rank2_crystal(q3):
    """Rank 2, phi = 3 I + N with N a nonzero nilpotent."""
    return Crystal(q3, OKMatrix.from_rows(q3, [[3, 1], [0, 3]]))


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path as a string."""

    def _write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return _write


@pytest.fixture
def q3_ring_dict():
    return {"p": 3, "residue_min_poly": [0, 1], "eisenstein": [-3, 1], "precision": 4}
