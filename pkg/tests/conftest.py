import numpy as np
import pytest

from opspace.cbmaps import LinearMatrixMap
from opspace.haagerup import HaagerupTensor
from opspace.linalg import BlockMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rand_matrix(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def rand_map(rng, d_in, d_out=None, terms=2):
    d_out = d_in if d_out is None else d_out
    return LinearMatrixMap.from_pairs(
        [(rand_matrix(rng, d_out, d_in), rand_matrix(rng, d_in, d_out))
         for _ in range(terms)])


def rand_block(rng, n, d):
    return BlockMatrix(rng.standard_normal((n, n, d, d))
                       + 1j * rng.standard_normal((n, n, d, d)))


def rand_tensor(rng, d, r, scale=None):
    scale = 1.0 / np.sqrt(r * d) if scale is None else scale
    return HaagerupTensor(
        d,
        scale * (rng.standard_normal((r, d, d)) + 1j * rng.standard_normal((r, d, d))),
        scale * (rng.standard_normal((r, d, d)) + 1j * rng.standard_normal((r, d, d))))


def matrix_units(d):
    units = np.zeros((d * d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            units[i * d + j, i, j] = 1.0
    return units
