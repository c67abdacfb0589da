"""JSON wire formats for the package's value types.

Formats:

* matrix:          {"rows": R, "cols": C, "re": [...], "im": [...]}  (row-major)
* block matrix:    {"gridSize": N, "blockDim": d, "blocks": [[matrix, ...], ...]}
* linear map:      {"inDim": d, "outDim": d2, "pairs": [{"A": m, "B": m}, ...]}
                   or {"choi": matrix, "inDim": d, "outDim": d2} (dims optional
                   for square Choi matrices)
* tensor:          {"dim": d, "rows": [matrix, ...], "cols": [matrix, ...]}
* symbol:          {"gridSize": N, "blockDim": d, "entries": [[map, ...], ...]}
                   or the scalar shortcut {"scalar": [[...]]} with entries given
                   as numbers or [re, im] pairs
* representation:  {"a": [[matrix, ...], ...], "b": [[matrix, ...], ...]}

Parsing errors raise ValueError naming the offending field.
"""

from __future__ import annotations

import numpy as np

from .cbmaps import LinearMatrixMap
from .haagerup import HaagerupTensor
from .linalg import BlockMatrix
from .schur import DiagonalRepresentation, SchurSymbol

__all__ = [
    "matrix_to_json", "matrix_from_json",
    "block_matrix_to_json", "block_matrix_from_json",
    "map_to_json", "map_from_json",
    "tensor_to_json", "tensor_from_json",
    "symbol_to_json", "symbol_from_json",
    "representation_to_json", "representation_from_json",
    "scalar_to_json",
]


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected a JSON object")
    if key not in obj:
        raise ValueError(f"{where}: missing field '{key}'")
    return obj[key]


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError("matrix must be 2-D")
    return {"rows": a.shape[0], "cols": a.shape[1],
            "re": a.real.reshape(-1).tolist(),
            "im": a.imag.reshape(-1).tolist()}


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    rows = int(_require(obj, "rows", where))
    cols = int(_require(obj, "cols", where))
    re = np.asarray(_require(obj, "re", where), dtype=float)
    im = np.asarray(obj.get("im", np.zeros(rows * cols)), dtype=float)
    if re.size != rows * cols or im.size != rows * cols:
        raise ValueError(f"{where}: 're'/'im' must have length rows*cols")
    return (re + 1j * im).reshape(rows, cols)


def block_matrix_to_json(bm: BlockMatrix) -> dict:
    n = bm.grid_size
    return {"gridSize": n, "blockDim": bm.block_dim,
            "blocks": [[matrix_to_json(bm.blocks[i, j]) for j in range(n)]
                       for i in range(n)]}


def block_matrix_from_json(obj, where: str = "block matrix") -> BlockMatrix:
    n = int(_require(obj, "gridSize", where))
    d = int(_require(obj, "blockDim", where))
    rows = _require(obj, "blocks", where)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"{where}: 'blocks' must be an {n}x{n} grid")
    blocks = np.zeros((n, n, d, d), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            mat = matrix_from_json(rows[i][j], f"{where}.blocks[{i}][{j}]")
            if mat.shape != (d, d):
                raise ValueError(f"{where}.blocks[{i}][{j}]: expected shape ({d}, {d})")
            blocks[i, j] = mat
    return BlockMatrix(blocks)


def map_to_json(m: LinearMatrixMap) -> dict:
    return {"inDim": m.in_dim, "outDim": m.out_dim,
            "pairs": [{"A": matrix_to_json(a), "B": matrix_to_json(b)}
                      for a, b in m.pairs]}


def map_from_json(obj, where: str = "map") -> LinearMatrixMap:
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected a JSON object")
    if "choi" in obj:
        choi = matrix_from_json(obj["choi"], f"{where}.choi")
        if "inDim" in obj and "outDim" in obj:
            d_in, d_out = int(obj["inDim"]), int(obj["outDim"])
        else:
            side = int(round(np.sqrt(choi.shape[0])))
            if side * side != choi.shape[0]:
                raise ValueError(
                    f"{where}: cannot infer dimensions from a {choi.shape[0]}-dim "
                    "Choi matrix; give 'inDim' and 'outDim'")
            d_in = d_out = side
        return LinearMatrixMap.from_choi(choi, d_in, d_out)
    d_in = int(_require(obj, "inDim", where))
    d_out = int(_require(obj, "outDim", where))
    pairs = []
    for k, pair in enumerate(_require(obj, "pairs", where)):
        pairs.append((matrix_from_json(_require(pair, "A", f"{where}.pairs[{k}]"),
                                       f"{where}.pairs[{k}].A"),
                      matrix_from_json(_require(pair, "B", f"{where}.pairs[{k}]"),
                                       f"{where}.pairs[{k}].B")))
    return LinearMatrixMap(d_in, d_out, pairs)


def tensor_to_json(v: HaagerupTensor) -> dict:
    return {"dim": v.dim,
            "rows": [matrix_to_json(v.rows[k]) for k in range(v.length)],
            "cols": [matrix_to_json(v.cols[k]) for k in range(v.length)]}


def tensor_from_json(obj, where: str = "tensor") -> HaagerupTensor:
    d = int(_require(obj, "dim", where))
    rows = [matrix_from_json(m, f"{where}.rows[{k}]")
            for k, m in enumerate(_require(obj, "rows", where))]
    cols = [matrix_from_json(m, f"{where}.cols[{k}]")
            for k, m in enumerate(_require(obj, "cols", where))]
    if len(rows) != len(cols):
        raise ValueError(f"{where}: 'rows' and 'cols' must have equal length")
    shape = (len(rows), d, d)
    return HaagerupTensor(d,
                          np.array(rows, dtype=np.complex128).reshape(shape),
                          np.array(cols, dtype=np.complex128).reshape(shape))


def scalar_to_json(value: complex):
    if abs(complex(value).imag) == 0.0:
        return complex(value).real
    return [complex(value).real, complex(value).imag]


def _scalar_from_json(entry, where):
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, list) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise ValueError(f"{where}: scalar entries must be numbers or [re, im] pairs")


def symbol_to_json(sym: SchurSymbol) -> dict:
    if sym.is_scalar:
        scal = sym.scalar_matrix
        return {"scalar": [[scalar_to_json(scal[i, j]) for j in range(sym.grid_size)]
                           for i in range(sym.grid_size)],
                "blockDim": sym.block_dim}
    n = sym.grid_size
    return {"gridSize": n, "blockDim": sym.block_dim,
            "entries": [[map_to_json(sym.entries[i][j]) for j in range(n)]
                        for i in range(n)]}


def symbol_from_json(obj, where: str = "symbol") -> SchurSymbol:
    if not isinstance(obj, dict):
        raise ValueError(f"{where}: expected a JSON object")
    if "scalar" in obj:
        grid = obj["scalar"]
        n = len(grid)
        if any(len(row) != n for row in grid):
            raise ValueError(f"{where}.scalar: must be a square grid")
        scal = np.array([[_scalar_from_json(grid[i][j], f"{where}.scalar[{i}][{j}]")
                          for j in range(n)] for i in range(n)],
                        dtype=np.complex128).reshape(n, n)
        return SchurSymbol.from_scalar(scal, block_dim=int(obj.get("blockDim", 1)))
    n = int(_require(obj, "gridSize", where))
    d = int(_require(obj, "blockDim", where))
    rows = _require(obj, "entries", where)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"{where}: 'entries' must be an {n}x{n} grid")
    grid = [[map_from_json(rows[i][j], f"{where}.entries[{i}][{j}]")
             for j in range(n)] for i in range(n)]
    return SchurSymbol(grid, block_dim=d)


def representation_to_json(rep: DiagonalRepresentation) -> dict:
    r, n = rep.length, rep.grid_size
    return {"a": [[matrix_to_json(rep.a[i, k]) for k in range(n)] for i in range(r)],
            "b": [[matrix_to_json(rep.b[i, k]) for k in range(n)] for i in range(r)]}


def representation_from_json(obj, where: str = "representation") -> DiagonalRepresentation:
    a_rows = _require(obj, "a", where)
    b_rows = _require(obj, "b", where)
    if len(a_rows) != len(b_rows):
        raise ValueError(f"{where}: 'a' and 'b' must have equal length")
    a = [[matrix_from_json(m, f"{where}.a[{i}][{k}]") for k, m in enumerate(row)]
         for i, row in enumerate(a_rows)]
    b = [[matrix_from_json(m, f"{where}.b[{i}][{k}]") for k, m in enumerate(row)]
         for i, row in enumerate(b_rows)]
    if not a:
        raise ValueError(f"{where}: empty representation needs at least one family")
    return DiagonalRepresentation(np.array(a), np.array(b))
