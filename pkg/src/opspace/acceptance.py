"""Acceptance battery: the structural identities the package must reproduce.

Each criterion function returns a CriterionResult with per-check details;
``run_all`` executes the whole battery.  The same functions back the
pytest acceptance module and the ``opspace check-suite`` command.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cbmaps import LinearMatrixMap, cb_norm, dim_bound_check, norm_lower, transpose_map
from .haagerup import (HaagerupTensor, haagerup_norm_factorized, haagerup_norm_sdp)
from .linalg import BlockMatrix
from .schur import (DiagonalRepresentation, SchurSymbol, apply_symbol,
                    counterexample_report, diagonal_compression_identity_check,
                    kernel_bound_check, multiplier_norm, representation_to_symbol,
                    schur_compression, tail_multiplier_norm)

__all__ = ["CriterionResult", "run_all", "CRITERIA"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    elapsed: float
    worst: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = ", ".join(f"{k}={v:.3e}" for k, v in self.worst.items())
        return (f"criterion {self.number} [{status}] {self.name} "
                f"({self.elapsed:.1f}s) {detail}")


def _transpose_tensor(n: int) -> HaagerupTensor:
    units = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=np.complex128)
            e[i, j] = 1.0
            units.append(e)
    units = np.array(units)
    return HaagerupTensor(n, units, units)


def _random_tensor(rng, d: int, r: int) -> HaagerupTensor:
    scale = 1.0 / np.sqrt(r * d)
    return HaagerupTensor(
        d,
        scale * (rng.standard_normal((r, d, d)) + 1j * rng.standard_normal((r, d, d))),
        scale * (rng.standard_normal((r, d, d)) + 1j * rng.standard_normal((r, d, d))))


def _random_map(rng, d: int, terms: int) -> LinearMatrixMap:
    return LinearMatrixMap.from_pairs(
        [(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)),
          rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
         for _ in range(terms)])


def _random_block(rng, n: int, d: int) -> BlockMatrix:
    return BlockMatrix(rng.standard_normal((n, n, d, d))
                       + 1j * rng.standard_normal((n, n, d, d)))


def criterion_1_transpose_dichotomy() -> CriterionResult:
    """cb(transpose on M_n) = n while the plain norm stays 1."""
    t0 = time.time()
    cb_err = 0.0
    lb_err = 0.0
    for n in range(2, 6):
        t = transpose_map(n)
        cb_err = max(cb_err, abs(cb_norm(t) - n))
        lb_err = max(lb_err, abs(norm_lower(t) - 1.0))
    rows = counterexample_report(4)
    row_cb_err = max(abs(r.block_cb - 1.0) for r in rows)
    row_norm_err = max(abs(r.block_norm - 1.0 / r.k) for r in rows)
    passed = cb_err <= 1e-5 and lb_err <= 1e-6 and row_cb_err <= 1e-4 \
        and row_norm_err <= 1e-6
    return CriterionResult(
        1, "transpose dichotomy", passed, time.time() - t0,
        {"cb_err": cb_err, "norm_err": lb_err,
         "table_cb_err": row_cb_err, "table_norm_err": row_norm_err})


def criterion_2_haagerup_identification() -> CriterionResult:
    """Haagerup norm via SDP matches both the transpose value and the
    factorization search."""
    t0 = time.time()
    transpose_err = max(abs(haagerup_norm_sdp(_transpose_tensor(n)) - n)
                        for n in (2, 3))
    rng = np.random.default_rng(2024)
    route_gap = 0.0
    for _ in range(20):
        v = _random_tensor(rng, int(rng.integers(2, 4)), int(rng.integers(1, 5)))
        s = haagerup_norm_sdp(v)
        f = haagerup_norm_factorized(v)
        route_gap = max(route_gap, abs(s - f.value))
    passed = transpose_err <= 1e-5 and route_gap <= 1e-4
    return CriterionResult(
        2, "Haagerup/cb identification", passed, time.time() - t0,
        {"transpose_err": transpose_err, "route_gap": route_gap})


def criterion_3_bimodule_equality() -> CriterionResult:
    """Scalar multiplier norm equals the cb norm (ascent closes the gap)."""
    t0 = time.time()
    rng = np.random.default_rng(42)
    gap = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 9))
        phi = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        res = multiplier_norm(SchurSymbol.from_scalar(phi))
        gap = max(gap, res.cb - res.norm_lb)
    hadamard = multiplier_norm(SchurSymbol.from_scalar([[1, 1], [1, -1]]))
    hadamard_err = abs(hadamard.cb - np.sqrt(2.0))
    passed = gap <= 1e-3 and hadamard_err <= 1e-6
    return CriterionResult(
        3, "bimodule norm equality", passed, time.time() - t0,
        {"ascent_gap": gap, "hadamard_err": hadamard_err})


def criterion_4_diagonal_compression() -> CriterionResult:
    """Compression of sum R_i T S_i keeps only the diagonal families."""
    t0 = time.time()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 6))
        d = int(rng.integers(1, 4))
        pairs = int(rng.integers(1, 5))
        left = [_random_block(rng, n, d) for _ in range(pairs)]
        right = [_random_block(rng, n, d) for _ in range(pairs)]
        rep = diagonal_compression_identity_check(left, right, trials=2,
                                                  seed=int(rng.integers(1 << 31)))
        worst = max(worst, rep.max_residual)
    passed = worst < 1e-12
    return CriterionResult(
        4, "diagonal-compression identity", passed, time.time() - t0,
        {"residual": worst})


def criterion_5_kernel_bounds() -> CriterionResult:
    """||T_k|| <= ||k||_2 and ||phi.k||_2 <= sup cb * ||k||_2."""
    t0 = time.time()
    rng = np.random.default_rng(11)
    worst = np.inf
    for _ in range(100):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(1, 3))
        kernel = _random_block(rng, n, d)
        if rng.integers(2) or d == 1:
            sym = SchurSymbol.from_scalar(
                rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)),
                block_dim=d)
        else:
            sym = SchurSymbol([[_random_map(rng, d, 2) for _ in range(n)]
                               for _ in range(n)])
        rep = kernel_bound_check(kernel, sym)
        worst = min(worst, rep.norm_margin, rep.image_margin)
    passed = worst >= -1e-10
    return CriterionResult(
        5, "kernel bounds", passed, time.time() - t0, {"min_margin": worst})


def criterion_6_dimension_bound() -> CriterionResult:
    """cb <= d * norm with saturation by the transpose."""
    t0 = time.time()
    rng = np.random.default_rng(2)
    worst_slack = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 5))
        rep = dim_bound_check(_random_map(rng, d, int(rng.integers(1, 4))))
        worst_slack = max(worst_slack, rep.slack_needed)
    sat = dim_bound_check(transpose_map(3))
    saturation_err = abs(sat.ratio - 3.0)
    passed = worst_slack <= 1e-3 and saturation_err <= 1e-4
    return CriterionResult(
        6, "dimension bound", passed, time.time() - t0,
        {"slack": worst_slack, "saturation_err": saturation_err})


def criterion_7_tail_diagnostics() -> CriterionResult:
    """Diagonal 1/k symbol has vanishing tails; the all-ones symbol does not."""
    t0 = time.time()
    n = 8
    diag = SchurSymbol.from_scalar(np.diag([1.0 / (k + 1) for k in range(n)]))
    diag_err = max(abs(tail_multiplier_norm(diag, m) - 1.0 / (m + 1))
                   for m in range(n))
    zero_err = abs(tail_multiplier_norm(diag, n))
    ones = SchurSymbol.identity(n)
    flat_err = max(abs(tail_multiplier_norm(ones, m) - 1.0) for m in range(n))
    passed = diag_err <= 1e-6 and flat_err <= 1e-6 and zero_err == 0.0
    return CriterionResult(
        7, "tail diagnostics", passed, time.time() - t0,
        {"diag_err": diag_err, "flat_err": flat_err})


def criterion_8_round_trips() -> CriterionResult:
    """Symbol <-> compression and representation -> symbol round trips."""
    t0 = time.time()
    rng = np.random.default_rng(17)
    comp_res = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(1, 3))
        grid = [[_random_map(rng, d, int(rng.integers(1, 3))) for _ in range(n)]
                for _ in range(n)]
        sym = SchurSymbol(grid)
        back = schur_compression(lambda t: apply_symbol(sym, t), n, d)
        for p in range(n):
            for q in range(n):
                comp_res = max(comp_res, float(np.abs(
                    back.entries[p][q].choi - sym.entries[p][q].choi).max()))
    rep_res = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(1, 3))
        r = int(rng.integers(1, 4))
        rep = DiagonalRepresentation(
            rng.standard_normal((r, n, d, d)) + 1j * rng.standard_normal((r, n, d, d)),
            rng.standard_normal((r, n, d, d)) + 1j * rng.standard_normal((r, n, d, d)))
        sym = representation_to_symbol(rep)
        t = _random_block(rng, n, d)
        out = apply_symbol(sym, t)
        # independent double-sum evaluation: block (m, n) is sum_i a^i_m T_mn b^i_n
        direct = np.einsum("imuv,mnvw,inwx->mnux", rep.a, t.blocks, rep.b)
        rep_res = max(rep_res, float(np.abs(out.blocks - direct).max()))
    passed = comp_res < 1e-12 and rep_res < 1e-12
    return CriterionResult(
        8, "round trips", passed, time.time() - t0,
        {"compression_res": comp_res, "representation_res": rep_res})


CRITERIA = [
    criterion_1_transpose_dichotomy,
    criterion_2_haagerup_identification,
    criterion_3_bimodule_equality,
    criterion_4_diagonal_compression,
    criterion_5_kernel_bounds,
    criterion_6_dimension_bound,
    criterion_7_tail_diagnostics,
    criterion_8_round_trips,
]


def run_all(printer=None):
    results = []
    for fn in CRITERIA:
        res = fn()
        results.append(res)
        if printer is not None:
            printer(res.line())
    return results
