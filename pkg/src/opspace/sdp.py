"""Primal-dual interior-point solver for small dense Hermitian SDPs.

Solves the standard-form pair

    (P)  minimize  sum_b <C_b, X_b>   s.t.  sum_b <A_ib, X_b> = b_i,  X_b >= 0
    (D)  maximize  b' y               s.t.  Z_b = C_b - sum_i y_i A_ib >= 0

over block-diagonal Hermitian variables, with <A, B> = Re tr(A B).  The
algorithm is an infeasible-start HKM predictor-corrector with a Mehrotra
centering heuristic and a dense Schur-complement solve.  Complex Hermitian
data is handled natively (complex Cholesky factors), which halves dimensions
compared to a real embedding.

The solver is deterministic: identical inputs produce identical iterate
sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = ["SdpProblem", "SdpSolution", "SdpFailure", "solve",
           "OPTIMAL", "MAX_ITER", "INFEASIBLE"]

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"

_HERM_TOL = 1e-12


class SdpFailure(RuntimeError):
    """Raised by callers when a solve does not reach Optimal."""

    def __init__(self, status: str, detail: str = ""):
        super().__init__(f"solver failure: status={status}" + (f" ({detail})" if detail else ""))
        self.status = status


def _check_hermitian(mat: np.ndarray, what: str) -> np.ndarray:
    scale = max(1.0, float(np.abs(mat).max()) if mat.size else 0.0)
    if np.abs(mat - mat.conj().T).max() > _HERM_TOL * scale:
        raise ValueError(f"{what} is not Hermitian within {_HERM_TOL}")
    return 0.5 * (mat + mat.conj().T)


class SdpProblem:
    """Standard-form SDP data over a block-diagonal Hermitian variable.

    Args:
        block_dims: dimensions of the PSD blocks.
        c: objective matrix per block (Hermitian).
        constraints: list of (per-block matrices, rhs) pairs; each matrix
            Hermitian with the block's dimension.
        check_rank: verify that the constraint matrices are linearly
            independent.  Construction detects inconsistent duplicate
            constraints (same matrices, different rhs) and marks the problem
            infeasible instead of raising.  Internal builders that construct
            orthogonal constraint sets may skip the check.
    """

    def __init__(self, block_dims, c, constraints, check_rank: bool = True):
        self.block_dims = [int(d) for d in block_dims]
        if any(d <= 0 for d in self.block_dims):
            raise ValueError("block dimensions must be positive")
        if len(c) != len(self.block_dims):
            raise ValueError("one objective matrix per block required")
        self.c = []
        for d, cb in zip(self.block_dims, c):
            cb = np.asarray(cb, dtype=np.complex128)
            if cb.shape != (d, d):
                raise ValueError(f"objective block has shape {cb.shape}, expected ({d}, {d})")
            self.c.append(_check_hermitian(cb, "objective block"))
        m = len(constraints)
        self.b = np.zeros(m, dtype=float)
        # Constraint matrices stacked per block: a[bi] has shape (m, d, d).
        self.a = [np.zeros((m, d, d), dtype=np.complex128) for d in self.block_dims]
        for i, (mats, rhs) in enumerate(constraints):
            if len(mats) != len(self.block_dims):
                raise ValueError("each constraint needs one matrix per block")
            self.b[i] = float(rhs)
            for bi, (d, mat) in enumerate(zip(self.block_dims, mats)):
                mat = np.asarray(mat, dtype=np.complex128)
                if mat.shape != (d, d):
                    raise ValueError(f"constraint {i} block {bi} has shape {mat.shape}")
                self.a[bi][i] = _check_hermitian(mat, f"constraint {i} block {bi}")
        self.num_constraints = m
        self.flagged_infeasible = False
        if check_rank and m > 0:
            self._rank_check()

    def _rank_check(self):
        m = self.num_constraints
        gram = np.zeros((m, m))
        for ab in self.a:
            flat = ab.reshape(m, -1)
            gram += np.real(flat.conj() @ flat.T)
        evals, vecs = np.linalg.eigh(gram)
        cutoff = max(evals[-1], 1.0) * 1e-12
        null = vecs[:, evals < cutoff]
        if null.shape[1] == 0:
            return
        resid = null.T @ self.b
        if np.abs(resid).max() > 1e-9 * (1.0 + np.abs(self.b).max()):
            # Dependent constraint matrices with inconsistent right-hand
            # sides: no feasible point exists.
            self.flagged_infeasible = True
        else:
            raise ValueError("constraint matrices are linearly dependent")


@dataclass
class SdpSolution:
    """Primal-dual solution with a certified duality gap."""

    x: list = field(repr=False)
    y: np.ndarray = field(repr=False)
    z: list = field(repr=False)
    primal_obj: float = 0.0
    dual_obj: float = 0.0
    gap: float = 0.0
    rel_gap: float = 0.0
    primal_res: float = 0.0
    dual_res: float = 0.0
    status: str = MAX_ITER
    iterations: int = 0

    @property
    def value(self) -> float:
        """Midpoint of the primal and dual objectives."""
        return 0.5 * (self.primal_obj + self.dual_obj)


def _min_eig_scaled(lfac: np.ndarray, delta: np.ndarray) -> float:
    # smallest eigenvalue of L^{-1} delta L^{-*}
    w = scipy.linalg.solve_triangular(lfac, delta, lower=True)
    w = scipy.linalg.solve_triangular(lfac, w.conj().T, lower=True)
    w = 0.5 * (w + w.conj().T)
    return float(np.linalg.eigvalsh(w)[0])


def _max_step(mats, deltas, lfacs) -> float:
    alpha = np.inf
    for mat, delta, lfac in zip(mats, deltas, lfacs):
        lam = _min_eig_scaled(lfac, delta)
        if lam < -1e-14:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def solve(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 200) -> SdpSolution:
    """Run the predictor-corrector iteration on ``problem``.

    Status is ``optimal`` when the relative duality gap and both feasibility
    residuals fall below ``tol``; ``infeasible`` when construction flagged an
    inconsistency or a Farkas-type certificate of primal infeasibility is
    found; ``max_iter`` otherwise.
    """
    dims = problem.block_dims
    nblocks = len(dims)
    m = problem.num_constraints
    ntot = sum(dims)

    def empty_solution(status):
        return SdpSolution(
            x=[np.zeros((d, d), dtype=np.complex128) for d in dims],
            y=np.zeros(m), z=[cb.copy() for cb in problem.c], status=status)

    if problem.flagged_infeasible:
        return empty_solution(INFEASIBLE)
    if m == 0:
        # No constraints: optimum X = 0 if C >= 0, otherwise unbounded below.
        sol = empty_solution(OPTIMAL)
        for cb in problem.c:
            if np.linalg.eigvalsh(cb)[0] < -tol:
                return empty_solution(INFEASIBLE)
        return sol

    a_flat = [problem.a[bi].reshape(m, -1) for bi in range(nblocks)]
    norm_b = float(np.linalg.norm(problem.b))
    norm_c = max(float(np.linalg.norm(cb)) for cb in problem.c)
    norm_a = max(float(np.abs(af).max()) if af.size else 0.0 for af in a_flat)

    # Big-M self-start: X and Z proportional to the identity at a scale set
    # by the problem data, y = 0.
    a_row_norms = np.sqrt(sum(np.abs(af) ** 2 @ np.ones(af.shape[1]) for af in a_flat))
    xi = max(10.0, np.sqrt(ntot),
             ntot * float(np.max((1.0 + np.abs(problem.b)) / (1.0 + a_row_norms))))
    eta = max(10.0, np.sqrt(ntot), norm_c, float(a_row_norms.max()) if m else 1.0)
    x = [xi * np.eye(d, dtype=np.complex128) for d in dims]
    z = [eta * np.eye(d, dtype=np.complex128) for d in dims]
    y = np.zeros(m)

    def operator_a(mats):
        out = np.zeros(m)
        for bi in range(nblocks):
            out += np.real(a_flat[bi].conj() @ mats[bi].reshape(-1))
        return out

    def operator_at(vec):
        return [np.einsum("i,ijk->jk", vec, problem.a[bi]) for bi in range(nblocks)]

    best = None
    status = MAX_ITER
    iters = 0
    for it in range(1, max_iter + 1):
        iters = it
        pobj = sum(float(np.real(np.vdot(cb, xb))) for cb, xb in zip(problem.c, x))
        dobj = float(problem.b @ y)
        gap = sum(float(np.real(np.vdot(xb, zb))) for xb, zb in zip(x, z))
        mu = gap / ntot
        rp = problem.b - operator_a(x)
        aty = operator_at(y)
        rd = [problem.c[bi] - z[bi] - aty[bi] for bi in range(nblocks)]
        rel_gap = abs(gap) / (1.0 + abs(pobj) + abs(dobj))
        p_res = float(np.linalg.norm(rp)) / (1.0 + norm_b)
        d_res = max(float(np.linalg.norm(rd[bi])) for bi in range(nblocks)) / (1.0 + norm_c)

        snapshot = SdpSolution(
            x=[xb.copy() for xb in x], y=y.copy(), z=[zb.copy() for zb in z],
            primal_obj=pobj, dual_obj=dobj, gap=gap, rel_gap=rel_gap,
            primal_res=p_res, dual_res=d_res, status=status, iterations=it)
        if best is None or (rel_gap + p_res + d_res) < (best.rel_gap + best.primal_res + best.dual_res):
            best = snapshot

        if rel_gap <= tol and p_res <= tol and d_res <= tol:
            snapshot.status = OPTIMAL
            return snapshot

        # Farkas-type certificate: a dual ray with b'y > 0 and A*(y) <= 0
        # proves primal infeasibility.
        if dobj > 1e6 * (1.0 + norm_b) * (1.0 + abs(pobj)):
            yhat = y / dobj
            athat = operator_at(yhat)
            lam = max(float(np.linalg.eigvalsh(ab)[-1]) for ab in athat)
            if lam <= 1e-8 * max(1.0, norm_a):
                snapshot.status = INFEASIBLE
                return snapshot

        try:
            lx = [np.linalg.cholesky(xb) for xb in x]
            lz = [np.linalg.cholesky(zb) for zb in z]
        except np.linalg.LinAlgError:
            break
        eye_blocks = [np.eye(d, dtype=np.complex128) for d in dims]
        zinv = [scipy.linalg.cho_solve((lz[bi], True), eye_blocks[bi]) for bi in range(nblocks)]
        zinv = [0.5 * (w + w.conj().T) for w in zinv]

        # Dense Schur complement M_ij = Re tr(A_i X A_j Z^{-1}).
        schur = np.zeros((m, m))
        t_flat = []
        for bi in range(nblocks):
            t = np.matmul(np.matmul(x[bi][None], problem.a[bi]), zinv[bi][None])
            tf = t.reshape(m, -1)
            t_flat.append(tf)
            schur += np.real(a_flat[bi].conj() @ tf.T)
        schur = 0.5 * (schur + schur.T)

        try:
            schur_cf = scipy.linalg.cho_factor(
                schur + (1e-13 * max(schur.trace() / m, 1.0)) * np.eye(m))
        except np.linalg.LinAlgError:
            break

        term_x = operator_a(x)
        term_zi = operator_a(zinv)
        xrdzi = [x[bi] @ rd[bi] @ zinv[bi] for bi in range(nblocks)]
        term_xrdzi = operator_a(xrdzi)

        # Predictor: affine-scaling direction (sigma = 0).
        rhs_aff = rp + term_x + term_xrdzi
        dy_aff = scipy.linalg.cho_solve(schur_cf, rhs_aff)
        at_dy = operator_at(dy_aff)
        dz_aff = [rd[bi] - at_dy[bi] for bi in range(nblocks)]
        dx_aff = []
        for bi in range(nblocks):
            w = -x[bi] - x[bi] @ dz_aff[bi] @ zinv[bi]
            dx_aff.append(0.5 * (w + w.conj().T))

        alpha_p_max = _max_step(x, dx_aff, lx)
        alpha_d_max = _max_step(z, dz_aff, lz)
        alpha_p_aff = min(1.0, alpha_p_max)
        alpha_d_aff = min(1.0, alpha_d_max)
        gap_aff = sum(
            float(np.real(np.vdot(x[bi] + alpha_p_aff * dx_aff[bi],
                                  z[bi] + alpha_d_aff * dz_aff[bi])))
            for bi in range(nblocks))
        mu_aff = max(gap_aff, 0.0) / ntot
        sigma = float(np.clip((mu_aff / mu) ** 3 if mu > 0 else 0.0, 1e-10, 1.0))

        # Corrector with Mehrotra second-order term.
        cross = [dx_aff[bi] @ dz_aff[bi] @ zinv[bi] for bi in range(nblocks)]
        rhs = rp + term_x - sigma * mu * term_zi + term_xrdzi + operator_a(cross)
        dy = scipy.linalg.cho_solve(schur_cf, rhs)
        at_dy = operator_at(dy)
        dz = [rd[bi] - at_dy[bi] for bi in range(nblocks)]
        dx = []
        for bi in range(nblocks):
            w = sigma * mu * zinv[bi] - x[bi] - x[bi] @ dz[bi] @ zinv[bi] - cross[bi]
            dx.append(0.5 * (w + w.conj().T))

        alpha_p_max = _max_step(x, dx, lx)
        alpha_d_max = _max_step(z, dz, lz)
        # Mehrotra-style adaptive step fraction.
        gamma = min(0.99, max(0.90, 0.9 + 0.09 * min(alpha_p_aff, alpha_d_aff)))
        alpha_p = min(1.0, gamma * alpha_p_max)
        alpha_d = min(1.0, gamma * alpha_d_max)
        if alpha_p <= 1e-10 and alpha_d <= 1e-10:
            break

        for bi in range(nblocks):
            x[bi] = 0.5 * ((x[bi] + alpha_p * dx[bi]) + (x[bi] + alpha_p * dx[bi]).conj().T)
            z[bi] = 0.5 * ((z[bi] + alpha_d * dz[bi]) + (z[bi] + alpha_d * dz[bi]).conj().T)
        y = y + alpha_d * dy

    best.status = MAX_ITER
    best.iterations = iters
    return best
