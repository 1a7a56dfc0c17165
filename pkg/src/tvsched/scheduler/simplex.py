"""Revised dual simplex for ``min c.x  s.t.  A x <= b,  lo <= x <= hi``.

Every row gets a slack ``s >= 0`` so that ``A x + s = b``. Structural
variables must be finitely boxed, which makes any basis dual feasible once
each nonbasic structural sits at the bound matching the sign of its reduced
cost. The solver therefore never needs a primal phase 1, and a basis from a
parent problem warm-starts a child whose bounds or right-hand side changed.

The ratio test flips boxed variables across their breakpoints while the
leaving row's infeasibility allows it (bound-flipping ratio test), which
keeps the pivot count near the number of rows on assignment-type problems.

Problems with many equal costs stall on dual-degenerate pivots. A small
``perturb`` lowers each cost by a random fraction of its size; with
``lo >= 0`` the perturbed optimum stays a valid lower bound for the true
one and is reported as ``LPResult.bound``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

BASIC, AT_LO, AT_HI = 0, 1, 2

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"
CUTOFF = "cutoff"


@dataclass(frozen=True)
class SimplexBasis:
    basis: np.ndarray   # variable index per row (structurals 0..n-1, slacks n..n+m-1)
    status: np.ndarray  # BASIC / AT_LO / AT_HI per variable


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float          # true c.x at ``x``
    basis: SimplexBasis | None
    iterations: int
    bound: float = np.nan     # perturbed optimum, <= the true optimum


class DualSimplex:
    """Reusable solver for one constraint matrix with varying ``b``, ``lo`` and ``hi``."""

    def __init__(self, c, A, primal_tol: float = 1e-7, dual_tol: float = 1e-9,
                 pivot_tol: float = 1e-9, refactor_every: int = 64, perturb: float = 0.0,
                 seed: int = 0):
        A = sp.csc_matrix(A, dtype=float)
        m, n = A.shape
        c = np.asarray(c, dtype=float)
        if c.shape != (n,):
            raise ValueError("objective length does not match A")
        row_scale = np.ones(m)
        if m:
            rmax = abs(A).max(axis=1).toarray().ravel()
            row_scale = np.where(rmax > 0, 1.0 / np.where(rmax > 0, rmax, 1.0), 1.0)
        self.row_scale = row_scale
        self.A = sp.csc_matrix(sp.diags(row_scale) @ A)
        self.AT = sp.csr_matrix(self.A.T)
        cmax = np.abs(c).max() if n else 1.0
        self.c_scale = 1.0 / cmax if cmax > 0 else 1.0
        self.c_true = c * self.c_scale
        self.c = self.c_true.copy()
        if perturb > 0:
            u = np.random.default_rng(seed).random(n)
            self.c -= perturb * (0.5 + 0.5 * u) * np.maximum(np.abs(self.c), 1e-3)
        self.m, self.n = m, n
        self.primal_tol = primal_tol
        self.dual_tol = dual_tol
        self.pivot_tol = pivot_tol
        self.refactor_every = refactor_every

    # -- helpers -------------------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            col = np.zeros(self.m)
            start, end = self.A.indptr[j], self.A.indptr[j + 1]
            col[self.A.indices[start:end]] = self.A.data[start:end]
            return col
        e = np.zeros(self.m)
        e[j - self.n] = 1.0
        return e

    def _factor(self, basis: np.ndarray) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        for r, j in enumerate(basis):
            B[:, r] = self._column(int(j))
        return np.linalg.inv(B)

    def _primal_values(self, Binv, status, b, lo, hi):
        n = self.n
        xs = np.where(status[:n] == AT_HI, hi, lo)
        xs = np.where(status[:n] == BASIC, 0.0, xs)
        # Nonbasic slacks sit at zero, so only structurals move the rhs.
        xb = Binv @ (b - self.A @ xs)
        return xs, xb

    def _reduced_costs(self, Binv, basis):
        cb = np.zeros(self.m)
        struct = basis < self.n
        cb[struct] = self.c[basis[struct]]
        y = cb @ Binv
        d_struct = self.c - self.AT @ y
        d_slack = -y
        return np.concatenate([d_struct, d_slack])

    # -- main loop -------------------------------------------------------------

    def solve(self, b, lo, hi, warm: SimplexBasis | None = None, max_iter: int = 50_000,
              cutoff: float = np.inf) -> LPResult:
        """Solve for the given rhs and structural bounds.

        ``cutoff`` is in original objective units: once the dual bound proves
        the optimum exceeds it, the solve stops with status ``cutoff``.
        """
        m, n = self.m, self.n
        b = np.asarray(b, dtype=float) * self.row_scale
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("structural variables must be finitely bounded")
        if (lo > hi).any():
            return LPResult(INFEASIBLE, None, np.inf, None, 0)
        lo_all = np.concatenate([lo, np.zeros(m)])
        hi_all = np.concatenate([hi, np.full(m, np.inf)])
        span = hi_all - lo_all

        if warm is None:
            basis = np.arange(n, n + m)
            status = np.full(n + m, AT_LO, dtype=np.int8)
            status[basis] = BASIC
        else:
            basis = warm.basis.copy()
            status = warm.status.copy()
        Binv = self._factor(basis)
        d = self._reduced_costs(Binv, basis)
        # Dual feasibility by bound choice for every nonbasic structural.
        nb = np.flatnonzero(status[:n] != BASIC)
        status[nb] = np.where(d[nb] < 0, AT_HI, AT_LO)

        cut_scaled = cutoff * self.c_scale
        since_factor = 0
        for it in range(max_iter):
            xs, xb = self._primal_values(Binv, status, b, lo, hi)
            lo_b, hi_b = lo_all[basis], hi_all[basis]
            below = lo_b - xb
            above = xb - hi_b
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas)) if m else 0
            if m == 0 or infeas[r] <= self.primal_tol:
                x = xs.copy()
                struct_rows = basis < n
                x[basis[struct_rows]] = xb[struct_rows]
                bound = float(self.c @ x) / self.c_scale
                x = np.clip(x, lo, hi)
                obj = float(self.c_true @ x) / self.c_scale
                return LPResult(OPTIMAL, x, obj, SimplexBasis(basis.copy(), status.copy()), it,
                                bound=min(bound, obj))

            if np.isfinite(cut_scaled):
                x_tmp = xs.copy()
                struct_rows = basis < n
                x_tmp[basis[struct_rows]] = xb[struct_rows]
                # Dual objective = c.x at the current (dual feasible) basic solution.
                if float(self.c @ x_tmp) > cut_scaled + 1e-9 * max(1.0, abs(cut_scaled)):
                    return LPResult(CUTOFF, None, float(self.c @ x_tmp) / self.c_scale, None, it)

            leaving_low = below[r] > above[r]
            rho = Binv[r]
            alpha = np.concatenate([self.AT @ rho, rho])
            nonbasic = status != BASIC
            movable = nonbasic & (span > 0)
            if leaving_low:
                cand = movable & (((status == AT_LO) & (alpha < -self.pivot_tol))
                                  | ((status == AT_HI) & (alpha > self.pivot_tol)))
                delta = below[r]
            else:
                cand = movable & (((status == AT_LO) & (alpha > self.pivot_tol))
                                  | ((status == AT_HI) & (alpha < -self.pivot_tol)))
                delta = above[r]
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return LPResult(INFEASIBLE, None, np.inf, None, it)
            dj = d[idx]
            dj = np.where(status[idx] == AT_LO, np.maximum(dj, 0.0), np.maximum(-dj, 0.0))
            aj = np.abs(alpha[idx])
            ratios = dj / aj
            order = np.lexsort((idx, -aj, ratios))
            slope = delta
            flips = []
            q = -1
            for k in order:
                j = idx[k]
                w = aj[k] * span[j]
                if not np.isfinite(w) or slope - w <= self.primal_tol:
                    q = int(j)
                    break
                slope -= w
                flips.append(int(j))
            if q < 0:
                return LPResult(INFEASIBLE, None, np.inf, None, it)

            col = Binv @ self._column(q)
            piv = col[r]
            if abs(piv) < self.pivot_tol or abs(piv - alpha[q]) > 1e-7 * (1 + abs(piv)):
                if since_factor == 0:
                    return LPResult(INFEASIBLE, None, np.inf, None, it)
                Binv = self._factor(basis)
                d = self._reduced_costs(Binv, basis)
                since_factor = 0
                continue

            for j in flips:
                status[j] = AT_HI if status[j] == AT_LO else AT_LO
            leaving = int(basis[r])
            status[leaving] = AT_LO if leaving_low else AT_HI
            status[q] = BASIC
            basis[r] = q
            row = Binv[r] / piv
            Binv -= np.outer(col, row)
            Binv[r] = row
            since_factor += 1
            if since_factor >= self.refactor_every:
                Binv = self._factor(basis)
                since_factor = 0
            d = self._reduced_costs(Binv, basis)
            # Drift guard: restore dual feasibility of boxed nonbasics by flipping.
            nb = np.flatnonzero(status[:n] != BASIC)
            bad = nb[((status[nb] == AT_LO) & (d[nb] < -self.dual_tol * 10))
                     | ((status[nb] == AT_HI) & (d[nb] > self.dual_tol * 10))]
            if bad.size:
                status[bad] = np.where(status[bad] == AT_LO, AT_HI, AT_LO)
        return LPResult(ITERATION_LIMIT, None, np.nan, None, max_iter)
