"""Matrix initial-value integration across [0, pi] at fixed spectral parameter.

The second-order system Y'' = (2*lambda*P(x) + Q(x) - lambda^2 I) Y is driven
by classical fixed-step RK4 on its first-order form.  Sweeps are vectorized
over a batch of lambda values, which is what makes window scans and root
refinement affordable; the characteristic matrix W(lambda) = C Y(pi) + D Y'(pi)
is reduced to a determinant (LU) and smallest singular value (SVD) per sample.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ioutil import format_float
from .model import (PI, PencilProblem, UniformGrid, p_values, q_matrices,
                    validate_boundary)

# Chunk size is capped so the per-chunk coefficient table stays within budget.
_TABLE_FLOAT_BUDGET = 16_000_000


class IntegrationOverflowError(ArithmeticError):
    """State became non-finite during propagation."""

    def __init__(self, lam, node=None):
        self.lam = lam
        self.node = node
        where = f" near node {node}" if node is not None else ""
        super().__init__(f"propagation overflowed at lambda={lam!r}{where}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Y and Y' sampled at every grid node for one lambda."""

    lam: float
    grid: UniformGrid
    y_samples: np.ndarray
    yprime_samples: np.ndarray


@dataclass(frozen=True, eq=False)
class CharacteristicSample:
    lam: float
    w: np.ndarray
    det_w: float
    sigma_min: float


def default_grid_steps(lambda_abs_max: float) -> int:
    """Default step count for a window reaching |lambda| = lambda_abs_max."""
    return max(2000, math.ceil(40.0 * PI * abs(lambda_abs_max)))


def left_initial_data(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Initial data (B^T, -A^T) encoding the left boundary condition.

    Requires B A^T = 0 and full row rank of [A, B]; Neumann (A=0, B=I)
    reduces to Y(0) = I, Y'(0) = 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    report = validate_boundary(a, b, np.zeros_like(a), np.eye(a.shape[0]))
    bad = [c.condition for c in report.checks
           if not c.passed and c.condition in ("left_orthogonality", "left_rank")]
    if bad:
        from .model import BoundaryValidationError

        raise BoundaryValidationError(f"left boundary pair inadmissible: {', '.join(bad)}")
    return b.T.copy(), -a.T.copy()


class _Propagator:
    """Coefficient tables for one (problem, grid), reusable across sweeps."""

    def __init__(self, problem: PencilProblem, grid: UniformGrid):
        self.problem = problem
        self.grid = grid
        self.d = problem.dimension
        n = grid.n_steps
        xs_half = np.linspace(0.0, PI, 2 * n + 1)
        self.two_p = 2.0 * p_values(problem, xs_half)  # (2n+1, d)
        self.q = q_matrices(problem, xs_half)          # (2n+1, d, d)

    def _chunk_size(self) -> int:
        per_lambda = self.q.shape[0] * self.d * self.d
        return max(8, _TABLE_FLOAT_BUDGET // per_lambda)

    def _sweep(self, lams: np.ndarray, y0: np.ndarray, z0: np.ndarray,
               record: tuple[np.ndarray, np.ndarray] | None = None):
        """RK4 over the whole grid for a batch of lambda values."""
        n = self.grid.n_steps
        h = self.grid.step
        d = self.d
        nlam = lams.shape[0]

        m = np.broadcast_to(self.q, (nlam,) + self.q.shape).copy()
        diag_view = np.einsum("lmii->lmi", m)
        diag_view += lams[:, None, None] * self.two_p[None] \
            - (lams * lams)[:, None, None]

        y = np.broadcast_to(y0, (nlam, d, d)).copy()
        z = np.broadcast_to(z0, (nlam, d, d)).copy()
        if record is not None:
            record[0][0] = y
            record[1][0] = z

        shape = (nlam, d, d)
        t1, t2, t3, t4 = (np.empty(shape) for _ in range(4))
        u, v, ya, yb, yc, w1, s = (np.empty(shape) for _ in range(7))
        half_h = 0.5 * h
        h2_4 = 0.25 * h * h
        h2_2 = 0.5 * h * h
        h2_6 = h * h / 6.0
        h_6 = h / 6.0

        # overflow surfaces as non-finite endpoints checked by the caller
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(n):
                mi = m[:, 2 * i]
                mm = m[:, 2 * i + 1]
                mn = m[:, 2 * i + 2]
                np.matmul(mi, y, out=t1)
                np.multiply(z, half_h, out=u)
                np.add(y, u, out=ya)
                np.matmul(mm, ya, out=t2)
                np.multiply(t1, h2_4, out=v)
                np.add(ya, v, out=yb)
                np.matmul(mm, yb, out=t3)
                np.add(ya, u, out=yc)
                np.multiply(t2, h2_2, out=v)
                np.add(yc, v, out=yc)
                np.matmul(mn, yc, out=t4)
                np.add(ya, u, out=w1)
                np.add(t1, t2, out=s)
                np.add(s, t3, out=s)
                np.multiply(s, h2_6, out=v)
                np.add(w1, v, out=y)
                np.add(s, t2, out=s)
                np.add(s, t3, out=s)
                np.add(s, t4, out=s)
                np.multiply(s, h_6, out=v)
                np.add(z, v, out=z)
                if record is not None:
                    record[0][i + 1] = y
                    record[1][i + 1] = z
        return y, z

    def endpoints(self, lams, y0, z0, jobs: int | None = None):
        """(Y(pi), Y'(pi)) for each lambda, shape (len(lams), d, d) each."""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        chunk = self._chunk_size()
        starts = list(range(0, lams.shape[0], chunk))
        if len(starts) <= 1:
            y, z = self._sweep(lams, y0, z0)
        else:
            workers = jobs if jobs else (os.cpu_count() or 1)
            parts: list = [None] * len(starts)

            def run(k: int):
                lo = starts[k]
                parts[k] = self._sweep(lams[lo:lo + chunk], y0, z0)

            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    list(pool.map(run, range(len(starts))))
            else:
                for k in range(len(starts)):
                    run(k)
            y = np.concatenate([p[0] for p in parts])
            z = np.concatenate([p[1] for p in parts])

        good = np.isfinite(y).all(axis=(1, 2)) & np.isfinite(z).all(axis=(1, 2))
        if not good.all():
            raise IntegrationOverflowError(float(lams[np.argmin(good)]))
        return y, z


def _problem_initial_data(problem: PencilProblem):
    return left_initial_data(problem.left_a, problem.left_b)


def integrate(problem: PencilProblem, lam: float, grid: UniformGrid,
              initial=None) -> Trajectory:
    """Propagate the matrix solution at one lambda, keeping every node.

    initial defaults to the problem's left boundary data (B^T, -A^T); pass
    (Y0, Y0') explicitly to integrate a different normalization.
    """
    if not math.isfinite(lam):
        raise ValueError("lambda must be finite")
    if initial is None:
        y0, z0 = _problem_initial_data(problem)
    else:
        y0, z0 = (np.asarray(m, dtype=float) for m in initial)
    prop = _Propagator(problem, grid)
    n, d = grid.n_steps, problem.dimension
    rec_y = np.empty((n + 1, 1, d, d))
    rec_z = np.empty((n + 1, 1, d, d))
    prop._sweep(np.array([float(lam)]), y0, z0, record=(rec_y, rec_z))
    ys = rec_y[:, 0]
    zs = rec_z[:, 0]
    finite = np.isfinite(ys).all(axis=(1, 2)) & np.isfinite(zs).all(axis=(1, 2))
    if not finite.all():
        raise IntegrationOverflowError(float(lam), node=int(np.argmin(finite)))
    ys.flags.writeable = False
    zs.flags.writeable = False
    return Trajectory(float(lam), grid, ys, zs)


def characteristic_values(y_end: np.ndarray, z_end: np.ndarray, c, d):
    """Batched (W, det W, sigma_min, sigma_max) from endpoint data."""
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    w = np.matmul(c, y_end) + np.matmul(d, z_end)
    det = np.linalg.det(w)
    sigma = np.linalg.svd(w, compute_uv=False)
    return w, det, sigma[..., -1], sigma[..., 0]


def characteristic_matrix(trajectory: Trajectory, c, d) -> CharacteristicSample:
    """Characteristic sample W = C Y(pi) + D Y'(pi) for one trajectory."""
    w, det, smin, _ = characteristic_values(
        trajectory.y_samples[None, -1], trajectory.yprime_samples[None, -1], c, d)
    return CharacteristicSample(trajectory.lam, w[0], float(det[0]), float(smin[0]))


def characteristic_scan(problem: PencilProblem, grid: UniformGrid,
                        lambda_min: float, lambda_max: float, n_scan: int,
                        jobs: int | None = None) -> list[CharacteristicSample]:
    """n_scan + 1 equally spaced characteristic samples over the window."""
    if not (math.isfinite(lambda_min) and math.isfinite(lambda_max)):
        raise ValueError("window endpoints must be finite")
    if lambda_min >= lambda_max:
        raise ValueError("lambda_min must be strictly below lambda_max")
    if n_scan < 2:
        raise ValueError("n_scan must be >= 2")
    lams = np.linspace(lambda_min, lambda_max, n_scan + 1)
    prop = _Propagator(problem, grid)
    y0, z0 = _problem_initial_data(problem)
    try:
        y, z = prop.endpoints(lams, y0, z0, jobs=jobs)
    except IntegrationOverflowError:
        raise
    w, det, smin, _ = characteristic_values(y, z, problem.right_c, problem.right_d)
    return [CharacteristicSample(float(lams[i]), w[i], float(det[i]), float(smin[i]))
            for i in range(lams.shape[0])]


def write_scan_csv(samples, path) -> None:
    """Columns lambda,det_w,sigma_min with fixed 17-digit rendering."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "det_w", "sigma_min"])
        for s in samples:
            writer.writerow([format_float(s.lam), format_float(s.det_w),
                             format_float(s.sigma_min)])
