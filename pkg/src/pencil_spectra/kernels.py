"""Transformation-kernel lattice solver and representation-based checks.

The pencil's Neumann-normalized solution admits the representation
Y(x, lambda) = cos(lambda x I - alpha(x)) + int_0^x A(x,t) cos(lambda t) dt
+ int_0^x B(x,t) sin(lambda t) dt with matrix kernels A, B satisfying a
coupled wave-type system on the triangle 0 <= t <= x <= pi:

    A_xx - A_tt = 2 P(x) B_t + Q(x) A
    B_xx - B_tt = -2 P(x) A_t + Q(x) B

with B(x, 0) = 0, A_t(x, 0) = 0, and both kernels prescribed on the
diagonal t = x by quadrature data.  The solver marches in x on a square
lattice (unit CFL along characteristics).  Interior nodes use the cross
stencil; the t = 0 row closes with the even/odd reflection A(x,-t)=A(x,t),
B(x,-t)=-B(x,t); the first subdiagonal closes with the characteristic
rectangle identity anchored on half-step diagonal data, which is why the
diagonal quadrature runs at half resolution internally.
"""

from __future__ import annotations

import csv
import gzip
import math
from dataclasses import dataclass

import numpy as np

from .ioutil import format_float
from .model import (PI, PencilProblem, UniformGrid, alpha_values, p_values,
                    q_matrices)
from .propagator import integrate

_BLOWUP_LIMIT = 1e6
_MIN_STEPS = 16


class KernelBlowupError(ArithmeticError):
    """Marching produced an entry beyond the stability limit."""

    def __init__(self, i: int, k: int, magnitude: float):
        self.i = i
        self.k = k
        self.magnitude = magnitude
        super().__init__(
            f"kernel lattice blew up at node (i={i}, k={k}): |entry| = {magnitude:g}")


@dataclass(frozen=True, eq=False)
class KernelField:
    """Kernels A, B sampled on the triangular lattice 0 <= k <= i <= N.

    a_samples and b_samples are dense arrays of shape (N+1, N+1, d, d)
    with zeros above the diagonal (k > i).
    """

    grid: UniformGrid
    a_samples: np.ndarray
    b_samples: np.ndarray

    def diagonals(self) -> tuple[np.ndarray, np.ndarray]:
        """(A(x_i, x_i), B(x_i, x_i)) stacked over i, shape (N+1, d, d)."""
        idx = np.arange(self.grid.n_steps + 1)
        return self.a_samples[idx, idx], self.b_samples[idx, idx]


def cumulative_integral(values: np.ndarray, step: float) -> np.ndarray:
    """Running integral over axis 0 of uniformly sampled values.

    Composite Simpson at even node counts; a node ending on an odd panel
    adds one trapezoid panel on top of the Simpson total below it.
    """
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    m = values.shape[0] - 1
    if m < 1:
        return out
    if m >= 2:
        pairs = (step / 3.0) * (values[0:-2:2] + 4.0 * values[1:-1:2]
                                + values[2::2])
        out[2::2] = np.cumsum(pairs, axis=0)
    odd = np.arange(1, m + 1, 2)
    out[odd] = out[odd - 1] + (step / 2.0) * (values[odd - 1] + values[odd])
    return out


def _trig_tables(problem: PencilProblem, xs: np.ndarray):
    """cos(alpha), sin(alpha) channel tables plus P and Q samples on xs."""
    a = alpha_values(problem, xs)
    return np.cos(a), np.sin(a), p_values(problem, xs), q_matrices(problem, xs)


def _r_integrals(problem: PencilProblem, xs: np.ndarray, step: float):
    """Quadrature data R1 = (1/2) int T1, R2 = (P(x)-P(0))/2 + (1/2) int T2.

    T1 = P^2 + cos(a) Q cos(a) + sin(a) Q sin(a) and
    T2 = sin(a) Q cos(a) - cos(a) Q sin(a), with diagonal alpha so the
    trigonometric factors act by row/column scaling.
    """
    c, s, p, q = _trig_tables(problem, xs)
    cqc = c[:, :, None] * q * c[:, None, :]
    sqs = s[:, :, None] * q * s[:, None, :]
    sqc = s[:, :, None] * q * c[:, None, :]
    cqs = c[:, :, None] * q * s[:, None, :]
    t1 = sqs + cqc
    diag = np.einsum("xii->xi", t1)
    diag += p * p
    t2 = sqc - cqs
    r1 = 0.5 * cumulative_integral(t1, step)
    r2 = 0.5 * cumulative_integral(t2, step)
    dp = np.einsum("xii->xi", r2)
    dp += 0.5 * (p - p[0])
    return r1, r2, c, s


def _diagonal_data_on(problem: PencilProblem, xs: np.ndarray, step: float):
    """Diagonal kernel values on arbitrary uniform abscissae xs."""
    r1, r2, c, s = _r_integrals(problem, xs, step)
    a_diag = c[:, :, None] * r1 + s[:, :, None] * r2
    b_diag = s[:, :, None] * r1 - c[:, :, None] * r2
    return a_diag, b_diag


def diagonal_data(problem: PencilProblem, grid: UniformGrid):
    """Kernel diagonal values A(x_i, x_i), B(x_i, x_i) on the grid nodes.

    Solves the pair cos(a) A + sin(a) B = R1, sin(a) A - cos(a) B = R2,
    which is orthogonal for diagonal alpha.  The diagonal-P precondition
    is structural here: the problem model only represents diagonal P.
    """
    return _diagonal_data_on(problem, grid.nodes, grid.step)


def solve_goursat(problem: PencilProblem, grid: UniformGrid) -> KernelField:
    """March the kernel system over the triangle 0 <= t <= x <= pi.

    Second order in the step.  The startup cell A(h, 0) uses the Taylor
    value h/2 (P(0)^2 + Q(0)) from the corner slope A_x(0,0), everything
    else follows the stencils described in the module docstring.  Any
    entry exceeding 1e6 in magnitude aborts with the lattice location.
    """
    n = grid.n_steps
    if n < _MIN_STEPS:
        raise ValueError(f"grid too coarse for kernel marching: N={n} < {_MIN_STEPS}")
    h = grid.step
    d = problem.dimension

    xs_half = np.linspace(0.0, PI, 2 * n + 1)
    diag_a2, diag_b2 = _diagonal_data_on(problem, xs_half, 0.5 * h)
    p_nodes = p_values(problem, grid.nodes)
    q_nodes = q_matrices(problem, grid.nodes)
    two_p = 2.0 * p_nodes

    a = np.zeros((n + 1, n + 1, d, d))
    b = np.zeros((n + 1, n + 1, d, d))
    a[0, 0] = diag_a2[0]
    b[0, 0] = diag_b2[0]
    a[1, 1] = diag_a2[2]
    b[1, 1] = diag_b2[2]
    p0_sq_plus_q0 = np.diag(p_nodes[0] ** 2) + q_nodes[0]
    a[1, 0] = (0.5 * h) * p0_sq_plus_q0

    h_sq = h * h
    for i in range(1, n):
        # t-derivatives along column i at k = 0..i-1
        at = np.empty((i, d, d))
        bt = np.empty((i, d, d))
        at[0] = 0.0
        bt[0] = b[i, 1] / h
        if i > 1:
            at[1:] = (a[i, 2:i + 1] - a[i, 0:i - 1]) / (2.0 * h)
            bt[1:] = (b[i, 2:i + 1] - b[i, 0:i - 1]) / (2.0 * h)
        ha = two_p[i][:, None] * bt + np.matmul(q_nodes[i], a[i, 0:i])
        hb = -two_p[i][:, None] * at + np.matmul(q_nodes[i], b[i, 0:i])

        a[i + 1, 0] = 2.0 * a[i, 1] - a[i - 1, 0] + h_sq * ha[0]
        if i > 1:
            a[i + 1, 1:i] = (a[i, 2:i + 1] + a[i, 0:i - 1] - a[i - 1, 1:i]
                             + h_sq * ha[1:i])
            b[i + 1, 1:i] = (b[i, 2:i + 1] + b[i, 0:i - 1] - b[i - 1, 1:i]
                             + h_sq * hb[1:i])
        a[i + 1, i] = (a[i, i - 1] + diag_a2[2 * i + 1] - diag_a2[2 * i - 1]
                       + 0.5 * h_sq * ha[i - 1])
        b[i + 1, i] = (b[i, i - 1] + diag_b2[2 * i + 1] - diag_b2[2 * i - 1]
                       + 0.5 * h_sq * hb[i - 1])
        a[i + 1, i + 1] = diag_a2[2 * (i + 1)]
        b[i + 1, i + 1] = diag_b2[2 * (i + 1)]

        col_max = max(float(np.max(np.abs(a[i + 1, :i + 2]))),
                      float(np.max(np.abs(b[i + 1, :i + 2]))))
        if not (col_max <= _BLOWUP_LIMIT):
            k_bad = int(np.argmax(np.maximum(
                np.abs(a[i + 1, :i + 2]).max(axis=(1, 2)),
                np.abs(b[i + 1, :i + 2]).max(axis=(1, 2)))))
            raise KernelBlowupError(i + 1, k_bad, col_max)

    a.flags.writeable = False
    b.flags.writeable = False
    return KernelField(grid=grid, a_samples=a, b_samples=b)


def reconstruct_Y(field: KernelField, problem: PencilProblem, lam: float,
                  x_index: int) -> np.ndarray:
    """Evaluate the kernel representation of Y(x_i, lambda) at one node.

    Leading term diag(cos(lambda x_i - alpha_j(x_i))) plus row quadratures
    of A against cos(lambda t) and B against sin(lambda t) over [0, x_i].
    """
    n = field.grid.n_steps
    if not 0 <= x_index <= n:
        raise IndexError(f"x_index {x_index} outside lattice 0..{n}")
    x = field.grid.nodes[x_index]
    a_row = field.a_samples[x_index, :x_index + 1]
    b_row = field.b_samples[x_index, :x_index + 1]
    ts = field.grid.nodes[:x_index + 1]
    lead = np.diag(np.cos(lam * x - alpha_values(problem, np.array([x]))[0]))
    cos_t = np.cos(lam * ts)[:, None, None]
    sin_t = np.sin(lam * ts)[:, None, None]
    int_a = cumulative_integral(a_row * cos_t, field.grid.step)[-1]
    int_b = cumulative_integral(b_row * sin_t, field.grid.step)[-1]
    return lead + int_a + int_b


@dataclass(frozen=True)
class RepresentationResidual:
    """Worst deviation between reconstructed and integrated Y, with location."""

    value: float
    lam: float
    x_index: int
    x: float


def representation_residual(field: KernelField, problem: PencilProblem,
                            grid: UniformGrid,
                            lambda_set) -> RepresentationResidual:
    """Max-norm gap between the kernel representation and direct integration.

    Samples x at quarter points {pi/4, pi/2, 3pi/4, pi} (nearest nodes) for
    every lambda in lambda_set; the direct route integrates the pencil with
    Neumann normalization Y(0) = I, Y'(0) = 0.
    """
    lams = [float(v) for v in lambda_set]
    if not lams:
        raise ValueError("lambda_set must be nonempty")
    n = grid.n_steps
    x_indices = sorted({round(n / 4), round(n / 2), round(3 * n / 4), n})
    eye = np.eye(problem.dimension)
    zero = np.zeros_like(eye)
    best = RepresentationResidual(value=-1.0, lam=lams[0],
                                  x_index=x_indices[0],
                                  x=float(grid.nodes[x_indices[0]]))
    for lam in lams:
        traj = integrate(problem, lam, grid, initial=(eye, zero))
        for idx in x_indices:
            rec = reconstruct_Y(field, problem, lam, idx)
            dev = float(np.max(np.abs(rec - traj.y_samples[idx])))
            if dev > best.value:
                best = RepresentationResidual(value=dev, lam=lam, x_index=idx,
                                              x=float(grid.nodes[idx]))
    return best


def trace_identity_residual(field: KernelField, problem: PencilProblem,
                            grid: UniformGrid) -> tuple[float, float, float]:
    """Residuals (r33, r212, r213) of the diagonal trace identities.

    r33: max over interior nodes of the derivative identity
    2 d/dx [cos(a) A(x,x) + sin(a) B(x,x)] = P^2(x) + Q(x), with a centered
    difference; exact in the continuum only when Q commutes with the
    trigonometric factors (always for d = 1).  r212 and r213 compare the
    field's diagonal, built from half-step quadrature, against the same
    combinations re-quadratured on the node grid; they measure pure
    cross-resolution quadrature drift.
    """
    nodes = grid.nodes
    h = grid.step
    a_diag, b_diag = field.diagonals()
    r1, r2, c, s = _r_integrals(problem, nodes, h)
    p = p_values(problem, nodes)
    q = q_matrices(problem, nodes)

    g = c[:, :, None] * a_diag + s[:, :, None] * b_diag
    deriv = (g[2:] - g[:-2]) / h  # equals 2 * centered difference
    target = q[1:-1].copy()
    diag = np.einsum("xii->xi", target)
    diag += p[1:-1] ** 2
    r33 = float(np.max(np.abs(deriv - target)))

    lhs_12 = c[:, :, None] * a_diag + s[:, :, None] * b_diag
    lhs_13 = s[:, :, None] * a_diag - c[:, :, None] * b_diag
    r212 = float(np.max(np.abs(lhs_12 - r1)))
    r213 = float(np.max(np.abs(lhs_13 - r2)))
    return r33, r212, r213


def write_lattice_csv(field: KernelField, path, compress: bool = False) -> None:
    """Dump the triangle as rows i,k,entry_row,entry_col,A_value,B_value."""
    opener = gzip.open if compress else open
    with opener(path, "wt", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "k", "entry_row", "entry_col", "A_value", "B_value"])
        n = field.grid.n_steps
        d = field.a_samples.shape[-1]
        for i in range(n + 1):
            for k in range(i + 1):
                for r in range(d):
                    for col in range(d):
                        writer.writerow([
                            str(i), str(k), str(r), str(col),
                            format_float(field.a_samples[i, k, r, col]),
                            format_float(field.b_samples[i, k, r, col]),
                        ])
