"""Real eigenvalue location for the pencil via roots of the characteristic matrix.

Candidates on a window come from two independent channels of one scan:
sign changes of det W(lambda), refined by bisection, and interior local
minima of sigma_min(W(lambda)), refined by golden-section minimization.
Both channels are load-bearing.  Eigenvalues of even multiplicity leave
det W single-signed (no sign change exists to bisect), while det roots of
odd multiplicity can sit between scan minima at coarse resolution.  All
refined candidates are merged, filtered by a normalized residual
threshold, and assigned multiplicities from the singular spectrum of W.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .ioutil import format_float
from .model import PencilProblem, UniformGrid, problem_digest
from .propagator import (_Propagator, characteristic_values,
                         left_initial_data)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_SCAN_PER_UNIT = 200.0
_ENDPOINT_GUARD = 10.0


class AmbiguousWindowError(RuntimeError):
    """A window endpoint sits too close to an eigenvalue; widen the window."""


class BracketError(ValueError):
    """det-mode refinement requires opposite determinant signs at the ends."""


class ConvergenceError(RuntimeError):
    """Refinement failed to shrink the bracket within the iteration cap."""


class WindowMismatchError(ValueError):
    """Spectra computed on different windows cannot be compared."""


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for locate_eigenvalues.

    n_scan of None scans at 200 samples per unit of window width.
    accept_tol applies to sigma_min normalized by the window-wide maximum
    of sigma_max; refine_tol bounds the final bracket width; candidates
    closer than cluster_tol merge, keeping the smaller residual.
    """

    n_scan: int | None = None
    accept_tol: float = 1e-6
    refine_tol: float = 1e-9
    cluster_tol: float = 1e-5
    multiplicity_rel_tol: float = 1e-5
    max_iterations: int = 200
    jobs: int | None = None

    def __post_init__(self):
        for name in ("accept_tol", "refine_tol", "cluster_tol",
                     "multiplicity_rel_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.n_scan is not None and self.n_scan < 2:
            raise ValueError("n_scan must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def effective_n_scan(self, lambda_min: float, lambda_max: float) -> int:
        if self.n_scan is not None:
            return self.n_scan
        return max(16, math.ceil(_SCAN_PER_UNIT * (lambda_max - lambda_min)))


@dataclass(frozen=True)
class EigenvalueRecord:
    """One located eigenvalue.

    residual is sigma_min(W(value)) normalized by the window-wide scale;
    bracket is the final enclosing interval from refinement.
    """

    value: float
    multiplicity: int
    residual: float
    bracket: tuple[float, float]


@dataclass(frozen=True, eq=False)
class Spectrum:
    records: tuple[EigenvalueRecord, ...]
    window: tuple[float, float]
    problem_hash: str

    def values(self) -> list[float]:
        return [r.value for r in self.records]

    def unit_values(self) -> list[float]:
        """Eigenvalues repeated by multiplicity, ascending."""
        out: list[float] = []
        for r in self.records:
            out.extend([r.value] * r.multiplicity)
        return out

    def total_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.records)


@dataclass(frozen=True)
class SpectrumComparison:
    """Greedy globally-closest pairing of two spectra's multiplicity units."""

    matched: tuple[tuple[float, float], ...]
    max_deviation: float
    unmatched_left: tuple[float, ...]
    unmatched_right: tuple[float, ...]
    match_tol: float

    @property
    def within_tol(self) -> bool:
        return (not self.unmatched_left and not self.unmatched_right
                and self.max_deviation <= self.match_tol)

    def to_dict(self) -> dict:
        return {
            "matched": [[l, r] for l, r in self.matched],
            "max_deviation": self.max_deviation,
            "unmatched_left": list(self.unmatched_left),
            "unmatched_right": list(self.unmatched_right),
            "match_tol": self.match_tol,
            "within_tol": self.within_tol,
        }


class _Evaluator:
    """Batched det/sigma evaluation of W over lambda arrays for one problem."""

    def __init__(self, problem: PencilProblem, grid: UniformGrid,
                 jobs: int | None = None):
        self.problem = problem
        self.prop = _Propagator(problem, grid)
        self.y0, self.z0 = left_initial_data(problem.left_a, problem.left_b)
        self.c = np.asarray(problem.right_c, dtype=float)
        self.d = np.asarray(problem.right_d, dtype=float)
        self.jobs = jobs

    def __call__(self, lams):
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        y, z = self.prop.endpoints(lams, self.y0, self.z0, jobs=self.jobs)
        return characteristic_values(y, z, self.c, self.d)


def _bisect_batch(ev: _Evaluator, lo: np.ndarray, hi: np.ndarray,
                  f_lo: np.ndarray, refine_tol: float, cap: int):
    """Narrow sign-change brackets in lockstep; one batched eval per pass."""
    lo = lo.copy()
    hi = hi.copy()
    f_lo = f_lo.copy()
    for _ in range(cap):
        if np.max(hi - lo) <= refine_tol:
            break
        mid = 0.5 * (lo + hi)
        _, f_mid, _, _ = ev(mid)
        same = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(same, mid, lo)
        f_lo = np.where(same, f_mid, f_lo)
        hi = np.where(same, hi, mid)
    else:
        raise ConvergenceError(
            f"bisection exceeded {cap} iterations (width {np.max(hi - lo):g})")
    mid = 0.5 * (lo + hi)
    _, _, smin, _ = ev(mid)
    return mid, smin, lo, hi


def _golden_batch(ev: _Evaluator, a: np.ndarray, b: np.ndarray,
                  refine_tol: float, cap: int):
    """Shrink sigma_min-minimizing brackets in lockstep by golden section."""
    a = a.copy()
    b = b.copy()
    span = b - a
    x1 = b - _GOLDEN * span
    x2 = a + _GOLDEN * span
    _, _, f1, _ = ev(x1)
    _, _, f2, _ = ev(x2)
    for _ in range(cap):
        if np.max(b - a) <= refine_tol:
            break
        left = f1 < f2
        b_new = np.where(left, x2, b)
        a_new = np.where(left, a, x1)
        span = b_new - a_new
        cand1 = b_new - _GOLDEN * span
        cand2 = a_new + _GOLDEN * span
        probe = np.where(left, cand1, cand2)
        _, _, f_probe, _ = ev(probe)
        x1, f1, x2, f2 = (np.where(left, cand1, x2),
                          np.where(left, f_probe, f2),
                          np.where(left, x1, cand2),
                          np.where(left, f1, f_probe))
        a, b = a_new, b_new
    else:
        raise ConvergenceError(
            f"golden-section exceeded {cap} iterations (width {np.max(b - a):g})")
    best_left = f1 <= f2
    value = np.where(best_left, x1, x2)
    resid = np.where(best_left, f1, f2)
    return value, resid, a, b


def refine_root(problem: PencilProblem, grid: UniformGrid, bracket,
                mode: str, options: SolverOptions | None = None):
    """Refine one bracket to a root of W; returns (lambda_star, sigma_min).

    mode 'det_bisection' bisects a determinant sign change; mode
    'sigma_min_search' golden-sections an interior sigma_min minimum.
    The returned residual is the raw (unnormalized) sigma_min at the root.
    A bracket already narrower than refine_tol returns its midpoint.
    """
    opts = options or SolverOptions()
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise BracketError(f"invalid bracket ({lo!r}, {hi!r})")
    ev = _Evaluator(problem, grid, jobs=opts.jobs)
    if hi - lo < opts.refine_tol:
        mid = 0.5 * (lo + hi)
        _, _, smin, _ = ev([mid])
        return mid, float(smin[0])
    if mode == "det_bisection":
        _, dets, _, _ = ev([lo, hi])
        if dets[0] == 0.0 or dets[1] == 0.0:
            at = lo if dets[0] == 0.0 else hi
            _, _, smin, _ = ev([at])
            return at, float(smin[0])
        if math.copysign(1.0, dets[0]) == math.copysign(1.0, dets[1]):
            raise BracketError(
                f"det W has no sign change on [{lo:g}, {hi:g}]")
        mids, smin, _, _ = _bisect_batch(ev, np.array([lo]), np.array([hi]),
                                         np.array([dets[0]]), opts.refine_tol,
                                         opts.max_iterations)
        return float(mids[0]), float(smin[0])
    if mode == "sigma_min_search":
        vals, resid, _, _ = _golden_batch(ev, np.array([lo]), np.array([hi]),
                                          opts.refine_tol, opts.max_iterations)
        return float(vals[0]), float(resid[0])
    raise ValueError(f"unknown refinement mode {mode!r}")


def multiplicity_at(problem: PencilProblem, grid: UniformGrid,
                    lambda_star: float, rel_tol: float = 1e-5,
                    scale_floor: float | None = None) -> int:
    """Count singular values of W(lambda_star) below rel_tol times the scale.

    The scale is max(sigma_max(W(lambda_star)), scale_floor).  Pass the
    window-wide maximum of sigma_max as scale_floor when available (the
    solver does); otherwise a local scan of W over lambda_star +- 1
    supplies it, since at a root sigma_max itself may vanish and carry no
    scale information.  The count is clamped to [1, d].
    """
    ev = _Evaluator(problem, grid)
    if scale_floor is None:
        probes = np.linspace(lambda_star - 1.0, lambda_star + 1.0, 41)
        _, _, _, smax = ev(probes)
        scale_floor = float(np.max(smax))
    w, _, _, _ = ev([lambda_star])
    sigma = np.linalg.svd(w[0], compute_uv=False)
    threshold = rel_tol * max(float(sigma[0]), float(scale_floor))
    count = int(np.sum(sigma < threshold))
    return min(max(count, 1), problem.dimension)


def _merge_candidates(candidates: list[tuple[float, float, tuple[float, float]]],
                      cluster_tol: float):
    """Collapse candidates closer than cluster_tol, keeping smaller residual."""
    merged: list[tuple[float, float, tuple[float, float]]] = []
    for cand in sorted(candidates):
        if merged and cand[0] - merged[-1][0] <= cluster_tol:
            if cand[1] < merged[-1][1]:
                merged[-1] = cand
        else:
            merged.append(cand)
    return merged


def locate_eigenvalues(problem: PencilProblem, grid: UniformGrid,
                       lambda_min: float, lambda_max: float,
                       options: SolverOptions | None = None) -> Spectrum:
    """Locate every eigenvalue of the pencil inside a real window.

    Scans W over the window, refines determinant sign changes by bisection
    and interior sigma_min minima by golden section, merges candidates
    within cluster_tol, keeps those whose normalized residual is at most
    accept_tol, and assigns multiplicities.  Raises AmbiguousWindowError
    when an endpoint's normalized sigma_min is below 10x accept_tol, since
    an eigenvalue on the boundary makes containment undecidable; widen
    the window to clear it.
    """
    if not (math.isfinite(lambda_min) and math.isfinite(lambda_max)):
        raise ValueError("window endpoints must be finite")
    if lambda_min >= lambda_max:
        raise ValueError("lambda_min must be strictly below lambda_max")
    opts = options or SolverOptions()
    n_scan = opts.effective_n_scan(lambda_min, lambda_max)

    ev = _Evaluator(problem, grid, jobs=opts.jobs)
    lams = np.linspace(lambda_min, lambda_max, n_scan + 1)
    _, det, smin, smax = ev(lams)
    scale = float(np.max(smax))
    if scale <= 0.0:
        scale = 1.0

    for end in (0, -1):
        if smin[end] / scale < _ENDPOINT_GUARD * opts.accept_tol:
            raise AmbiguousWindowError(
                f"window endpoint {lams[end]:g} sits near an eigenvalue "
                f"(normalized sigma_min {smin[end] / scale:.3g}); widen the window")

    candidates: list[tuple[float, float, tuple[float, float]]] = []

    signs = np.sign(det)
    flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if flips.size:
        lo = lams[flips]
        hi = lams[flips + 1]
        vals, resid, blo, bhi = _bisect_batch(ev, lo, hi, det[flips],
                                              opts.refine_tol, opts.max_iterations)
        candidates += [(float(vals[k]), float(resid[k]),
                        (float(blo[k]), float(bhi[k])))
                       for k in range(vals.shape[0])]

    interior = np.arange(1, n_scan)
    is_min = (smin[interior] < smin[interior - 1]) \
        & (smin[interior] <= smin[interior + 1])
    dips = interior[is_min]
    if dips.size:
        vals, resid, blo, bhi = _golden_batch(ev, lams[dips - 1], lams[dips + 1],
                                              opts.refine_tol, opts.max_iterations)
        candidates += [(float(vals[k]), float(resid[k]),
                        (float(blo[k]), float(bhi[k])))
                       for k in range(vals.shape[0])]

    records = []
    kept = [c for c in _merge_candidates(candidates, opts.cluster_tol)
            if c[1] / scale <= opts.accept_tol]
    if kept:
        w_all, _, _, _ = ev([c[0] for c in kept])
        for k, (value, resid, bracket) in enumerate(kept):
            sigma = np.linalg.svd(w_all[k], compute_uv=False)
            threshold = opts.multiplicity_rel_tol * max(float(sigma[0]), scale)
            count = int(np.sum(sigma < threshold))
            records.append(EigenvalueRecord(
                value=value,
                multiplicity=min(max(count, 1), problem.dimension),
                residual=resid / scale,
                bracket=bracket,
            ))
    return Spectrum(records=tuple(records), window=(lambda_min, lambda_max),
                    problem_hash=problem_digest(problem))


def compare_spectra(s1: Spectrum, s2: Spectrum,
                    match_tol: float = 1e-4) -> SpectrumComparison:
    """Pair the two spectra's multiplicity units by globally closest distance.

    Every unit pairs greedily (no distance cap); unmatched units arise only
    from a count mismatch.  max_deviation is the largest paired distance,
    which callers compare against match_tol; within_tol summarizes that
    judgment.  Windows must be identical.
    """
    if s1.window != s2.window:
        raise WindowMismatchError(
            f"windows differ: {s1.window} vs {s2.window}")
    left = s1.unit_values()
    right = s2.unit_values()
    pairs = sorted((abs(a - b), i, j)
                   for i, a in enumerate(left) for j, b in enumerate(right))
    used_l: set[int] = set()
    used_r: set[int] = set()
    matched: list[tuple[float, float]] = []
    for dist, i, j in pairs:
        if i in used_l or j in used_r:
            continue
        used_l.add(i)
        used_r.add(j)
        matched.append((left[i], right[j]))
    matched.sort()
    max_dev = max((abs(a - b) for a, b in matched), default=0.0)
    return SpectrumComparison(
        matched=tuple(matched),
        max_deviation=max_dev,
        unmatched_left=tuple(v for i, v in enumerate(left) if i not in used_l),
        unmatched_right=tuple(v for j, v in enumerate(right) if j not in used_r),
        match_tol=match_tol,
    )


def write_spectrum_csv(spectrum: Spectrum, path) -> None:
    """Columns value,multiplicity,residual with fixed 17-digit rendering."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "multiplicity", "residual"])
        for rec in spectrum.records:
            writer.writerow([format_float(rec.value), str(rec.multiplicity),
                             format_float(rec.residual)])
