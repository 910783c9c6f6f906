"""Falsifiable numerical checks of the inverse-spectral claims.

Each check computes desk-scale surrogates for a claim that quantifies
over infinite spectra, so no check can prove anything; the harness only
hunts for violations.  Verdicts are three-valued: "consistent" when the
computed metrics agree with the claim's implication, "violated" when a
metric contradicts it beyond twice its threshold, and "inconclusive"
when the instance cannot distinguish (hypothesis vacuous, or signal
inside the confidence gate).

Check identifiers double as report labels and CLI names:
T31 (matching spectra force equal potential means), T32 (the unperturbed
spectrum forces zero potential), ground_state (zero potential is
equivalent to constant ground-state directions), eq39 (mean of Q
balances mean of -P^2; diagnostic only, never judged).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .ioutil import dumps_canonical
from .model import (PI, PencilProblem, ScalarFunctionSpec, UniformGrid,
                    alpha, p_values, problem_digest, q_matrices,
                    upper_triangle_indices)
from .propagator import integrate
from .spectral import SolverOptions, compare_spectra, locate_eigenvalues
from .asymptotics import unperturbed_spectrum

THEOREM_IDS = ("T31", "T32", "ground_state", "eq39")
VERDICTS = ("consistent", "violated", "inconclusive")

DEFAULT_TOL = 1e-8
DEFAULT_MATCH_TOL = 1e-4
_ALPHA_PI_TOL = 1e-10
_VIOLATION_FACTOR = 2.0


class HypothesisError(ValueError):
    """A check's standing hypothesis fails for the supplied instance."""


@dataclass(frozen=True)
class VerificationReport:
    theorem_id: str
    inputs_digest: str
    metrics: dict[str, float]
    verdict: str
    seed: int | None = None

    def __post_init__(self):
        if self.theorem_id not in THEOREM_IDS:
            raise ValueError(f"unknown theorem_id {self.theorem_id!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "inputs_digest": self.inputs_digest,
            "metrics": {k: float(v) for k, v in self.metrics.items()},
            "verdict": self.verdict,
            "seed": self.seed,
        }


def _digest(payload: dict) -> str:
    return hashlib.sha256(dumps_canonical(payload, indent=0).encode()).hexdigest()


def _require_alpha_pi_zero(problem: PencilProblem) -> None:
    drift = float(np.max(np.abs(np.diagonal(alpha(problem, PI)))))
    if drift > _ALPHA_PI_TOL:
        raise HypothesisError(
            f"alpha(pi) must vanish (max |entry| = {drift:g} > {_ALPHA_PI_TOL:g})")


def _q_mean_matrix(problem: PencilProblem) -> np.ndarray:
    d = problem.dimension
    out = np.zeros((d, d))
    for (i, j), spec in zip(upper_triangle_indices(d), problem.q_entries):
        out[i, j] = out[j, i] = spec.mean_integral()
    return out


def check_mean_potential_identity(problem: PencilProblem, q_tilde_entries,
                                  grid: UniformGrid, window,
                                  tol: float = DEFAULT_TOL,
                                  match_tol: float = DEFAULT_MATCH_TOL,
                                  options: SolverOptions | None = None,
                                  seed: int | None = None) -> VerificationReport:
    """Contrapositive probe of: matching spectra imply equal Q means.

    Computes delta = max-norm of the closed-form integral of Q - Q_tilde
    and the spectral deviation of the two problems on the window.  A
    violation requires the spectra to match while delta clears twice tol;
    distinct means with distinct spectra are consistent; delta below tol
    leaves the claim's hypothesis side untested, hence inconclusive.
    Requires alpha(pi) = 0.
    """
    _require_alpha_pi_zero(problem)
    tilde = replace(problem, q_entries=tuple(q_tilde_entries))
    delta = float(np.max(np.abs(_q_mean_matrix(problem) - _q_mean_matrix(tilde))))

    lo, hi = float(window[0]), float(window[1])
    s = locate_eigenvalues(problem, grid, lo, hi, options)
    s_tilde = locate_eigenvalues(tilde, grid, lo, hi, options)
    cmp = compare_spectra(s, s_tilde, match_tol)
    spectra_match = cmp.within_tol

    if delta <= tol:
        verdict = "inconclusive"
    elif spectra_match:
        verdict = "violated" if delta >= _VIOLATION_FACTOR * tol else "inconclusive"
    else:
        verdict = "consistent"

    metrics = {
        "delta": delta,
        "deviation": cmp.max_deviation,
        "unmatched": float(len(cmp.unmatched_left) + len(cmp.unmatched_right)),
        "tol": tol,
        "match_tol": match_tol,
    }
    digest = _digest({
        "check": "T31",
        "problem": problem_digest(problem),
        "problem_tilde": problem_digest(tilde),
        "grid_n": grid.n_steps,
        "window": [lo, hi],
        "tol": tol,
        "match_tol": match_tol,
    })
    return VerificationReport("T31", digest, metrics, verdict, seed)


def check_zero_spectrum_rigidity(problem: PencilProblem, grid: UniformGrid,
                                 n_max: int, tol: float = DEFAULT_TOL,
                                 match_tol: float = DEFAULT_MATCH_TOL,
                                 options: SolverOptions | None = None,
                                 seed: int | None = None) -> VerificationReport:
    """Forward probe of rigidity: only zero potential keeps the zero spectrum.

    Compares the computed spectrum on (-n_max-1/4, n_max+1/4) with the
    integers at full multiplicity, against the sampled potential size
    S = max(|P|, |Q|).  A sizeable potential (S > 100*match_tol) whose
    spectrum still matches would contradict rigidity.  Requires Neumann
    boundary data and alpha(pi) = 0.
    """
    _require_alpha_pi_zero(problem)
    d = problem.dimension
    eye = np.eye(d)
    if not (np.array_equal(problem.left_a, np.zeros((d, d)))
            and np.array_equal(problem.left_b, eye)
            and np.array_equal(problem.right_c, np.zeros((d, d)))
            and np.array_equal(problem.right_d, eye)):
        raise HypothesisError("rigidity check requires Neumann boundary data")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")

    reference = unperturbed_spectrum(d, n_max)
    lo, hi = reference.window
    computed = locate_eigenvalues(problem, grid, lo, hi, options)
    cmp = compare_spectra(computed, reference, match_tol)
    spectra_match = cmp.within_tol

    p_size = float(np.max(np.abs(p_values(problem, grid.nodes))))
    q_size = float(np.max(np.abs(q_matrices(problem, grid.nodes))))
    size = max(p_size, q_size)

    if spectra_match and size > 100.0 * match_tol:
        verdict = "violated"
    elif (size <= tol and spectra_match) or (size > tol and not spectra_match):
        verdict = "consistent"
    else:
        verdict = "inconclusive"

    metrics = {
        "deviation": cmp.max_deviation,
        "potential_size": size,
        "unmatched": float(len(cmp.unmatched_left) + len(cmp.unmatched_right)),
        "n_max": float(n_max),
        "tol": tol,
        "match_tol": match_tol,
    }
    digest = _digest({
        "check": "T32",
        "problem": problem_digest(problem),
        "grid_n": grid.n_steps,
        "n_max": n_max,
        "tol": tol,
        "match_tol": match_tol,
    })
    return VerificationReport("T32", digest, metrics, verdict, seed)


def check_ground_state_directions(problem: PencilProblem, grid: UniformGrid,
                                  tol: float = DEFAULT_TOL,
                                  seed: int | None = None) -> VerificationReport:
    """Residuals of Q(x) e_j = 0 for the constant candidate ground states.

    Channel residual r_j is the largest entry magnitude of column j of Q
    over the grid; the claim's mechanism says constant directions survive
    at the ground eigenvalue exactly when those residuals vanish.  The
    verdict is consistent when numerically-zero residuals coincide with a
    structurally zero Q, inconclusive when a structurally nonzero Q is
    numerically indistinguishable from zero (the residual formula cannot
    be exceeded when Q is structurally zero, so no violated branch
    exists).  W(0) singular values are reported as diagnostics.
    """
    q = q_matrices(problem, grid.nodes)
    residuals = np.max(np.abs(q), axis=(0, 1))
    max_r = float(np.max(residuals))
    structurally_zero = all(spec.is_zero for spec in problem.q_entries)
    verdict = "consistent" if (max_r <= tol) == structurally_zero else "inconclusive"

    traj = integrate(problem, 0.0, grid)
    w0 = (problem.right_c @ traj.y_samples[-1]
          + problem.right_d @ traj.yprime_samples[-1])
    sigma = np.linalg.svd(w0, compute_uv=False)

    metrics = {"residual_max": max_r, "tol": tol,
               "lambda0_sigma_min": float(sigma[-1]),
               "lambda0_sigma_max": float(sigma[0])}
    for j in range(problem.dimension):
        metrics[f"residual_channel_{j + 1}"] = float(residuals[j])
    digest = _digest({
        "check": "ground_state",
        "problem": problem_digest(problem),
        "grid_n": grid.n_steps,
        "tol": tol,
    })
    return VerificationReport("ground_state", digest, metrics, verdict, seed)


def integral_balance(problem: PencilProblem):
    """Closed-form evaluation of int Q dx against -int P^2 dx.

    Returns (lhs, rhs, residual) with residual the max-norm difference.
    The balance is an implication of a spectral hypothesis that desk-scale
    computation cannot certify, so this is diagnostic only.
    """
    lhs = _q_mean_matrix(problem)
    rhs = -np.diag([spec.square_integral() for spec in problem.p_diag])
    residual = float(np.max(np.abs(lhs - rhs)))
    return lhs, rhs, residual


def check_integral_balance(problem: PencilProblem,
                           seed: int | None = None) -> VerificationReport:
    """Report the integral balance with an always-inconclusive verdict."""
    lhs, rhs, residual = integral_balance(problem)
    metrics = {
        "residual": residual,
        "lhs_max_abs": float(np.max(np.abs(lhs))),
        "rhs_max_abs": float(np.max(np.abs(rhs))),
    }
    digest = _digest({"check": "eq39", "problem": problem_digest(problem)})
    return VerificationReport("eq39", digest, metrics, "inconclusive", seed)


def random_q_entries(dimension: int, rng) -> tuple[ScalarFunctionSpec, ...]:
    """Random symmetric-Q entry specs: 3-term cosine series, coeffs U(-0.5, 0.5).

    Entries are drawn in row-major upper-triangle order so a seeded
    generator reproduces the family exactly.
    """
    count = dimension * (dimension + 1) // 2
    return tuple(
        ScalarFunctionSpec.cosine_series(
            tuple(float(c) for c in rng.uniform(-0.5, 0.5, 3)))
        for _ in range(count))


def random_p_diag(dimension: int, rng) -> tuple[ScalarFunctionSpec, ...]:
    """Random diagonal-P specs c*cos(x), |c| <= 0.5, so alpha(pi) = 0 exactly."""
    return tuple(
        ScalarFunctionSpec.cosine_series((0.0, float(rng.uniform(-0.5, 0.5))))
        for _ in range(dimension))
