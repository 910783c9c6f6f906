"""Domain model for matrix quadratic-pencil boundary problems on [0, pi].

Coefficient functions are closed-form specs (zero, constant, polynomial,
cosine series) so antiderivatives and mean integrals are exact.  A problem
bundles the diagonal potential P, the symmetric potential Q (stored as its
upper triangle) and admissible boundary matrix pairs.  A versioned JSON
document format round-trips problems bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

PI = math.pi

SCHEMA_ID = "pencil-spectra/1"
SPEC_KINDS = ("zero", "constant", "polynomial", "cosine_series")

# Admissibility tolerances: symmetry/orthogonality residuals are absolute,
# rank is judged on singular values relative to the largest one.
TAU_SYM = 1e-10
TAU_RANK = 1e-10

_DOMAIN_SLACK = 1e-12


class BoundaryValidationError(ValueError):
    """Boundary matrices violate an admissibility condition."""


class DocumentError(ValueError):
    """Problem document is malformed or fails schema validation."""


# ---------------------------------------------------------------------------
# Scalar coefficient specs


@dataclass(frozen=True)
class ScalarFunctionSpec:
    """One closed-form scalar coefficient on [0, pi].

    kind "zero" ignores coefficients; "constant" uses coefficients[0];
    "polynomial" stores ascending powers; "cosine_series" stores c_k
    multiplying cos(k*x), k = 0, 1, ...
    """

    kind: str
    coefficients: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in SPEC_KINDS:
            raise ValueError(f"unknown spec kind {self.kind!r}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if self.kind == "zero":
            coeffs = ()
        elif not coeffs:
            raise ValueError(f"kind {self.kind!r} needs at least one coefficient")
        if any(not math.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "ScalarFunctionSpec":
        return cls("zero")

    @classmethod
    def constant(cls, c: float) -> "ScalarFunctionSpec":
        return cls("constant", (c,))

    @classmethod
    def polynomial(cls, coeffs) -> "ScalarFunctionSpec":
        return cls("polynomial", tuple(coeffs))

    @classmethod
    def cosine_series(cls, coeffs) -> "ScalarFunctionSpec":
        return cls("cosine_series", tuple(coeffs))

    # -- evaluation --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        """Structurally zero: zero kind or every coefficient equal to 0."""
        return self.kind == "zero" or all(c == 0.0 for c in self.coefficients)

    def evaluate(self, x):
        """Value at x (scalar or ndarray); no domain check here."""
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        c = self.coefficients
        if self.kind == "constant":
            return np.full_like(x, c[0])
        if self.kind == "polynomial":
            acc = np.zeros_like(x)
            for a in reversed(c):
                acc = acc * x + a
            return acc
        acc = np.full_like(x, c[0])
        for k in range(1, len(c)):
            if c[k] != 0.0:
                acc = acc + c[k] * np.cos(k * x)
        return acc

    def antiderivative(self, x):
        """Exact integral from 0 to x (scalar or ndarray)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        c = self.coefficients
        if self.kind == "constant":
            return c[0] * x
        if self.kind == "polynomial":
            acc = np.zeros_like(x)
            for m in range(len(c) - 1, -1, -1):
                acc = acc * x + c[m] / (m + 1)
            return acc * x
        acc = c[0] * x
        for k in range(1, len(c)):
            if c[k] != 0.0:
                acc = acc + c[k] * np.sin(k * x) / k
        return acc

    def mean_integral(self) -> float:
        """Exact integral over [0, pi]."""
        return float(self.antiderivative(PI))

    def square_integral(self) -> float:
        """Exact integral of the squared function over [0, pi]."""
        if self.kind == "zero":
            return 0.0
        c = self.coefficients
        if self.kind == "constant":
            return c[0] * c[0] * PI
        if self.kind == "polynomial":
            conv = np.convolve(c, c)
            return float(sum(a * PI ** (m + 1) / (m + 1) for m, a in enumerate(conv)))
        # cosine orthogonality on [0, pi]: cross terms integrate to zero
        total = c[0] * c[0] * PI
        total += 0.5 * PI * sum(ck * ck for ck in c[1:])
        return float(total)


# ---------------------------------------------------------------------------
# Boundary matrices


@dataclass(frozen=True)
class ConditionCheck:
    condition: str
    passed: bool
    residual: float
    threshold: float


@dataclass(frozen=True)
class BoundaryReport:
    """Per-condition admissibility results for a boundary quadruple."""

    checks: tuple[ConditionCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, condition: str) -> ConditionCheck:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)


def _as_square(m, name: str, d: int | None) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {d}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _relative_rank_gap(block: np.ndarray) -> float:
    """sigma_d / sigma_1 of a d x 2d block; 0 when the block vanishes."""
    sigma = np.linalg.svd(block, compute_uv=False)
    if sigma[0] == 0.0:
        return 0.0
    return float(sigma[-1] / sigma[0])


def validate_boundary(a, b, c, d, tau_sym: float = TAU_SYM,
                      tau_rank: float = TAU_RANK) -> BoundaryReport:
    """Check admissibility of the boundary quadruple (A, B, C, D).

    Right pair: D C^T must be self-adjoint.  Left pair: B A^T must vanish.
    Both stacked blocks [A, B] and [C, D] must have full row rank d,
    judged on singular values relative to the largest.
    """
    a = _as_square(a, "A", None)
    dim = a.shape[0]
    b = _as_square(b, "B", dim)
    c = _as_square(c, "C", dim)
    d = _as_square(d, "D", dim)

    dc = d @ c.T
    sym_res = float(np.max(np.abs(dc - dc.T)))
    ba_res = float(np.max(np.abs(b @ a.T)))
    left_gap = _relative_rank_gap(np.hstack([a, b]))
    right_gap = _relative_rank_gap(np.hstack([c, d]))

    checks = (
        ConditionCheck("right_self_adjoint", sym_res <= tau_sym, sym_res, tau_sym),
        ConditionCheck("left_orthogonality", ba_res <= tau_sym, ba_res, tau_sym),
        ConditionCheck("left_rank", left_gap > tau_rank, left_gap, tau_rank),
        ConditionCheck("right_rank", right_gap > tau_rank, right_gap, tau_rank),
    )
    return BoundaryReport(checks)


def neumann_boundary(d: int):
    """A = C = 0, B = D = I."""
    z = np.zeros((d, d))
    i = np.eye(d)
    return z, i, z.copy(), i.copy()


def dirichlet_boundary(d: int):
    """A = C = I, B = D = 0."""
    z = np.zeros((d, d))
    i = np.eye(d)
    return i, z, i.copy(), z.copy()


_BOUNDARY_NAMES = {"neumann": neumann_boundary, "dirichlet": dirichlet_boundary}


# ---------------------------------------------------------------------------
# Problems


def upper_triangle_indices(d: int) -> list[tuple[int, int]]:
    """Row-major upper-triangle index order used for q entries."""
    return [(i, j) for i in range(d) for j in range(i, d)]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class PencilProblem:
    """A d-dimensional pencil problem: potentials plus boundary quadruple."""

    dimension: int
    p_diag: tuple[ScalarFunctionSpec, ...]
    q_entries: tuple[ScalarFunctionSpec, ...]
    left_a: np.ndarray
    left_b: np.ndarray
    right_c: np.ndarray
    right_d: np.ndarray

    def __post_init__(self) -> None:
        d = self.dimension
        if d < 1:
            raise ValueError("dimension must be >= 1")
        p = tuple(self.p_diag)
        q = tuple(self.q_entries)
        if len(p) != d:
            raise ValueError(f"p_diag needs {d} entries, got {len(p)}")
        if len(q) != d * (d + 1) // 2:
            raise ValueError(
                f"q_entries needs {d * (d + 1) // 2} entries, got {len(q)}")
        if not all(isinstance(s, ScalarFunctionSpec) for s in p + q):
            raise TypeError("potential entries must be ScalarFunctionSpec")
        object.__setattr__(self, "p_diag", p)
        object.__setattr__(self, "q_entries", q)
        for name in ("left_a", "left_b", "right_c", "right_d"):
            object.__setattr__(self, name, _freeze(
                _as_square(getattr(self, name), name, d)))
        report = validate_boundary(self.left_a, self.left_b,
                                   self.right_c, self.right_d)
        if not report.all_passed:
            failing = [c.condition for c in report.checks if not c.passed]
            raise BoundaryValidationError(
                f"boundary matrices fail admissibility: {', '.join(failing)}")

    def q_spec(self, i: int, j: int) -> ScalarFunctionSpec:
        if i > j:
            i, j = j, i
        d = self.dimension
        return self.q_entries[i * d - i * (i - 1) // 2 + (j - i)]


def make_problem(dimension: int, p_diag, q_entries,
                 boundary="neumann") -> PencilProblem:
    """Build a problem from specs and a boundary name or (A, B, C, D) tuple."""
    if isinstance(boundary, str):
        try:
            mats = _BOUNDARY_NAMES[boundary](dimension)
        except KeyError:
            raise DocumentError(f"unknown boundary name {boundary!r}") from None
    else:
        mats = tuple(boundary)
        if len(mats) != 4:
            raise ValueError("boundary must be a name or an (A, B, C, D) tuple")
    return PencilProblem(dimension, tuple(p_diag), tuple(q_entries), *mats)


def zero_problem(dimension: int, boundary="neumann") -> PencilProblem:
    z = ScalarFunctionSpec.zero()
    n_q = dimension * (dimension + 1) // 2
    return make_problem(dimension, (z,) * dimension, (z,) * n_q, boundary)


# ---------------------------------------------------------------------------
# Pointwise evaluation


def _check_domain(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_DOMAIN_SLACK) or np.any(arr > PI + _DOMAIN_SLACK):
        raise ValueError(f"argument {x} outside the domain [0, pi]")
    return arr


def p_values(problem: PencilProblem, xs) -> np.ndarray:
    """Diagonal entries of P at each x; shape (..., d).  No domain check."""
    xs = np.asarray(xs, dtype=float)
    return np.stack([s.evaluate(xs) for s in problem.p_diag], axis=-1)


def q_matrices(problem: PencilProblem, xs) -> np.ndarray:
    """Symmetric Q at each x; shape (..., d, d), bitwise symmetric."""
    xs = np.asarray(xs, dtype=float)
    d = problem.dimension
    out = np.zeros(xs.shape + (d, d))
    for (i, j), spec in zip(upper_triangle_indices(d), problem.q_entries):
        v = spec.evaluate(xs)
        out[..., i, j] = v
        if i != j:
            out[..., j, i] = v
    return out


def alpha_values(problem: PencilProblem, xs) -> np.ndarray:
    """Exact antiderivative of each diagonal P entry; shape (..., d)."""
    xs = np.asarray(xs, dtype=float)
    return np.stack([s.antiderivative(xs) for s in problem.p_diag], axis=-1)


def evaluate_P(problem: PencilProblem, x: float) -> np.ndarray:
    """P(x) as a diagonal d x d matrix; x must lie in [0, pi]."""
    _check_domain(x)
    return np.diag(p_values(problem, float(x)))


def evaluate_Q(problem: PencilProblem, x: float) -> np.ndarray:
    """Q(x) as a symmetric d x d matrix; x must lie in [0, pi]."""
    _check_domain(x)
    return q_matrices(problem, float(x))


def alpha(problem: PencilProblem, x: float) -> np.ndarray:
    """Integral of P from 0 to x as a diagonal matrix, exact closed form."""
    _check_domain(x)
    return np.diag(alpha_values(problem, float(x)))


# ---------------------------------------------------------------------------
# Uniform grids


@dataclass(frozen=True, eq=False)
class UniformGrid:
    """N equal steps over [0, pi]; nodes hit both endpoints exactly."""

    n_steps: int
    step: float
    nodes: np.ndarray

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.shape != (self.n_steps + 1,):
            raise ValueError("nodes must have n_steps + 1 entries")
        if nodes[0] != 0.0 or abs(nodes[-1] - PI) > 4e-16:
            raise ValueError("grid must span [0, pi]")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "nodes", _freeze(nodes))

    @classmethod
    def from_steps(cls, n_steps: int) -> "UniformGrid":
        n_steps = int(n_steps)
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        return cls(n_steps, PI / n_steps, np.linspace(0.0, PI, n_steps + 1))


# ---------------------------------------------------------------------------
# JSON problem documents


@dataclass(frozen=True, eq=False)
class ProblemDocument:
    """Parsed problem document: problem, grid size, optional comparison Q."""

    problem: PencilProblem
    grid_n: int
    q_tilde: tuple[ScalarFunctionSpec, ...] | None = None


def _spec_to_dict(spec: ScalarFunctionSpec) -> dict:
    return {"kind": spec.kind, "coefficients": list(spec.coefficients)}


def _spec_from_dict(obj, where: str) -> ScalarFunctionSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise DocumentError(f"{where}: expected an object with a 'kind' field")
    try:
        return ScalarFunctionSpec(obj["kind"], tuple(obj.get("coefficients", ())))
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"{where}: {exc}") from exc


def _matrix_from_doc(obj, name: str, d: int) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape == (d * d,):
        arr = arr.reshape(d, d)
    if arr.shape != (d, d):
        raise DocumentError(
            f"boundary matrix {name} must be {d}x{d} (nested or flat row-major)")
    return arr


def _spec_list(doc: dict, key: str, expected: int) -> tuple[ScalarFunctionSpec, ...]:
    raw = doc.get(key)
    if not isinstance(raw, list) or len(raw) != expected:
        raise DocumentError(f"'{key}' must be a list of {expected} spec objects")
    return tuple(_spec_from_dict(s, f"{key}[{i}]") for i, s in enumerate(raw))


def parse_problem_document(source) -> ProblemDocument:
    """Parse a problem document from JSON text or an already-decoded dict."""
    if isinstance(source, (str, bytes)):
        doc = json.loads(source)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise DocumentError("problem document must be a JSON object")
    if doc.get("schema") != SCHEMA_ID:
        raise DocumentError(f"missing or unsupported schema (expected {SCHEMA_ID!r})")

    d = doc.get("dimension")
    if not isinstance(d, int) or d < 1:
        raise DocumentError("'dimension' must be a positive integer")
    grid_n = doc.get("grid_n")
    if not isinstance(grid_n, int) or grid_n < 16:
        raise DocumentError("'grid_n' must be an integer >= 16")

    p = _spec_list(doc, "p", d)
    n_q = d * (d + 1) // 2
    q = _spec_list(doc, "q", n_q)
    q_tilde = _spec_list(doc, "q_tilde", n_q) if "q_tilde" in doc else None

    bnd = doc.get("boundary")
    if isinstance(bnd, str):
        boundary = bnd
    elif isinstance(bnd, dict):
        try:
            boundary = tuple(_matrix_from_doc(bnd[k], k, d) for k in "ABCD")
        except KeyError as exc:
            raise DocumentError(f"boundary object missing key {exc}") from exc
    else:
        raise DocumentError("'boundary' must be a name or an {A,B,C,D} object")

    try:
        problem = make_problem(d, p, q, boundary)
    except (ValueError, TypeError) as exc:
        raise DocumentError(str(exc)) from exc
    return ProblemDocument(problem, grid_n, q_tilde)


def document_dict(problem: PencilProblem, grid_n: int,
                  q_tilde=None) -> dict:
    """Canonical document dict for a problem (boundary always as matrices)."""
    doc = {
        "schema": SCHEMA_ID,
        "dimension": problem.dimension,
        "p": [_spec_to_dict(s) for s in problem.p_diag],
        "q": [_spec_to_dict(s) for s in problem.q_entries],
        "boundary": {
            "A": problem.left_a.tolist(),
            "B": problem.left_b.tolist(),
            "C": problem.right_c.tolist(),
            "D": problem.right_d.tolist(),
        },
        "grid_n": int(grid_n),
    }
    if q_tilde is not None:
        doc["q_tilde"] = [_spec_to_dict(s) for s in q_tilde]
    return doc


def serialize_problem_document(problem: PencilProblem, grid_n: int,
                               q_tilde=None) -> str:
    from .ioutil import dumps_canonical
    return dumps_canonical(document_dict(problem, grid_n, q_tilde))


def problem_digest(problem: PencilProblem) -> str:
    """Content hash of the problem itself (grid excluded)."""
    doc = document_dict(problem, 0)
    del doc["grid_n"]
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
