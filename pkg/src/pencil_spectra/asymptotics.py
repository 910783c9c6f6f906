"""Closed-form reference spectra and leading-order eigenvalue asymptotics.

The zero problem has eigenvalues at the integers with full multiplicity,
and constant scalar coefficients admit the exact dispersion
lambda^2 - 2*lambda*p0 - q0 = n^2.  For variable diagonal P the leading
asymptotic lambda ~ n + alpha_j/pi (alpha_j the mean of channel j of P
over [0, pi], times pi) is validated here by measuring the gap sequence
against its expected c/n decay, rather than asserted as an equality,
which constant coefficients already refute at finite n.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ioutil import format_float
from .model import PI, PencilProblem, alpha, problem_digest, zero_problem
from .spectral import EigenvalueRecord, Spectrum

logger = logging.getLogger(__name__)

_FIT_MIN_N = 5


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Leading-order eigenvalue n + alpha_j/pi for channel j (1-based)."""

    n: int
    channel_j: int
    predicted: float


@dataclass(frozen=True)
class GapRow:
    """One prediction matched (or not) to a computed eigenvalue."""

    n: int
    channel_j: int
    computed: float | None
    predicted: float
    gap: float | None

    @property
    def skipped(self) -> bool:
        return self.computed is None


@dataclass(frozen=True)
class ChannelFit:
    """Least-squares c/n fit and log-log decay exponent for one channel."""

    channel_j: int
    coefficient: float
    exponent: float | None
    n_used: int


@dataclass(frozen=True)
class GapReport:
    rows: tuple[GapRow, ...]
    fits: tuple[ChannelFit, ...]

    def max_gap(self) -> float:
        gaps = [row.gap for row in self.rows if row.gap is not None]
        return max(gaps, default=0.0)

    def skipped_rows(self) -> list[GapRow]:
        return [row for row in self.rows if row.skipped]


def unperturbed_spectrum(d: int, n_max: int) -> Spectrum:
    """Exact spectrum of the zero problem: integers in [-n_max, n_max].

    Each value carries full multiplicity d and zero residual; the window
    extends a quarter unit past the extreme values on both sides.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    records = tuple(
        EigenvalueRecord(value=float(n), multiplicity=d, residual=0.0,
                         bracket=(float(n), float(n)))
        for n in range(-n_max, n_max + 1))
    return Spectrum(records=records,
                    window=(-n_max - 0.25, n_max + 0.25),
                    problem_hash=problem_digest(zero_problem(d)))


def constant_coefficient_oracle(p0: float, q0: float, n_max: int) -> list[float]:
    """Exact eigenvalues p0 +- sqrt(p0^2 + q0 + n^2) for n = 0..n_max, d=1.

    Solves the dispersion lambda^2 - 2*lambda*p0 - q0 = n^2 of the
    constant-coefficient Neumann problem.  Branches with a negative
    radicand are skipped with a logged warning; duplicates merge.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    values: list[float] = []
    for n in range(n_max + 1):
        radicand = p0 * p0 + q0 + n * n
        if radicand < 0.0:
            logger.warning(
                "skipping n=%d: radicand p0^2+q0+n^2 = %g is negative", n, radicand)
            continue
        root = math.sqrt(radicand)
        values.extend((p0 + root, p0 - root))
    values.sort()
    merged: list[float] = []
    for v in values:
        if not merged or v - merged[-1] > 1e-12:
            merged.append(v)
    return merged


def asymptotic_predictions(problem: PencilProblem, n_min: int,
                           n_max: int) -> list[AsymptoticPrediction]:
    """Predictions lambda = n + alpha_j/pi for n in [n_min, n_max], all channels."""
    if n_min > n_max:
        raise ValueError("n_min must not exceed n_max")
    shifts = np.diagonal(alpha(problem, PI)) / PI
    return [AsymptoticPrediction(n=n, channel_j=j + 1,
                                 predicted=float(n + shifts[j]))
            for n in range(n_min, n_max + 1)
            for j in range(problem.dimension)]


def _fit_channel(rows: list[GapRow], j: int) -> ChannelFit:
    pts = [(row.n, row.gap) for row in rows
           if row.channel_j == j and not row.skipped and row.n >= _FIT_MIN_N]
    if not pts:
        return ChannelFit(channel_j=j, coefficient=0.0, exponent=None, n_used=0)
    ns = np.array([p[0] for p in pts], dtype=float)
    gaps = np.array([p[1] for p in pts], dtype=float)
    # least squares for gap ~ c/n: c = sum(gap/n) / sum(1/n^2)
    coeff = float(np.sum(gaps / ns) / np.sum(1.0 / (ns * ns)))
    exponent = None
    if len(pts) >= 2 and np.all(gaps > 0.0):
        slope = np.polyfit(np.log(ns), np.log(gaps), 1)[0]
        exponent = float(-slope)
    return ChannelFit(channel_j=j, coefficient=coeff, exponent=exponent,
                      n_used=len(pts))


def asymptotic_gap_report(spectrum: Spectrum,
                          predictions: list[AsymptoticPrediction]) -> GapReport:
    """Match predictions to nearest computed eigenvalues and fit gap decay.

    Predictions outside the spectrum's window are kept as skipped rows
    (no computed value, no gap) and excluded from the fits.  The c/n
    coefficient comes from least squares over rows with n >= 5; the
    exponent is the log-log slope of gap against n over the same rows.
    """
    lo, hi = spectrum.window
    values = spectrum.values()
    rows: list[GapRow] = []
    for pred in sorted(predictions, key=lambda p: (p.n, p.channel_j)):
        if not values or not (lo <= pred.predicted <= hi):
            rows.append(GapRow(n=pred.n, channel_j=pred.channel_j,
                               computed=None, predicted=pred.predicted, gap=None))
            continue
        nearest = min(values, key=lambda v: (abs(v - pred.predicted), v))
        rows.append(GapRow(n=pred.n, channel_j=pred.channel_j,
                           computed=nearest, predicted=pred.predicted,
                           gap=abs(nearest - pred.predicted)))
    channels = sorted({row.channel_j for row in rows})
    fits = tuple(_fit_channel(rows, j) for j in channels)
    return GapReport(rows=tuple(rows), fits=fits)


def write_gap_csv(report: GapReport, path) -> None:
    """Columns n,j,computed,predicted,gap; skipped rows leave cells empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "j", "computed", "predicted", "gap"])
        for row in report.rows:
            writer.writerow([
                str(row.n), str(row.channel_j),
                "" if row.computed is None else format_float(row.computed),
                format_float(row.predicted),
                "" if row.gap is None else format_float(row.gap),
            ])
