"""Post-processing of discrete spectra: Riesz means, counting, Weyl fits and
bound reports.

Every lambda grid is capped at the largest computed eigenvalue, so the
truncated sums used here are exact for the discrete problem.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bounds import TraceBoundParams, riesz_lower_exact, riesz_upper, weyl_constants
from .domains import CTauEstimate, Domain, scale
from .errors import UsageError
from .solver.spectrum import Spectrum, eigensolve

# e^{lambda} must stay below this fraction of the grid frequency pi / h
RESOLVABLE_FRACTION = 0.25


def riesz_mean(spectrum: Spectrum, lam):
    """Sum over computed eigenvalues of (lam - lambda_j)_+ (scalar or array)."""
    ev = spectrum.eigenvalues
    lam_arr = np.asarray(lam, dtype=float)
    out = np.clip(lam_arr[..., None] - ev, 0.0, None).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def counting(spectrum: Spectrum, lam):
    """Number of computed eigenvalues strictly below lam."""
    ev = spectrum.eigenvalues
    out = np.searchsorted(ev, np.asarray(lam, dtype=float), side="left")
    return int(out) if np.ndim(out) == 0 else out


def frequency_ceiling(spectrum: Spectrum) -> float:
    """Largest lambda treated as resolved: log(pi / (4 h))."""
    return math.log(RESOLVABLE_FRACTION * math.pi / spectrum.h)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return repr(float(x))


# ---------------------------------------------------------------------------
# Weyl limits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylFit:
    """Window means of N(lam) e^{-d lam} and of the Riesz analogue."""

    count_const_est: float
    riesz_const_est: float
    count_target: float
    riesz_target: float
    window: tuple
    samples: int

    @property
    def count_rel_dev(self) -> float:
        return abs(self.count_const_est - self.count_target) / self.count_target

    @property
    def riesz_rel_dev(self) -> float:
        return abs(self.riesz_const_est - self.riesz_target) / self.riesz_target

    @property
    def rel_dev(self) -> float:
        return max(self.count_rel_dev, self.riesz_rel_dev)

    def rows(self):
        return [
            ("count_const", self.count_const_est, self.count_target, self.count_rel_dev),
            ("riesz_const", self.riesz_const_est, self.riesz_target, self.riesz_rel_dev),
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "estimate", "target", "rel_dev"])
        for name, est, target, dev in self.rows():
            w.writerow([name, _fmt(est), _fmt(target), _fmt(dev)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "window": [float(x) for x in self.window],
            "samples": self.samples,
            "rows": [
                {"quantity": n, "estimate": e, "target": t, "rel_dev": r} for n, e, t, r in self.rows()
            ],
            "rel_dev": self.rel_dev,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def weyl_fit(spectrum: Spectrum, lambda_window: Sequence[float], samples: int = 201) -> WeylFit:
    """Estimate both Weyl constants from a window of the discrete spectrum.

    Parameters
    ----------
    spectrum : Spectrum
    lambda_window : (lo, hi)
        Must satisfy ``hi < lambda_k`` and ``hi <= frequency_ceiling``.
    samples : int
        Number of equispaced lambda values in the window.

    Raises
    ------
    UsageError
        If the window is empty, extends past the last computed eigenvalue or
        past the resolvable frequency ceiling.
    """
    lo, hi = (float(x) for x in lambda_window)
    samples = int(samples)
    if not (hi > lo) or samples < 1:
        raise UsageError("need a non-empty window lo < hi and samples >= 1")
    lam_k = float(spectrum.eigenvalues[-1])
    if hi >= lam_k:
        raise UsageError(
            f"window upper end {hi!r} is not below the largest computed eigenvalue {lam_k!r}; compute more eigenvalues"
        )
    ceiling = frequency_ceiling(spectrum)
    if hi > ceiling:
        raise UsageError(
            f"window upper end {hi!r} exceeds the resolvable ceiling log(pi/(4h)) = {ceiling!r}; refine the grid"
        )
    d = spectrum.d
    lam = np.linspace(lo, hi, samples)
    damp = np.exp(-d * lam)
    count_est = float(np.mean(counting(spectrum, lam) * damp))
    riesz_est = float(np.mean(riesz_mean(spectrum, lam) * damp))
    riesz_c, count_c = weyl_constants(d, spectrum.measure)
    return WeylFit(count_est, riesz_est, count_c, riesz_c, (lo, hi), samples)


# ---------------------------------------------------------------------------
# Trace-bound sandwich
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundRow:
    lam: float
    lower: Optional[float]
    riesz: float
    upper: float
    flag: bool


@dataclass
class BoundReport:
    """Rows (lam, lower, riesz, upper, flag) for one spectrum.

    ``flag`` marks rows where the computed Riesz mean exceeds the upper bound
    by more than ``budget`` (k * quad_tol).
    """

    rows: list
    params: TraceBoundParams
    budget: float
    c_tau_error: float = 0.0
    spectrum: Optional[Spectrum] = field(default=None, repr=False)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.rows if r.flag)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "lower", "riesz", "upper", "flag"])
        for r in self.rows:
            w.writerow([_fmt(r.lam), _fmt(r.lower), _fmt(r.riesz), _fmt(r.upper), _fmt(r.flag)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"d": p.d, "volume": p.volume, "tau": p.tau, "c_tau": p.c_tau},
            "budget": self.budget,
            "c_tau_error": self.c_tau_error,
            "violations": self.violations,
            "rows": [
                {"lambda": r.lam, "lower": r.lower, "riesz": r.riesz, "upper": r.upper, "flag": r.flag}
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def default_lambda_grid(spectrum: Spectrum, points: int = 200) -> np.ndarray:
    ev = spectrum.eigenvalues
    lo = float(ev[0]) - 0.5
    return np.linspace(lo, float(ev[-1]), points)


def sandwich_report(
    spectrum: Spectrum,
    tau: float,
    c_tau: CTauEstimate,
    lambda_grid=None,
    domain: Optional[Domain] = None,
) -> BoundReport:
    """Compare discrete Riesz means with the upper and exact lower trace bounds.

    The lower bound is left empty where lam < 2 C or d = 1.  Grid points above
    the largest computed eigenvalue are dropped.  ``domain``, when given, must
    be the domain the spectrum was computed for (the one ``c_tau`` belongs to).
    """
    if domain is not None and domain != spectrum.domain:
        raise UsageError("c_tau and spectrum refer to different domains")
    if abs(c_tau.tau - tau) > 1e-15:
        raise UsageError(f"c_tau was computed for tau={c_tau.tau!r}, not {tau!r}")
    d = spectrum.d
    volume = spectrum.measure
    params = TraceBoundParams(d, volume, tau, c_tau.value)
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(spectrum)
    lam_k = float(spectrum.eigenvalues[-1])
    budget = spectrum.k * spectrum.quad_tol
    rows = []
    for lam in np.asarray(lambda_grid, dtype=float):
        if lam > lam_k:
            continue
        lam = float(lam)
        up = riesz_upper(d, volume, lam)
        lower = None
        if d >= 2 and lam >= 2.0 * c_tau.value:
            lower = riesz_lower_exact(params, lam)
        rm = riesz_mean(spectrum, lam)
        rows.append(BoundRow(lam, lower, rm, up, rm > up + budget))
    return BoundReport(rows, params, budget, c_tau.abs_error, spectrum)


# ---------------------------------------------------------------------------
# Scaling and Faber-Krahn comparisons
# ---------------------------------------------------------------------------


def scaling_check(domain: Domain, R: float, resolution: int, k: int, **solve_kw) -> float:
    """max_j |lambda_j(R Omega) - lambda_j(Omega) + log R| on matched grids.

    Both problems use the same resolution, so the cells of the scaled grid
    are the scaled cells.
    """
    R = float(R)
    if not R > 0:
        raise UsageError("R must be positive")
    base = eigensolve(domain, resolution, k, **solve_kw)
    if R == 1.0:
        return 0.0
    scaled = eigensolve(scale(domain, R), resolution, k, **solve_kw)
    return float(np.max(np.abs(scaled.eigenvalues - base.eigenvalues + math.log(R))))


def faber_krahn_check(d: int, volume: float, spectra) -> float:
    """lambda_1^h(competitor) - lambda_1^h(ball) for spectra = (ball, competitor).

    Both measures must equal ``volume`` within 1%.  Faber-Krahn forbids a
    margin below minus the combined discretisation brackets; a positive
    margin is the expected outcome at matched h.
    """
    ball, other = spectra
    for s in (ball, other):
        if s.d != d:
            raise UsageError(f"spectrum of dimension {s.d} given for d={d}")
        if abs(s.measure - volume) > 0.01 * volume:
            raise UsageError(f"measure {s.measure!r} differs from {volume!r} by more than 1%")
    return float(other.eigenvalues[0] - ball.eigenvalues[0])
