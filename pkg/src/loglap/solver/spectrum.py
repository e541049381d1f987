"""Eigensolver driver, symmetry sectors and the Spectrum record."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .. import __version__
from ..domains import Domain, domain_from_description
from ..errors import ConvergenceError, UsageError
from .grid import GridDiscretization, build_grid
from .lanczos import lanczos_smallest
from .operator import LogLaplacianOperator


# ---------------------------------------------------------------------------
# Symmetry sectors
# ---------------------------------------------------------------------------


@dataclass
class Sector:
    """Isometry E from sector coordinates onto the active-cell space.

    ``E c = sum_g chi(g) P_g (c / norm)`` with one coordinate per orbit.
    """

    label: str
    reps: np.ndarray  # representative active index per orbit
    images: list  # per group element: active index of g(rep)
    chars: list  # per group element: character value
    norms: np.ndarray
    multiplicity: int = 1

    @property
    def size(self) -> int:
        return len(self.reps)

    def lift(self, c, n):
        x = np.zeros(n, dtype=np.result_type(c, float))
        c = c / self.norms
        for img, chi in zip(self.images, self.chars):
            x[img] += chi * c
        return x

    def restrict(self, x):
        c = np.zeros(self.size, dtype=x.dtype)
        for img, chi in zip(self.images, self.chars):
            c += chi * x[img]
        return c / self.norms


def _grid_symmetries(grid: GridDiscretization):
    """Active-index permutations for axis reflections and (square) transposition."""
    mask = np.asarray(grid.mask)
    pos = -np.ones(mask.shape, dtype=np.int64)
    pos[mask] = np.arange(grid.n_active)
    refl = []
    for j in range(grid.d):
        if np.array_equal(mask, np.flip(mask, axis=j)):
            refl.append(np.flip(pos, axis=j)[mask])
        else:
            refl.append(None)
    swap = None
    if grid.d == 2 and mask.shape[0] == mask.shape[1] and np.array_equal(mask, mask.T):
        swap = pos.T[mask]
    return refl, swap


def _make_sector(label, perms, chars, n, multiplicity=1):
    # orbits of the group listed in ``perms`` (closed under composition)
    seen = np.zeros(n, dtype=bool)
    stab = np.zeros(n, dtype=np.int64)
    ok = np.ones(n, dtype=bool)
    for p, chi in zip(perms, chars):
        fixed = p == np.arange(n)
        stab += fixed
        ok &= ~(fixed & (chi < 0))
    # representative = smallest index in its orbit
    orbit_min = np.arange(n)
    for p in perms:
        orbit_min = np.minimum(orbit_min, p)
    reps = np.flatnonzero((orbit_min == np.arange(n)) & ok)
    order = len(perms)
    norms = np.sqrt(stab[reps] * order).astype(float)
    images = [p[reps] for p in perms]
    # characters enter as stab-weighted sums; divide so that E is an isometry
    return Sector(label, reps, images, [float(c) for c in chars], norms, multiplicity)


def symmetry_sectors(grid: GridDiscretization) -> list:
    """Decompose the active space by the mirror symmetries of the cell mask."""
    n = grid.n_active
    ident = np.arange(n)
    refl, swap = _grid_symmetries(grid)

    def compose(p, q):
        return p[q]

    gens = [r for r in refl if r is not None]
    axes = [j for j, r in enumerate(refl) if r is not None]
    if not gens:
        return [Sector("all", ident, [ident], [1.0], np.ones(n))]
    # elements of the reflection group with their exponent vectors
    elems = []
    for bits in np.ndindex(*(2,) * len(gens)):
        p = ident
        for b, g in zip(bits, gens):
            if b:
                p = compose(g, p)
        elems.append((bits, p))
    sectors = []
    if swap is not None and len(gens) == 2:
        # D4: four one-dimensional characters with chi(R1) = chi(R2), and the
        # two-dimensional one via the (even, odd) reflection character
        for c in (1, -1):
            for cs in (1, -1):
                perms, chars = [], []
                for bits, p in elems:
                    for s in (0, 1):
                        perms.append(compose(swap, p) if s else p)
                        chars.append((c ** sum(bits)) * (cs**s))
                tag = ("e" if c > 0 else "o") * 2 + ("+" if cs > 0 else "-")
                sectors.append(_make_sector(tag, perms, chars, n))
        perms = [p for _, p in elems]
        chars = [(-1) ** bits[1] for bits, _ in elems]
        sectors.append(_make_sector("eo", perms, chars, n, multiplicity=2))
        return sectors
    for signs in np.ndindex(*(2,) * len(gens)):
        perms = [p for _, p in elems]
        chars = [int(np.prod([(-1) ** (s * b) for s, b in zip(signs, bits)])) for bits, _ in elems]
        tag = "".join("o" if s else "e" for s in signs)
        sectors.append(_make_sector(tag, perms, chars, n))
    return sectors


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------


@dataclass
class Spectrum:
    """Lowest discrete eigenvalues of the operator on a grid."""

    domain: Domain
    d: int
    h: float
    measure: float
    k: int
    eigenvalues: np.ndarray
    residuals: np.ndarray
    quad_tol: float
    resolution: int = 0
    active_cells: int = 0
    solver_tol: float = 0.0
    tool_version: str = __version__
    converged: Optional[np.ndarray] = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.residuals = np.asarray(self.residuals, dtype=float)
        if self.converged is None:
            self.converged = np.ones(len(self.eigenvalues), dtype=bool)

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.describe(),
            "d": self.d,
            "h": self.h,
            "measure": self.measure,
            "k": self.k,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "quad_tol": self.quad_tol,
            "tool_version": self.tool_version,
            "resolution": self.resolution,
            "active_cells": self.active_cells,
            "solver_tol": self.solver_tol,
        }

    def to_json(self) -> str:
        # json writes floats with repr, i.e. shortest round-trip form
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "Spectrum":
        try:
            return cls(
                domain=domain_from_description(data["domain"]),
                d=int(data["d"]),
                h=float(data["h"]),
                measure=float(data["measure"]),
                k=int(data["k"]),
                eigenvalues=np.array(data["eigenvalues"], dtype=float),
                residuals=np.array(data["residuals"], dtype=float),
                quad_tol=float(data["quad_tol"]),
                resolution=int(data.get("resolution", 0)),
                active_cells=int(data.get("active_cells", 0)),
                solver_tol=float(data.get("solver_tol", 0.0)),
                tool_version=str(data.get("tool_version", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed spectrum record: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"spectrum file is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Spectrum":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _sector_eigs(op, sector, k, tol, method, dense_A, seed):
    n = op.n
    m = sector.size
    k = min(k, m)
    if k <= 0:
        return np.zeros(0), np.zeros(0)
    shift = op.gershgorin_lower()

    def apply(c):
        return sector.restrict(op.apply_scaled(sector.lift(c, n)))

    use_dense = method == "dense" or (method == "auto" and (m <= 1500 or 2 * k + 20 >= m))
    if use_dense:
        if dense_A is not None:
            E = np.zeros((n, m))
            for img, chi in zip(sector.images, sector.chars):
                np.add.at(E, (img, np.arange(m)), chi / sector.norms)
            As = E.T @ dense_A @ E / op.cell_measure
        else:
            As = np.column_stack([apply(e) for e in np.eye(m)])
        As = 0.5 * (As + As.T)
        vals, vecs = scipy.linalg.eigh(As, subset_by_index=(0, k - 1))
        res = np.linalg.norm(As @ vecs - vecs * vals, axis=0)
        return vals, res
    # the shift makes the iteration operator positive semidefinite
    r = lanczos_smallest(lambda c: apply(c) - shift * c, m, k, tol=tol, seed=seed)
    return r.eigenvalues + shift, r.residuals


def eigensolve(
    domain: Domain,
    resolution: int,
    k: int,
    tol: float = 1e-9,
    quad_tol: float = 1e-10,
    method: str = "auto",
    symmetry: bool = True,
    h: Optional[float] = None,
    grid: Optional[GridDiscretization] = None,
    operator: Optional[LogLaplacianOperator] = None,
    workers=None,
    seed: int = 0,
) -> Spectrum:
    """k smallest eigenvalues of A / h^d on the inner cell grid of ``domain``.

    ``method`` is "auto", "lanczos" or "dense".  With ``symmetry`` the mirror
    symmetries of the cell mask split the problem into independent sectors.
    """
    if method not in ("auto", "lanczos", "dense"):
        raise UsageError(f"unknown method {method!r}")
    grid = grid or build_grid(domain, resolution, h=h)
    op = operator or LogLaplacianOperator(grid, quad_tol=quad_tol, workers=workers)
    n = op.n
    k = int(k)
    if not 1 <= k <= n:
        raise UsageError(f"k must lie in [1, {n}] (active cells), got {k}")
    sectors = symmetry_sectors(grid) if symmetry else symmetry_sectors_trivial(n)
    dense_A = op.dense() if n <= 4096 and method != "lanczos" else None
    total = sum(s.size * s.multiplicity for s in sectors)
    assert total == n, "sector decomposition must cover the active space"

    want = {id(s): min(s.size, int(math.ceil(1.15 * k * s.size / n)) + 8) for s in sectors}
    comp = {}
    while True:
        for s in sectors:
            if id(s) not in comp or len(comp[id(s)][0]) < want[id(s)]:
                try:
                    comp[id(s)] = _sector_eigs(op, s, want[id(s)], tol, method, dense_A, seed)
                except ConvergenceError as exc:
                    part = exc.partial
                    vals = np.repeat(part.eigenvalues, s.multiplicity)
                    raise ConvergenceError(
                        str(exc),
                        _spectrum(grid, op, vals, np.repeat(part.residuals, s.multiplicity), tol,
                                  np.repeat(part.converged, s.multiplicity)),
                    ) from None
        # eigenvalues below every incomplete sector's largest computed value are complete
        cut = math.inf
        for s in sectors:
            vals = comp[id(s)][0]
            if len(vals) < s.size:
                cut = min(cut, vals[-1])
        allv, allr = [], []
        for s in sectors:
            vals, res = comp[id(s)]
            allv.append(np.repeat(vals, s.multiplicity))
            allr.append(np.repeat(res, s.multiplicity))
        allv = np.concatenate(allv)
        allr = np.concatenate(allr)
        order = np.argsort(allv, kind="stable")
        allv, allr = allv[order], allr[order]
        complete = allv <= cut if math.isfinite(cut) else np.ones(len(allv), dtype=bool)
        if complete.sum() >= k:
            return _spectrum(grid, op, allv[:k], allr[:k], tol)
        for s in sectors:
            vals = comp[id(s)][0]
            if len(vals) < s.size and vals[-1] <= cut:
                want[id(s)] = min(s.size, int(1.5 * want[id(s)]) + 8)


def symmetry_sectors_trivial(n):
    ident = np.arange(n)
    return [Sector("all", ident, [ident], [1.0], np.ones(n))]


def _spectrum(grid, op, vals, res, tol, converged=None):
    return Spectrum(
        domain=grid.domain,
        d=grid.d,
        h=grid.h,
        measure=grid.domain.measure,
        k=len(vals),
        eigenvalues=np.asarray(vals),
        residuals=np.asarray(res),
        quad_tol=op.quad_tol,
        resolution=grid.resolution,
        active_cells=grid.n_active,
        solver_tol=tol,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Plane waves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneWaveRayleigh:
    """Rayleigh quotient of the cell-averaged plane wave exp(-i x . xi).

    ``eps_h`` is the discretisation budget: the share of the discrete wave's
    L2 mass outside the main frequency lobe, 1 - prod sinc^2(xi_j h / 2),
    times the largest possible excess (lambda_max^h - log|xi|)_+.
    """

    value: float
    eps_h: float
    xi_norm: float


def plane_wave_rayleigh(
    domain: Domain,
    grid: GridDiscretization,
    xi,
    operator: Optional[LogLaplacianOperator] = None,
) -> PlaneWaveRayleigh:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (grid.d,):
        raise UsageError(f"xi must be a {grid.d}-vector")
    if grid.domain is not domain and grid.domain != domain:
        raise UsageError("grid was built for a different domain")
    op = operator or LogLaplacianOperator(grid)
    x = grid.cell_centers()
    # cell average of exp(-i x . xi)
    damp = float(np.prod(np.sinc(xi * grid.h / (2.0 * math.pi))))
    c = damp * np.exp(-1j * (x @ xi))
    value = op.rayleigh(c) if damp != 0 else math.inf
    xn = float(np.linalg.norm(xi))
    delta = 1.0 - damp * damp
    if delta > 0:
        lam_max = op.gershgorin_upper()
        excess = max(lam_max - (math.log(xn) if xn > 0 else -math.inf), 0.0)
        eps = delta * excess
    else:
        eps = 0.0
    return PlaneWaveRayleigh(float(value), float(eps), xn)
