"""Uniform cell grids and the inner (conforming) cell approximation of a domain."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..domains import Ball, Box, CellMask, Domain
from ..errors import DomainError, UsageError


@dataclass(frozen=True, eq=False)
class GridDiscretization:
    """Cells ``origin + h * (idx + [0, 1]^d)`` of a ``dims`` bounding grid.

    ``mask`` marks active cells (closed cell inside the closure of the
    domain); ``active`` lists their flat C-order indices in increasing order.
    """

    domain: Domain
    d: int
    h: float
    origin: tuple
    dims: tuple
    mask: np.ndarray
    resolution: int

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.mask.reshape(-1))

    @property
    def n_active(self) -> int:
        return int(self.mask.sum())

    @property
    def cell_measure(self) -> float:
        return self.h**self.d

    @property
    def covered_measure(self) -> float:
        return self.n_active * self.cell_measure

    def cell_centers(self) -> np.ndarray:
        idx = np.array(np.nonzero(self.mask)).T
        return np.asarray(self.origin) + self.h * (idx + 0.5)


def _centered_edges(n: int) -> np.ndarray:
    # cell edges, in units of h / 2, of n cells centred at 0: integers
    return 2 * np.arange(n + 1) - n


def build_grid(domain: Domain, resolution: int, h: Optional[float] = None) -> GridDiscretization:
    """Inner cell approximation with ``resolution`` cells across the largest extent.

    Passing ``h`` overrides the cell size (used for matched-h comparisons of
    different domains); ``resolution`` is then only recorded.
    """
    resolution = int(resolution)
    if resolution < 1:
        raise UsageError("resolution must be a positive integer")
    d = domain.d
    if d not in (1, 2):
        raise UsageError("the solver supports d in {1, 2}")

    if isinstance(domain, Ball):
        r = domain.radius
        if h is None:
            h = 2.0 * r / resolution
            n = resolution
            # corner coordinates in units of h/2 are integers; test |corner| <= r exactly
            e = _centered_edges(n)
            far = np.maximum(np.abs(e[:-1]), np.abs(e[1:]))
            if d == 1:
                mask = far <= n
            else:
                mask = far[:, None] ** 2 + far[None, :] ** 2 <= n * n
        else:
            n = int(math.floor(2.0 * r / h + 1e-9))
            e = _centered_edges(n) * (0.5 * h)
            far = np.maximum(np.abs(e[:-1]), np.abs(e[1:]))
            if d == 1:
                mask = far <= r * (1 + 1e-12)
            else:
                mask = far[:, None] ** 2 + far[None, :] ** 2 <= r * r * (1 + 1e-12)
        dims = (n,) * d
        origin = (-0.5 * n * h,) * d
    elif isinstance(domain, Box):
        if h is None:
            h = max(domain.lengths) / resolution
        dims = tuple(int(math.floor(L / h + 1e-9)) for L in domain.lengths)
        mask = np.ones(dims, dtype=bool)
        origin = tuple(-0.5 * n * h for n in dims)
    elif isinstance(domain, CellMask):
        ny, nx = domain.mask.shape
        native = max(nx, ny)
        if h is not None:
            factor = domain.h / h
            if abs(factor - round(factor)) > 1e-9 or round(factor) < 1:
                raise UsageError("h must divide the mask cell size")
            factor = int(round(factor))
        else:
            if resolution % native:
                raise UsageError(f"resolution must be a multiple of the mask extent {native}")
            factor = resolution // native
        fine = domain.refine(factor)
        h = fine.h
        # grid axis 0 is x, axis 1 is y
        mask = np.ascontiguousarray(fine.mask.T)
        dims = mask.shape
        origin = tuple(domain.origin)
    else:
        raise UsageError(f"unsupported domain {domain!r}")

    h = float(h)
    if h * math.sqrt(d) >= 1.0:
        raise DomainError(
            f"cell diameter h*sqrt(d) = {h * math.sqrt(d):.4g} must be below 1; "
            "raise the resolution or solve on a scaled copy (eigenvalues shift by -log R)"
        )
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DomainError(f"resolution {resolution} is too coarse: no cell fits inside the domain")
    mask.setflags(write=False)
    return GridDiscretization(domain, d, h, tuple(float(x) for x in origin), tuple(int(x) for x in dims), mask, resolution)
