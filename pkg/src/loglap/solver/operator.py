"""Galerkin matrix of the log-form for piecewise constants on a cell grid.

For phi = sum_a c_a 1_a the form splits (real-space decomposition) as

    kappa_d ||phi||_**^2 - int (j * phi) phi + zeta_d ||phi||^2,

which gives the matrix

    A_ab = -2 kappa_d G(b - a)           (a != b),
    A_aa =  2 kappa_d I_self + zeta_d h^d.

The mass matrix is h^d I, so eigenvalues of the operator are those of A / h^d.
The off-diagonal part is a convolution with G on the bounding grid and is
applied with zero-padded FFTs.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.fft

from ..errors import UsageError
from ..specfun import constants_for
from .grid import GridDiscretization
from .kernel import KernelTable, build_kernel_table


class LogLaplacianOperator:
    """Matrix-free A on the active cells of ``grid``.

    Parameters
    ----------
    grid : GridDiscretization
    table : KernelTable, optional
        Must cover offsets up to ``max(dims) - 1``; built if omitted.
    quad_tol : float
        Kernel quadrature tolerance when the table is built here.
    workers : int, optional
        Passed to ``scipy.fft``; results do not depend on it.
    """

    def __init__(self, grid: GridDiscretization, table: Optional[KernelTable] = None, quad_tol: float = 1e-10, workers=None):
        self.grid = grid
        d = grid.d
        M = max(grid.dims) - 1
        if table is None:
            table = build_kernel_table(d, grid.h, max(M, 1), quad_tol)
        if table.d != d or table.h != grid.h or table.max_offset < M:
            raise UsageError("kernel table does not match the grid")
        self.table = table
        self.quad_tol = table.quad_tol
        self.consts = constants_for(d)
        self.workers = workers
        kappa, zeta = self.consts.kappa, self.consts.zeta
        self.cell_measure = grid.h**d
        self.diag = 2.0 * kappa * table.I_self + zeta * self.cell_measure
        self.offdiag_scale = -2.0 * kappa
        self.n = grid.n_active
        self._mask = np.asarray(grid.mask)
        self._flat = grid.active
        # circulant embedding: G at offsets -(n-1)..(n-1) per axis
        self._shape = tuple(scipy.fft.next_fast_len(2 * n - 1, real=True) for n in grid.dims)
        kern = np.zeros(self._shape)
        idx = [np.arange(n) for n in grid.dims]
        sub = table.values[np.ix_(*idx)]
        for signs in np.ndindex(*(2,) * d):
            sl = []
            src = []
            for j, s in enumerate(signs):
                n = grid.dims[j]
                if s == 0:
                    sl.append(slice(0, n))
                    src.append(slice(0, n))
                else:
                    if n < 2:
                        sl.append(slice(0, 0))
                        src.append(slice(0, 0))
                        continue
                    # negative offsets -1..-(n-1) sit at the end of the axis
                    sl.append(slice(self._shape[j] - (n - 1), self._shape[j]))
                    src.append(slice(n - 1, 0, -1))
            kern[tuple(sl)] = sub[tuple(src)]
        kern[(0,) * d] = 0.0
        self._kernel_hat = scipy.fft.rfftn(kern, workers=workers)

    # -- basic products -------------------------------------------------------

    def _embed(self, v):
        full = np.zeros(self.grid.dims, dtype=v.dtype)
        full.reshape(-1)[self._flat] = v
        return full

    def convolve(self, v: np.ndarray) -> np.ndarray:
        """(G~ * v) restricted to active cells, G~ = G with G~(0) = 0."""
        v = np.asarray(v)
        if np.iscomplexobj(v):
            return self.convolve(v.real) + 1j * self.convolve(v.imag)
        full = self._embed(v.astype(float, copy=False))
        f = scipy.fft.rfftn(full, s=self._shape, workers=self.workers)
        out = scipy.fft.irfftn(f * self._kernel_hat, s=self._shape, workers=self.workers)
        out = out[tuple(slice(0, n) for n in self.grid.dims)]
        return out.reshape(-1)[self._flat]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """A v for a coefficient vector indexed by active cells."""
        v = np.asarray(v)
        if v.shape != (self.n,):
            raise UsageError(f"vector of length {self.n} expected, got shape {v.shape}")
        return self.diag * v + self.offdiag_scale * self.convolve(v)

    def apply_scaled(self, v: np.ndarray) -> np.ndarray:
        """(A / h^d) v, the operator in the orthonormal cell basis."""
        return self.matvec(v) / self.cell_measure

    def rayleigh(self, v: np.ndarray) -> float:
        """Rayleigh quotient <v, A v> / (h^d <v, v>) (Hermitian for complex v)."""
        v = np.asarray(v)
        num = np.vdot(v, self.matvec(v)).real
        return float(num / (self.cell_measure * np.vdot(v, v).real))

    # -- dense oracle ---------------------------------------------------------

    def dense(self) -> np.ndarray:
        """Explicit A from table lookups (independent of the FFT path)."""
        idx = np.array(np.nonzero(self._mask)).T
        diff = np.abs(idx[:, None, :] - idx[None, :, :])
        G = self.table.values[tuple(diff[..., j] for j in range(self.grid.d))]
        A = self.offdiag_scale * G
        np.fill_diagonal(A, self.diag)
        return A

    # -- bounds ---------------------------------------------------------------

    def gershgorin_lower(self) -> float:
        """min_a (A_aa - sum_{b != a} |A_ab|) / h^d."""
        rows = self.convolve(np.ones(self.n))
        return float((self.diag - abs(self.offdiag_scale) * rows.max()) / self.cell_measure)

    def gershgorin_upper(self) -> float:
        rows = self.convolve(np.ones(self.n))
        return float((self.diag + abs(self.offdiag_scale) * rows.max()) / self.cell_measure)
