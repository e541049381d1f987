"""Galerkin discretisation and eigensolver for the logarithmic Laplacian."""

from .grid import GridDiscretization, build_grid
from .kernel import KernelTable, build_kernel_table, load_table, save_table
from .lanczos import LanczosResult, lanczos_smallest
from .operator import LogLaplacianOperator
from .spectrum import PlaneWaveRayleigh, Spectrum, eigensolve, plane_wave_rayleigh, symmetry_sectors

__all__ = [
    "GridDiscretization",
    "KernelTable",
    "LanczosResult",
    "LogLaplacianOperator",
    "PlaneWaveRayleigh",
    "Spectrum",
    "build_grid",
    "build_kernel_table",
    "eigensolve",
    "lanczos_smallest",
    "load_table",
    "plane_wave_rayleigh",
    "save_table",
    "symmetry_sectors",
]
