"""Cell-pair integrals of the kernel |x - y|^(-d) on a uniform grid.

For cells a, b of side h at integer offset o = b - a (o != 0),

    G(o) = int_a int_b |x - y|^(-d) dx dy = h^d G_1(o),
    G_1(o) = int_{[-1,1]^d} prod_j (1 - |u_j|) |o + u|^(-d) du,

where the tent prod_j (1 - |u_j|) is the autocorrelation of the unit cell.
The diagonal needs the truncated self term

    I_self = int_cell int_{y not in cell, |x - y| <= 1} |x - y|^(-d) dy dx
           = int_{|z| <= 1} |z|^(-d) (h^d - Lambda_h(z)) dz,

with Lambda_h(z) = prod_j (h - |z_j|)_+.
"""

from __future__ import annotations

import hashlib
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import AccuracyError, DomainError, UsageError
from ..specfun import CATALAN

_MAGIC = b"LLKT"
_VERSION = 1


def _gl01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# Self term
# ---------------------------------------------------------------------------


def self_term_closed_form(d: int, h: float) -> float:
    """Closed form of I_self for h sqrt(d) < 1."""
    if d == 1:
        return 2.0 * h * (1.0 - math.log(h))
    if d == 2:
        L2 = math.log(2.0)
        return h * h * (2.0 * math.pi * (1.0 - math.log(h)) + 2.0 * L2 - 2.0 * math.pi * L2 + 4.0 * CATALAN)
    raise UsageError("kernel tables are implemented for d in {1, 2}")


def self_term_quadrature(d: int, h: float, n: int = 48) -> float:
    """I_self by direct quadrature of int_{|z|<=1} |z|^-d (h^d - Lambda_h(z)) dz."""
    x, w = _gl01(n)
    if d == 1:
        # |z| <= h contributes (h - (h - |z|)) / |z| = 1, beyond that h / |z|
        z = h * x
        near = h * float(np.dot(w, (h - (h - z)) / z))
        z = h ** (1.0 - x)  # geometric nodes on [h, 1], dz = -log(h) z dx
        far = -math.log(h) * float(np.dot(w, (h / z) * z))
        return 2.0 * (near + far)
    if d == 2:
        # eight-fold symmetry: theta in [0, pi/4]; Lambda_h vanishes beyond h / cos(theta)
        theta = 0.25 * math.pi * x
        wt = 0.25 * math.pi * w
        total = 0.0
        for th, wth in zip(theta, wt):
            c, s = math.cos(th), math.sin(th)
            rc = h / c
            rr = rc * x
            lam = (h - rr * c) * (h - rr * s)
            near = rc * float(np.dot(w, (h * h - lam) / rr))
            far = -h * h * math.log(rc)
            total += wth * (near + far)
        return 8.0 * total
    raise UsageError("kernel tables are implemented for d in {1, 2}")


# ---------------------------------------------------------------------------
# Off-diagonal integrals G_1
# ---------------------------------------------------------------------------


def _g1_1d(offsets: np.ndarray, n: int) -> np.ndarray:
    o = np.asarray(offsets, dtype=float)
    out = np.empty_like(o)
    one = o == 1.0
    out[one] = 2.0 * math.log(2.0)
    rest = ~one
    if np.any(rest):
        t, w = _gl01(n)
        orr = o[rest][:, None]
        vals = (1.0 - t) * (1.0 / (orr + t) + 1.0 / (orr - t))
        out[rest] = vals @ w
    return out


def _g1_2d_smooth(o1: np.ndarray, o2: np.ndarray, n: int) -> np.ndarray:
    """Tensor Gauss-Legendre over the four quadrants; needs |o|_inf >= 2."""
    t, w = _gl01(n)
    wt = (1.0 - t) * w  # tent weight folded in
    total = np.zeros(o1.shape, dtype=float)
    step = max(1, 2_000_000 // (n * n))
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            for a in range(0, len(o1), step):
                z1 = o1[a : a + step, None] + s1 * t[None, :]
                z2 = o2[a : a + step, None] + s2 * t[None, :]
                r2 = z1[:, :, None] ** 2 + z2[:, None, :] ** 2
                total[a : a + step] += np.einsum("i,kij,j->k", wt, 1.0 / r2, wt)
    return total


def _corner_polar(a1, b1, a2, b2, n=32):
    """int_{[0,1]^2} (a1 + b1 w1)(a2 + b2 w2) / |w|^2 dw with a1 a2 = 0."""
    x, wx = _gl01(n)
    total = 0.0
    for lo, hi, cap in ((0.0, 0.25 * math.pi, np.cos), (0.25 * math.pi, 0.5 * math.pi, np.sin)):
        th = lo + (hi - lo) * x
        c, s = np.cos(th), np.sin(th)
        rmax = 1.0 / cap(th)
        alpha = a1 * b2 * s + a2 * b1 * c
        beta = b1 * b2 * c * s
        total += (hi - lo) * float(np.dot(wx, alpha * rmax + 0.5 * beta * rmax * rmax))
    return total


def _g1_2d_touching(o1: int, o2: int, n: int = 24) -> float:
    """G_1 for |o|_inf = 1: corner singularity at z = 0 treated in polar form."""
    t, w = _gl01(n)
    total = 0.0
    for s1 in (1, -1):
        for s2 in (1, -1):
            lo1, hi1 = sorted((o1, o1 + s1))
            lo2, hi2 = sorted((o2, o2 + s2))
            if lo1 <= 0 <= hi1 and lo2 <= 0 <= hi2:
                # z = o + u with z_j = sig_j w_j, w in [0,1]^2
                sig1 = 1 if hi1 > 0 else -1
                sig2 = 1 if hi2 > 0 else -1
                p = [1.0 - abs(-o1), 1.0 - abs(sig1 - o1)]
                q = [1.0 - abs(-o2), 1.0 - abs(sig2 - o2)]
                total += _corner_polar(p[0], p[1] - p[0], q[0], q[1] - q[0])
            else:
                u1 = s1 * t
                u2 = s2 * t
                z1 = o1 + u1
                z2 = o2 + u2
                f = (1.0 - t)[:, None] * (1.0 - t)[None, :] / (z1[:, None] ** 2 + z2[None, :] ** 2)
                total += float(w @ f @ w)
    return total


def g1_values(d: int, offsets) -> np.ndarray:
    """G_1 at integer offsets (array of shape (m,) for d=1, (m, 2) for d=2)."""
    offsets = np.abs(np.asarray(offsets, dtype=np.int64))
    if d == 1:
        o = offsets.reshape(-1)
        if np.any(o == 0):
            raise UsageError("G is defined for non-zero offsets only")
        return _g1_1d(o, 16)
    if d == 2:
        o = offsets.reshape(-1, 2)
        out = np.empty(len(o))
        norm = o.max(axis=1)
        if np.any(norm == 0):
            raise UsageError("G is defined for non-zero offsets only")
        for i in np.flatnonzero(norm == 1):
            out[i] = _g1_2d_touching(int(o[i, 0]), int(o[i, 1]))
        for lo, hi, n in ((2, 8, 16), (8, 32, 8), (32, None, 4)):
            sel = (norm >= lo) & ((norm < hi) if hi is not None else True)
            if np.any(sel):
                out[sel] = _g1_2d_smooth(o[sel, 0].astype(float), o[sel, 1].astype(float), n)
        return out
    raise UsageError("kernel tables are implemented for d in {1, 2}")


# ---------------------------------------------------------------------------
# Table
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelTable:
    """G at non-negative offsets for a grid of cell side ``h``.

    ``values[|o_1|, ..., |o_d|]`` holds G(o) (zero at o = 0), so the table
    covers every offset with |o_j| <= max_offset.
    """

    d: int
    h: float
    max_offset: int
    quad_tol: float
    I_self: float
    values: np.ndarray

    def G(self, offset) -> float:
        o = tuple(abs(int(x)) for x in np.atleast_1d(offset))
        if len(o) != self.d:
            raise UsageError(f"offset must have {self.d} components")
        if not any(o):
            raise UsageError("G is defined for non-zero offsets only")
        if max(o) > self.max_offset:
            raise UsageError(f"offset {o} beyond the table range {self.max_offset}")
        return float(self.values[o])

    def __getitem__(self, offset):
        return self.G(offset)


def _check_accuracy(d, offsets, coarse, fine, tol, label):
    rel = np.abs(fine - coarse) / np.abs(fine)
    bad = np.flatnonzero(rel > tol)
    if bad.size:
        raise AccuracyError(
            f"kernel quadrature for {label} offset {tuple(np.atleast_1d(offsets[bad[0]]))} "
            f"misses quad_tol={tol} (estimated rel. error {rel[bad[0]]:.2e})",
            float(fine[bad[0]]),
        )


def _compute_g1_grid(d: int, max_offset: int, quad_tol: float) -> np.ndarray:
    M = max_offset
    if d == 1:
        o = np.arange(1, M + 1)
        vals = _g1_1d(o, 16)
        if M >= 2:
            _check_accuracy(1, o[1:], _g1_1d(o[1:], 10), vals[1:], quad_tol, "1-D")
        out = np.zeros(M + 1)
        out[1:] = vals
        return out
    # d = 2: compute for o1 >= o2 >= 0 and mirror
    i, j = np.tril_indices(M + 1)
    keep = i > 0
    o = np.column_stack([i[keep], j[keep]])
    vals = g1_values(2, o)
    norm = o.max(axis=1)
    # accuracy: touching offsets by rule refinement, smooth bands by a coarser rule
    for a in np.flatnonzero(norm == 1):
        coarse = _g1_2d_touching(int(o[a, 0]), int(o[a, 1]), n=16)
        _check_accuracy(2, o[a : a + 1], np.array([coarse]), vals[a : a + 1], quad_tol, "touching")
    for lo, hi, n in ((2, 8, 12), (8, 32, 6), (32, None, 3)):
        sel = np.flatnonzero((norm >= lo) & ((norm < hi) if hi is not None else True))
        if sel.size:
            # the coarse rule of the outermost band is only sampled at its inner edge
            probe = sel if hi is not None else sel[norm[sel] < lo + 4]
            coarse = _g1_2d_smooth(o[probe, 0].astype(float), o[probe, 1].astype(float), n)
            _check_accuracy(2, o[probe], coarse, vals[probe], quad_tol, "separated")
    out = np.zeros((M + 1, M + 1))
    out[o[:, 0], o[:, 1]] = vals
    out[o[:, 1], o[:, 0]] = vals
    return out


def _cache_path(cache_dir, d, h, max_offset, quad_tol) -> Path:
    key = struct.pack("<IIdd", d, max_offset, h, quad_tol)
    return Path(cache_dir) / f"llkt_{hashlib.sha1(key).hexdigest()[:16]}.bin"


def save_table(table: KernelTable, path) -> None:
    """Write the little-endian binary layout (magic, version, parameters, data)."""
    d, M = table.d, table.max_offset
    grid = np.array(np.meshgrid(*[np.arange(M + 1)] * d, indexing="ij")).reshape(d, -1).T
    vals = table.values.reshape(-1)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, d, M))
        fh.write(struct.pack("<ddQd", table.h, table.quad_tol, len(vals), table.I_self))
        fh.write(grid.astype("<f8").tobytes())
        fh.write(vals.astype("<f8").tobytes())


def load_table(path) -> KernelTable:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise UsageError(f"{path}: not a kernel table file")
    version, d, M = struct.unpack_from("<III", data, 4)
    if version != _VERSION:
        raise UsageError(f"{path}: unsupported kernel table version {version}")
    h, quad_tol, n, I_self = struct.unpack_from("<ddQd", data, 16)
    off = 16 + 32
    grid = np.frombuffer(data, dtype="<f8", count=n * d, offset=off).reshape(n, d)
    vals = np.frombuffer(data, dtype="<f8", count=n, offset=off + 8 * n * d)
    values = np.zeros((M + 1,) * d)
    values[tuple(grid.astype(np.int64).T)] = vals
    return KernelTable(int(d), h, int(M), quad_tol, I_self, values)


def build_kernel_table(
    d: int,
    h: float,
    max_offset: int,
    quad_tol: float = 1e-10,
    cache_dir: Optional[os.PathLike] = None,
) -> KernelTable:
    """Tabulate G(o) for |o_j| <= max_offset and the self term I_self.

    The self term uses its closed form, cross-checked at build time against
    direct quadrature to ``quad_tol``.  Set ``cache_dir`` (or the environment
    variable ``LOGLAP_CACHE_DIR``) to reuse tables across runs.
    """
    if d not in (1, 2):
        raise UsageError("kernel tables are implemented for d in {1, 2}")
    h = float(h)
    if not h > 0 or h * math.sqrt(d) >= 1.0:
        raise DomainError(f"need 0 < h sqrt(d) < 1, got h={h}")
    max_offset = int(max_offset)
    if max_offset < 1:
        raise UsageError("max_offset must be at least 1")
    if not quad_tol > 0:
        raise UsageError("quad_tol must be positive")
    cache_dir = cache_dir or os.environ.get("LOGLAP_CACHE_DIR")
    path = None
    if cache_dir:
        path = _cache_path(cache_dir, d, h, max_offset, quad_tol)
        if path.exists():
            return load_table(path)

    I_self = self_term_closed_form(d, h)
    check = self_term_quadrature(d, h)
    if abs(check - I_self) > quad_tol * abs(I_self):
        raise AccuracyError(f"self term check failed: {I_self} vs {check}", I_self)
    values = h**d * _compute_g1_grid(d, max_offset, quad_tol)
    table = KernelTable(d, h, max_offset, float(quad_tol), I_self, values)
    if path is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        save_table(table, tmp)
        os.replace(tmp, path)
    return table
