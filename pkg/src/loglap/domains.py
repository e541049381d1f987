"""Domains, indicator Fourier transforms and frequency-space quadrature.

Three domain kinds are supported:

* :class:`Ball` centred at the origin, any dimension,
* :class:`Box` centred at the origin, any dimension (quadrature for d <= 2),
* :class:`CellMask`, a union of axis-aligned squares of side ``h`` in the plane.

The frequency integrals

    I_W(Omega) = (1 / (|Omega| (2 pi)^d)) int W(|rho|) |1_Omega^(rho)|^2 d rho

with W = 1 (Plancherel), W = log r (the log-form of the indicator) and
W = (1 + r)^tau log(1 + r) (the domain constant C_{Omega,tau}) share one
engine.  Beyond a cutoff ``R`` the angular mass of |1_Omega^|^2 on the sphere
of radius r follows the perimeter law

    int_{|rho| = r} |1_Omega^|^2 dS  ~  2^d pi^(d - 1) Per(Omega) / r^2,

which is integrated analytically against W.  The reported error is the
change of the full estimate (quadrature plus tail) when ``R`` is halved, so
it includes the error of the tail model itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.fft

from .errors import AccuracyError, DomainError, UsageError
from .specfun import bessel_j, constants_for

# square-lattice Epstein zeta Z(s) = sum' |k|^(-2s): Z'(0)/2 and Z(-1/2)
_LATTICE_LOG_CONST = -1.3105329259594562
_LATTICE_ABS_CONST = -0.22882431037721895

_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Ball of the given radius centred at the origin."""

    d: int
    radius: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")
        if not self.radius > 0 or math.isinf(self.radius):
            raise DomainError(f"radius must be positive and finite, got {self.radius!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def measure(self) -> float:
        return self.radius**self.d * constants_for(self.d).ball_volume

    @property
    def perimeter(self) -> float:
        return constants_for(self.d).sphere_area * self.radius ** (self.d - 1)

    @property
    def length_scale(self) -> float:
        return 2.0 * self.radius

    def describe(self) -> dict:
        return {"kind": "ball", "d": self.d, "radius": self.radius}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with side ``lengths`` centred at the origin."""

    d: int
    lengths: tuple

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")
        if len(lengths) != self.d:
            raise UsageError(f"Box of dimension {self.d} needs {self.d} lengths, got {len(lengths)}")
        if not all(x > 0 and math.isfinite(x) for x in lengths):
            raise DomainError(f"box lengths must be positive and finite, got {lengths}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "lengths", lengths)

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def perimeter(self) -> float:
        # (d-1)-dimensional boundary measure; two points for an interval
        m = self.measure
        return 2.0 * sum(m / L for L in self.lengths)

    @property
    def length_scale(self) -> float:
        return min(self.lengths)

    def describe(self) -> dict:
        return {"kind": "box", "d": self.d, "lengths": list(self.lengths)}


@dataclass(frozen=True, eq=False)
class CellMask:
    """Union of closed h x h squares in the plane.

    ``mask[iy, ix]`` marks the cell ``origin + h * [ix, ix + 1] x [iy, iy + 1]``;
    row 0 is the bottom row.
    """

    h: float
    mask: np.ndarray
    origin: tuple = (0.0, 0.0)
    d: int = field(default=2, init=False)

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        if m.ndim != 2:
            raise UsageError("CellMask needs a 2-D mask")
        if not m.any():
            raise DomainError("CellMask needs at least one active cell")
        if not self.h > 0 or math.isinf(self.h):
            raise DomainError(f"cell size must be positive, got {self.h!r}")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        if len(self.origin) != 2:
            raise UsageError("CellMask origin must be a 2-vector")

    def __eq__(self, other):
        if not isinstance(other, CellMask):
            return NotImplemented
        return (
            self.h == other.h
            and self.origin == other.origin
            and self.mask.shape == other.mask.shape
            and bool(np.array_equal(self.mask, other.mask))
        )

    def __hash__(self):
        return hash((self.h, self.origin, self.mask.shape, self.mask.tobytes()))

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.h * self.h * self.count

    @property
    def perimeter(self) -> float:
        p = np.pad(self.mask, 1).astype(np.int8)
        edges = np.abs(np.diff(p, axis=0)).sum() + np.abs(np.diff(p, axis=1)).sum()
        return float(edges) * self.h

    @property
    def length_scale(self) -> float:
        return math.sqrt(self.measure)

    def cell_centers(self) -> np.ndarray:
        iy, ix = np.nonzero(self.mask)
        x = self.origin[0] + self.h * (ix + 0.5)
        y = self.origin[1] + self.h * (iy + 0.5)
        return np.column_stack([x, y])

    def refine(self, factor: int) -> "CellMask":
        """Split every cell into ``factor**2`` sub-cells (same set)."""
        factor = int(factor)
        if factor < 1:
            raise UsageError("refinement factor must be a positive integer")
        m = np.kron(self.mask, np.ones((factor, factor), dtype=bool))
        return CellMask(self.h / factor, m, self.origin)

    def describe(self) -> dict:
        return {
            "kind": "mask",
            "d": 2,
            "h": self.h,
            "origin": list(self.origin),
            "rows": ["".join("1" if c else "0" for c in row) for row in self.mask],
        }


Domain = Union[Ball, Box, CellMask]


def domain_from_description(desc: dict) -> Domain:
    """Inverse of ``domain.describe()``."""
    kind = desc.get("kind")
    if kind == "ball":
        return Ball(desc["d"], desc["radius"])
    if kind == "box":
        return Box(desc["d"], tuple(desc["lengths"]))
    if kind == "mask":
        rows = [[c == "1" for c in row] for row in desc["rows"]]
        return CellMask(desc["h"], np.array(rows, dtype=bool), tuple(desc.get("origin", (0.0, 0.0))))
    raise UsageError(f"unknown domain kind {kind!r}")


def read_mask(path) -> CellMask:
    """Read a mask file: a line ``h <value>`` followed by rows of 0/1.

    The first row listed is the bottom row (y index 0), columns run left to
    right; the origin is the lower-left corner at (0, 0).
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise UsageError(f"{path}: empty mask file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "h":
        raise UsageError(f"{path}: first line must be 'h <value>'")
    try:
        h = float(head[1])
    except ValueError:
        raise UsageError(f"{path}: bad cell size {head[1]!r}") from None
    rows = lines[1:]
    if not rows:
        raise UsageError(f"{path}: no mask rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width or set(row) - {"0", "1"}:
            raise UsageError(f"{path}: row {i + 1} is not a 0/1 string of length {width}")
    mask = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
    return CellMask(h, mask)


def write_mask(path, domain: CellMask) -> None:
    with open(path, "w") as fh:
        fh.write(f"h {domain.h!r}\n")
        for row in domain.mask:
            fh.write("".join("1" if c else "0" for c in row) + "\n")


def scale(domain: Domain, R: float) -> Domain:
    """Return the dilated domain R * Omega."""
    R = float(R)
    if not R > 0 or math.isinf(R):
        raise DomainError(f"scale factor must be positive, got {R!r}")
    if isinstance(domain, Ball):
        return Ball(domain.d, domain.radius * R)
    if isinstance(domain, Box):
        return Box(domain.d, tuple(L * R for L in domain.lengths))
    if isinstance(domain, CellMask):
        return CellMask(domain.h * R, domain.mask, tuple(R * x for x in domain.origin))
    raise UsageError(f"unsupported domain {domain!r}")


# ---------------------------------------------------------------------------
# Indicator Fourier transforms
# ---------------------------------------------------------------------------


def ball_ft_radial(d: int, radius: float, r):
    """|rho| -> 1_B^(rho) for the ball of the given radius (real valued)."""
    r = np.asarray(r, dtype=float)
    nu = 0.5 * d
    x = radius * r
    vol = radius**d * constants_for(d).ball_volume
    out = np.full(x.shape, vol)
    nz = x > 0
    if np.any(nz):
        xs = x[nz]
        out[nz] = radius**d * (2.0 * math.pi) ** nu * xs ** (-nu) * bessel_j(nu, xs)
    return out


def _sinc_factor(rho, L):
    # int_{-L/2}^{L/2} e^{-i t rho} dt = L sinc(rho L / 2 pi)
    return L * np.sinc(rho * L / (2.0 * math.pi))


def indicator_ft(domain: Domain, rho):
    """Fourier transform int_Omega exp(-i x . rho) dx.

    ``rho`` has shape (d,) or (..., d); the result is complex with the
    leading shape of ``rho``.
    """
    rho = np.asarray(rho, dtype=float)
    d = domain.d
    if rho.shape == () and d == 1:
        rho = rho[None]
    if rho.shape[-1] != d:
        raise UsageError(f"frequency must have trailing dimension {d}, got shape {rho.shape}")
    if isinstance(domain, Ball):
        r = np.sqrt(np.sum(rho * rho, axis=-1))
        val = ball_ft_radial(d, domain.radius, r).astype(complex)
    elif isinstance(domain, Box):
        val = np.ones(rho.shape[:-1])
        for j, L in enumerate(domain.lengths):
            val = val * _sinc_factor(rho[..., j], L)
        val = val.astype(complex)
    elif isinstance(domain, CellMask):
        h = domain.h
        centers = domain.cell_centers()
        flat = rho.reshape(-1, 2)
        out = np.empty(flat.shape[0], dtype=complex)
        cell = _sinc_factor(flat[:, 0], h) * _sinc_factor(flat[:, 1], h)
        step = max(1, 2_000_000 // max(len(centers), 1))
        for s in range(0, flat.shape[0], step):
            phase = flat[s : s + step] @ centers.T
            out[s : s + step] = np.exp(-1j * phase).sum(axis=1)
        val = (out * cell).reshape(rho.shape[:-1])
    else:
        raise UsageError(f"unsupported domain {domain!r}")
    return val[()] if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# Frequency weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Weight:
    """Radial weight W(r) together with its behaviour at r = 0."""

    name: str
    func: Callable
    singular: str = "none"  # "none", "log" or "abs" (W ~ r near 0)
    growth: float = 0.0  # W(r) = O(r^growth log r) at infinity

    def __call__(self, r):
        return self.func(r)


def _log_weight(r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(r)


WEIGHT_ONE = Weight("one", lambda r: np.ones_like(np.asarray(r, dtype=float)))
WEIGHT_LOG = Weight("log", _log_weight, "log")


def ctau_weight(tau: float) -> Weight:
    return Weight(f"ctau{tau!r}", lambda r: (1.0 + r) ** tau * np.log1p(r), "abs", float(tau))


@dataclass(frozen=True)
class FrequencyEstimate:
    """Normalised frequency integral with error estimate.

    ``tail`` is the perimeter-law contribution beyond ``cutoff_radius``.
    """

    value: float
    abs_error: float
    cutoff_radius: float
    tail: float


@dataclass(frozen=True)
class CTauEstimate:
    value: float
    abs_error: float
    tau: float
    cutoff_radius: float


def _log_rule(a: float, b: float):
    """Nodes for int_a^b g(u) du, geometric in u."""
    n = max(1, int(math.ceil(math.log(b / a))))
    nodes, wts = _GL16
    edges = np.linspace(0.0, math.log(b / a), n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    sn = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    sw = (half[:, None] * wts[None, :]).ravel()
    u = a * np.exp(sn)
    return u, sw * u


def _tail_law(weight: Weight, a: float, b: float = math.inf, taper: Optional[Callable] = None, corr: float = 0.0):
    """int_a^b taper(u) W(u) (1 + corr / u^2) / u^2 du."""
    if math.isinf(b):
        u, w = _semi_infinite_rule(a, weight.growth)
    else:
        u, w = _log_rule(a, b)
    vals = weight(u) * (1.0 + corr / (u * u)) / (u * u)
    if taper is not None:
        vals = vals * taper(u)
    return float(np.dot(w, vals))


def _perimeter_constant(d: int) -> float:
    return 2.0**d * math.pi ** (d - 1)


# ---------------------------------------------------------------------------
# Quadrature engines
# ---------------------------------------------------------------------------


def _gauss_panels(a: float, b: float, count: int, rule=_GL16):
    nodes, wts = rule
    edges = np.linspace(a, b, count + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * wts[None, :]).ravel()
    return x, w


def _graded_nodes(b: float, levels: int = 22, q: float = 0.15, rule=_GL16):
    """Nodes on (0, b] refined geometrically toward 0."""
    nodes, wts = rule
    xs, ws = [], []
    hi = b
    for _ in range(levels):
        lo = hi * q
        xs.append(0.5 * (hi + lo) + 0.5 * (hi - lo) * nodes)
        ws.append(0.5 * (hi - lo) * wts)
        hi = lo
    return np.concatenate(xs), np.concatenate(ws)


def _ball_engine(domain: Ball, weight: Weight, rel_tol: float, max_doublings: int = 10):
    d, a = domain.d, domain.radius
    sphere = constants_for(d).sphere_area
    nu = 0.5 * d
    mu = 4.0 * nu * nu
    # J_nu^2 averages to (1 + (mu - 1) / (8 x^2)) / (pi x)
    tail_pref = sphere * (2.0 * math.pi) ** d * a ** (d - 1) / math.pi
    tail_corr = (mu - 1.0) / (8.0 * a * a)
    norm = domain.measure * (2.0 * math.pi) ** d

    def integrand(r):
        f = ball_ft_radial(d, a, r)
        return sphere * r ** (d - 1) * weight(r) * f * f

    width = math.pi / a
    xg, wg = _graded_nodes(width)
    inner = float(np.dot(wg, integrand(xg)))
    R = 32.0 * width
    x, w = _gauss_panels(width, R, 31)
    body = inner + float(np.dot(w, integrand(x)))
    prev = None
    for _ in range(max_doublings + 1):
        tail = tail_pref * _tail_law(weight, R, corr=tail_corr)
        # the oscillating remainder of J^2 integrates to O(W(R) / R^2)
        osc = 2.0 * tail_pref * abs(float(weight(np.array([R]))[0])) / (a * R * R)
        value = (body + tail) / norm
        if prev is not None:
            err = abs(value - prev) + osc / norm
            if err <= rel_tol * max(abs(value), 1.0 if weight.singular == "log" else 0.0):
                return FrequencyEstimate(value, err, R, tail / norm)
        prev = value
        panels = int(round((R / width)))
        x, w = _gauss_panels(R, 2.0 * R, panels)
        body += float(np.dot(w, integrand(x)))
        R *= 2.0
    raise AccuracyError(
        f"frequency integral did not reach rel_tol={rel_tol} by R={R}",
        FrequencyEstimate(value, err, R, tail / norm),
    )


def _semi_infinite_rule(a: float, growth: float):
    """Nodes for int_a^inf g(u) du when g(u) u decays like u^(growth - 1)."""
    decay = max(1.0 - growth, 1e-3)
    s_max = 10.0 + 50.0 / decay
    edges = np.concatenate([np.arange(0.0, 8.0, 1.0), np.arange(8.0, s_max + 2.0, 2.0)])
    nodes, wts = _GL16
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    sn = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    sw = (half[:, None] * wts[None, :]).ravel()
    u = a * np.exp(sn)
    return u, sw * u


def _box_engine(domain: Box, weight: Weight, rel_tol: float, max_points: float = 6e7):
    d = domain.d
    if d > 2:
        raise UsageError("box quadrature is implemented for d <= 2")
    if d == 1:
        return _ball_engine(Ball(1, 0.5 * domain.lengths[0]), weight, rel_tol)
    L = domain.lengths
    norm = domain.measure * (2.0 * math.pi) ** 2
    period = [2.0 * math.pi / Lj for Lj in L]

    def f(x, j):
        v = _sinc_factor(x, L[j])
        return v * v

    def block(x1, w1, x2, w2):
        total = 0.0
        g2 = w2 * f(x2, 1)
        step = max(1, int(4_000_000 // max(len(x2), 1)))
        for s in range(0, len(x1), step):
            a1 = x1[s : s + step]
            r = np.hypot(a1[:, None], x2[None, :])
            total += float((w1[s : s + step] * f(a1, 0)) @ (weight(r) @ g2))
        return total

    # exact inner range per axis; beyond it f_j is replaced by its mean 2 / t^2
    T = [64.0 * p for p in period]
    inner_exact = [_gauss_panels(0.0, T[j], 64) for j in range(2)]

    def line_integral(j, rho, upper):
        # int_0^upper f_j(t) W(sqrt(rho^2 + t^2)) dt, upper may be inf
        x, w = inner_exact[j]
        if upper < T[j]:
            x, w = _gauss_panels(0.0, upper, int(round(upper / period[j])))
        total = float(np.dot(w, weight(np.hypot(rho, x)) * f(x, j)))
        if upper > T[j]:
            if math.isinf(upper):
                u, wu = _semi_infinite_rule(T[j], weight.growth)
            else:
                u, wu = _log_rule(T[j], upper)
            total += float(np.dot(wu, 2.0 * weight(np.hypot(rho, u)) / (u * u)))
        return total

    def strip_tail(j, Rj, upper_other):
        # 2 int_{Rj}^inf (2 / rho^2) * 2 line_integral(other, rho, upper_other) d rho
        u, wu = _semi_infinite_rule(Rj, weight.growth)
        other = 1 - j
        vals = np.array([line_integral(other, r, upper_other) for r in u])
        return 2.0 * float(np.dot(wu, 2.0 * 2.0 * vals / (u * u)))

    # aligned rectangle [0, R1] x [0, R2]
    base = 32
    P = [base * max(1, int(round(L[j] / min(L)))) for j in range(2)]
    b = [period[j] for j in range(2)]

    nodes, wts = _GL16
    corner = 0.0
    thc = math.atan2(b[1], b[0])
    for t0, t1, cap in ((0.0, thc, lambda t: b[0] / np.cos(t)), (thc, 0.5 * math.pi, lambda t: b[1] / np.sin(t))):
        th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * nodes
        wt = 0.5 * (t1 - t0) * wts
        for t, wth in zip(th, wt):
            rr, wr = _graded_nodes(float(cap(t)), levels=12, q=0.25)
            vals = rr * weight(rr) * f(rr * math.cos(t), 0) * f(rr * math.sin(t), 1)
            corner += wth * float(np.dot(wr, vals))

    R = [P[j] * b[j] for j in range(2)]
    xa, wa = _gauss_panels(0.0, b[0], 1)
    xb, wb = _gauss_panels(0.0, b[1], 1)
    x1r, w1r = _gauss_panels(b[0], R[0], P[0] - 1)
    x2r, w2r = _gauss_panels(b[1], R[1], P[1] - 1)
    body = corner + block(xa, wa, x2r, w2r) + block(x1r, w1r, xb, wb) + block(x1r, w1r, x2r, w2r)
    body *= 4.0
    prev = None
    err = math.inf
    while True:
        # |rho_1| > R1 (all rho_2) and |rho_2| > R2 with |rho_1| <= R1
        tail = strip_tail(0, R[0], math.inf) + strip_tail(1, R[1], R[0])
        value = (body + tail) / norm
        if prev is not None:
            err = abs(value - prev)
            if err <= rel_tol * max(abs(value), 1.0 if weight.singular == "log" else 0.0):
                return FrequencyEstimate(value, err, min(R), tail / norm)
        prev = value
        if 4.0 * P[0] * P[1] * 256 > max_points:
            raise AccuracyError(
                f"frequency integral did not reach rel_tol={rel_tol} by R={min(R)}",
                FrequencyEstimate(value, err, min(R), tail / norm),
            )
        # increment [0, 2R1] x [0, 2R2] minus [0, R1] x [0, R2]
        x1o, w1o = _gauss_panels(R[0], 2 * R[0], P[0])
        x2o, w2o = _gauss_panels(R[1], 2 * R[1], P[1])
        x1i, w1i = _gauss_panels(0.0, R[0], P[0])
        x2i, w2i = _gauss_panels(0.0, R[1], P[1])
        inc = block(x1o, w1o, x2i, w2i) + block(x1i, w1i, x2o, w2o) + block(x1o, w1o, x2o, w2o)
        body += 4.0 * inc
        R = [2.0 * r for r in R]
        P = [2 * p for p in P]


def _bump_taper(t):
    """Smooth step: 1 for t <= 1/2, 0 for t >= 1."""
    t = np.asarray(t, dtype=float)
    s = np.clip(2.0 * t - 1.0, 0.0, 1.0)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    with np.errstate(over="ignore"):
        out[inside] = 1.0 / (1.0 + np.exp(1.0 / (1.0 - si) - 1.0 / si))
    out[s <= 0] = 1.0
    return out


def _mask_lattice(domain: CellMask, weight: Weight, R: float, N: int, F2: np.ndarray):
    """Tapered lattice sums at spacing D and 2D (even sub-lattice)."""
    h = domain.h
    D = 2.0 * math.pi / (N * h)
    K = int(math.ceil(R / D))
    k = np.arange(-K, K + 1)
    sinc2 = np.sinc(k / N) ** 2
    kmod = np.mod(k, N)
    f0 = domain.measure**2
    tot = {1: 0.0, 2: 0.0}
    rows = max(1, int(3_000_000 // len(k)))
    even_cols = (k % 2) == 0
    for s in range(0, K + 1, rows):
        k1 = np.arange(s, min(s + rows, K + 1))
        blockF = F2[np.mod(k1, N)][:, kmod] * (np.sinc(k1 / N) ** 2)[:, None] * sinc2[None, :]
        f = h**4 * blockF
        r = D * np.hypot(k1[:, None], k[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            g = weight(r) * _bump_taper(r / R) * f
        # k1 = 0 row: keep k2 > 0 and double it; k1 > 0 rows count twice
        mult = np.where(k1 == 0, 0.0, 2.0)[:, None] * np.ones_like(r)
        if k1[0] == 0:
            mult[0, k > 0] = 2.0
        g = np.where(mult > 0, g, 0.0)
        tot[1] += float(np.sum(mult * g))
        ev = (k1 % 2) == 0
        if np.any(ev):
            tot[2] += float(np.sum((mult * g)[ev][:, even_cols]))
    out = []
    for lev, spacing in ((1, D), (2, 2.0 * D)):
        s = spacing * spacing * tot[lev]
        if weight.singular == "log":
            s += spacing * spacing * f0 * (math.log(spacing) + _LATTICE_LOG_CONST)
        elif weight.singular == "abs":
            s -= spacing**3 * f0 * _LATTICE_ABS_CONST
        else:
            s += spacing * spacing * f0 * float(weight(np.array([0.0]))[0])
        out.append(s)
    return out[0], out[1]


def _mask_engine(domain: CellMask, weight: Weight, rel_tol: float, max_points: float = 1.2e8):
    ny, nx = domain.mask.shape
    N = 1 << int(math.ceil(math.log2(16 * max(nx, ny, 4))))
    F = scipy.fft.fft2(domain.mask.astype(float), s=(N, N))
    # axis 0 of F is the y frequency; the weight is radial so order is irrelevant
    F2 = (F.real**2 + F.imag**2)
    norm = domain.measure * (2.0 * math.pi) ** 2
    cper = _perimeter_constant(2) * domain.perimeter
    R = 64.0 * math.pi / domain.length_scale
    prev = None
    err = math.inf
    D = 2.0 * math.pi / (N * domain.h)
    while True:
        s1, s2 = _mask_lattice(domain, weight, R, N, F2)
        rich = s1 + (s1 - s2) / 15.0
        tail = cper * (
            _tail_law(weight, 0.5 * R, R, taper=lambda u: 1.0 - _bump_taper(u / R)) + _tail_law(weight, R)
        )
        value = (rich + tail) / norm
        alias = abs(s1 - s2) / 15.0 / norm
        if prev is not None:
            err = abs(value - prev) + alias
            if err <= rel_tol * max(abs(value), 1.0 if weight.singular == "log" else 0.0):
                return FrequencyEstimate(value, err, R, tail / norm)
        prev = value
        R *= 2.0
        if (2.0 * R / D) ** 2 > max_points:
            raise AccuracyError(
                f"frequency integral did not reach rel_tol={rel_tol} by R={R / 2}",
                FrequencyEstimate(value, err, R / 2, tail / norm),
            )


def frequency_integral(domain: Domain, weight: Weight, rel_tol: float = 1e-6) -> FrequencyEstimate:
    """(1/(|Omega| (2 pi)^d)) int W(|rho|) |1_Omega^(rho)|^2 d rho with error estimate."""
    if not rel_tol > 0:
        raise DomainError("rel_tol must be positive")
    if isinstance(domain, Ball):
        est = _ball_engine(domain, weight, rel_tol)
    elif isinstance(domain, Box):
        est = _box_engine(domain, weight, rel_tol)
    elif isinstance(domain, CellMask):
        est = _mask_engine(domain, weight, rel_tol)
    else:
        raise UsageError(f"unsupported domain {domain!r}")
    return FrequencyEstimate(float(est.value), float(est.abs_error), float(est.cutoff_radius), float(est.tail))


def plancherel_check(domain: Domain, rel_tol: float = 1e-8) -> FrequencyEstimate:
    """(1/(2 pi)^d) int |1_Omega^|^2 normalised by |Omega|; should equal 1."""
    return frequency_integral(domain, WEIGHT_ONE, rel_tol)


def c_tau(domain: Domain, tau: float, rel_tol: float = 1e-4) -> CTauEstimate:
    """Domain constant C_{Omega,tau} = (1/(|Omega| (2 pi)^d)) int (1+|rho|)^tau log(1+|rho|) |1_Omega^|^2."""
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau!r}")
    try:
        est = frequency_integral(domain, ctau_weight(tau), rel_tol)
    except AccuracyError as exc:
        e = exc.estimate
        raise AccuracyError(str(exc), CTauEstimate(e.value, e.abs_error, tau, e.cutoff_radius)) from None
    return CTauEstimate(max(est.value, 0.0), est.abs_error, float(tau), est.cutoff_radius)


def rayleigh_indicator(domain: Domain, rel_tol: float = 1e-5) -> float:
    """Log-form Rayleigh quotient (1_Omega, 1_Omega)_log / |Omega|.

    This is an upper bound for lambda_1(Omega) up to quadrature error.  The
    tolerance is relative to max(|value|, 1).
    """
    return frequency_integral(domain, WEIGHT_LOG, rel_tol).value


def rayleigh_indicator_estimate(domain: Domain, rel_tol: float = 1e-5) -> FrequencyEstimate:
    return frequency_integral(domain, WEIGHT_LOG, rel_tol)


def c_tau_monte_carlo(domain: Domain, tau: float, samples: int = 10**6, seed: int = 0, batch: int = 10**6):
    """Importance-sampled estimate of C_{Omega,tau} for balls and boxes.

    Radii are drawn from a Lomax law with shape 1 - tau (finite variance
    against the r^(tau - 2) decay of the radial integrand).  Returns
    ``(value, standard_error)``.
    """
    if isinstance(domain, CellMask):
        raise UsageError("Monte Carlo mode supports balls and boxes only")
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau!r}")
    d = domain.d
    rng = np.random.default_rng(seed)
    alpha = 1.0 - tau
    sc = 2.0 / domain.length_scale
    sphere = constants_for(d).sphere_area
    total = 0.0
    total2 = 0.0
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        u = rng.random(n)
        r = sc * ((1.0 - u) ** (-1.0 / alpha) - 1.0)
        pr = alpha / sc * (1.0 + r / sc) ** (-1.0 - alpha)
        direction = rng.standard_normal((n, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        ft = indicator_ft(domain, r[:, None] * direction)
        val = (1.0 + r) ** tau * np.log1p(r) * np.abs(ft) ** 2 * sphere * r ** (d - 1) / pr
        total += float(val.sum())
        total2 += float((val * val).sum())
        done += n
    norm = domain.measure * (2.0 * math.pi) ** d
    mean = total / samples
    var = max(total2 / samples - mean * mean, 0.0)
    return mean / norm, math.sqrt(var / samples) / norm
