"""Heat semigroup acting on grid measures, and suprema of weighted extensions.

The extension at time t is the Gaussian convolution
``(4 pi t)^{-d/2} sum_m w_m exp(-|x - y_m|^2 / 4t)``; the kernel module
truncates the sum at radius ``R(t) = 8 sqrt(t ln(1/eps_tail))`` with
``eps_tail = 1e-12``, an absolute error below ``eps_tail * |mu|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .measures import GridMeasure

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TGrid:
    """Geometric grid of heat times covering [t_min, t_max]."""

    t_min: float
    t_max: float
    nodes_per_decade: int
    nodes: np.ndarray

    @classmethod
    def build(cls, t_min: float, t_max: float, nodes_per_decade: int = 32) -> "TGrid":
        if not (0 < t_min < t_max):
            raise ValueError("need 0 < t_min < t_max")
        decades = math.log10(t_max / t_min)
        n = max(2, int(math.ceil(decades * nodes_per_decade)) + 1)
        return cls(t_min=float(t_min), t_max=float(t_max),
                   nodes_per_decade=int(nodes_per_decade),
                   nodes=np.geomspace(t_min, t_max, n))

    @classmethod
    def for_measure(cls, mu: GridMeasure, nodes_per_decade: int = 32,
                    span_factor: float = 4.0, reach: float = 0.0) -> "TGrid":
        """Default window (h/4)^2 .. (span_factor * (diam + reach))^2.

        ``reach`` extends the top of the window when far-field evaluation
        points matter (the sup in t is attained near t ~ |x|^2 out there).
        A degenerate support (single mass) falls back to diam = h.
        """
        span = max(mu.support_diameter(), mu.h) + reach
        return cls.build((mu.h / 4.0) ** 2, (span_factor * span) ** 2,
                         nodes_per_decade)


@dataclass(frozen=True)
class HeatField:
    """Heat extension values on sample points across a TGrid."""

    points: np.ndarray          # (n, d)
    tgrid: TGrid
    values: np.ndarray          # (n, n_t)


def heat_extension(mu: GridMeasure, t: float, points) -> np.ndarray:
    """e^{t Delta} mu at the given points."""
    if t <= 0:
        raise ValueError("heat time must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    vals = _kernels.heat_values(pts, mu.points(), mu.weights, np.array([t]))
    return vals[:, 0]


def heat_field(mu: GridMeasure, tgrid: TGrid, points) -> HeatField:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    vals = _kernels.heat_values(pts, mu.points(), mu.weights, tgrid.nodes)
    return HeatField(points=pts, tgrid=tgrid, values=vals)


@dataclass(frozen=True)
class SupField:
    """Per-point sup over t of t^{gamma/2} |e^{t Delta} mu| with argmax times."""

    points: np.ndarray
    values: np.ndarray
    t_at: np.ndarray
    gamma: float
    tgrid: TGrid


def _golden_refine(mu, pts, gamma, t_lo, t_hi, iters=14):
    """Vectorized golden-section maximization of t^{g/2}|E(x,t)| per point."""
    a = np.log(t_lo)
    b = np.log(t_hi)
    y = mu.points()
    w = mu.weights
    d = mu.d
    diff = pts[:, None, :] - y[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)

    def g(logt):
        t = np.exp(logt)
        pref = (4.0 * np.pi * t) ** (-d / 2.0)
        conv = np.einsum("ij,j->i", np.exp(-d2 / (4.0 * t[:, None])), w)
        return t ** (gamma / 2.0) * np.abs(conv * pref)

    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc = g(c)
    fe = g(e)
    for _ in range(iters):
        left = fc >= fe            # keep [a, e], drop (e, b]
        b = np.where(left, e, b)
        a = np.where(left, a, c)
        c = b - GOLDEN * (b - a)
        e = a + GOLDEN * (b - a)
        fc = g(c)
        fe = g(e)
    tm = np.exp(0.5 * (a + b))
    return tm, g(np.log(tm))


def heat_sup_field(mu: GridMeasure, gamma: float, points, tgrid: TGrid,
                   refine: bool = True) -> SupField:
    """Grid max of t^{gamma/2}|e^{t Delta} mu| with one local refinement.

    The reported value is a lower bound for the true supremum; the grid
    resolution lives in ``tgrid``.
    """
    if not (0 <= gamma):
        raise ValueError("gamma must be nonnegative")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if mu.n_masses == 0:
        z = np.zeros(len(pts))
        return SupField(points=pts, values=z, t_at=np.full(len(pts), tgrid.t_min),
                        gamma=gamma, tgrid=tgrid)
    field = _kernels.heat_values(pts, mu.points(), mu.weights, tgrid.nodes)
    weighted = tgrid.nodes[None, :] ** (gamma / 2.0) * np.abs(field)
    j = np.argmax(weighted, axis=1)
    vals = weighted[np.arange(len(pts)), j]
    t_at = tgrid.nodes[j]
    if refine and len(tgrid.nodes) >= 3:
        lo = tgrid.nodes[np.maximum(j - 1, 0)]
        hi = tgrid.nodes[np.minimum(j + 1, len(tgrid.nodes) - 1)]
        t_ref, v_ref = _golden_refine(mu, pts, gamma, lo, hi)
        better = v_ref > vals
        vals = np.where(better, v_ref, vals)
        t_at = np.where(better, t_ref, t_at)
    return SupField(points=pts, values=vals, t_at=t_at, gamma=gamma, tgrid=tgrid)


def mass_quadrature_grid(mu: GridMeasure, t: float, pad_sigmas: float = 10.0,
                         resolve: float | None = None):
    """Quadrature lattice for integrating heat extensions at time t.

    A lattice Riemann sum of a Gaussian is exact up to Poisson-summation
    aliasing ``2 exp(-4 pi^2 t / hq^2)``; spacing ``1.25 sqrt(t)`` keeps that
    near 1e-11, and the ``pad_sigmas`` margin keeps the truncated tail below
    ``erfc(pad/2)`` per axis.  Pass ``resolve`` (a finer time scale) when the
    sampled field feeds another convolution.
    """
    lo, hi = mu.bbox()
    st = math.sqrt(t)
    hq = 1.25 * math.sqrt(t if resolve is None else min(t, resolve))
    lo = lo - pad_sigmas * st
    hi = hi + pad_sigmas * st
    axes = [np.arange(lo[a], hi[a] + hq, hq) for a in range(mu.d)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts, hq

def mass_conservation_residual(mu: GridMeasure, t: float) -> float:
    """|grid-sum of e^{t Delta} mu * hq^d  -  mu(R^d)|."""
    pts, hq = mass_quadrature_grid(mu, t)
    vals = heat_extension(mu, t, pts)
    return abs(float(np.sum(vals)) * hq ** mu.d - mu.total_mass())
