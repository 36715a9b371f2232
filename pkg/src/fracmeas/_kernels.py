"""Hot numeric kernels: Gaussian heat sums and radial-profile convolutions.

Two interchangeable backends compute the same sums:

* a numba ``@njit(parallel=True)`` path with an early radius cutoff, used
  when numba is importable, and
* a pure-numpy chunked path, used when numba is missing or when the
  environment variable ``FRACMEAS_NO_NUMBA`` is set to a non-empty value.

The backend only changes floating-point summation order (differences are
at rounding level); all logic lives above these kernels.  ``benchmarks/
bench_kernels.py`` times both paths on a representative workload.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = bool(os.environ.get("FRACMEAS_NO_NUMBA"))

try:
    if _DISABLED:
        raise ImportError("numba disabled by FRACMEAS_NO_NUMBA")
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

# Profile kinds understood by the radial convolution kernel.
KIND_GAUSS = 0
KIND_BUMP = 1
KIND_TABLE = 2

_EMPTY = np.zeros(2, dtype=np.float64)


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _heat_values_numpy(x, y, w, t, pref, r2max):
    n = x.shape[0]
    nt = t.shape[0]
    out = np.zeros((n, nt))
    if y.shape[0] == 0 or n == 0:
        return out
    inv4t = 1.0 / (4.0 * t)
    chunk = max(1, int(4_000_000 // max(1, y.shape[0])))
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        diff = x[s:e, None, :] - y[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        for j in range(nt):
            # exp underflow (~e^-745) acts as the tail cutoff here
            out[s:e, j] = np.exp(-d2 * inv4t[j]) @ w
    out *= pref[None, :]
    return out


def _bump_profile(z2, amp):
    v = np.zeros_like(z2)
    inside = z2 < 1.0
    v[inside] = amp * np.exp(-1.0 / (1.0 - z2[inside]))
    return v


def _radial_conv_numpy(x, y, w, s, kind, amp, ascale, table, dr, rsup):
    n = x.shape[0]
    ns = s.shape[0]
    out = np.zeros((n, ns))
    if y.shape[0] == 0 or n == 0:
        return out
    sd = s ** (-x.shape[1])
    chunk = max(1, int(4_000_000 // max(1, y.shape[0])))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        diff = x[lo:hi, None, :] - y[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        for j in range(ns):
            z = r / s[j]
            if kind == KIND_GAUSS:
                vals = amp * np.exp(-0.25 * z * z)
                vals[z >= rsup] = 0.0
            elif kind == KIND_BUMP:
                vals = _bump_profile((z * ascale) ** 2, amp)
            else:
                idx = z / dr
                k = np.minimum(idx.astype(np.int64), table.shape[0] - 2)
                frac = idx - k
                vals = table[k] + frac * (table[k + 1] - table[k])
                vals[z >= rsup] = 0.0
            out[lo:hi, j] = (vals @ w) * sd[j]
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(parallel=True, cache=False)
    def _heat_values_numba(x, y, w, t, pref, r2max):
        n = x.shape[0]
        dim = x.shape[1]
        m = y.shape[0]
        nt = t.shape[0]
        out = np.zeros((n, nt))
        for i in prange(n):
            acc = np.zeros(nt)
            for q in range(m):
                r2 = 0.0
                for a in range(dim):
                    dd = x[i, a] - y[q, a]
                    r2 += dd * dd
                j0 = np.searchsorted(r2max, r2)
                for j in range(j0, nt):
                    acc[j] += w[q] * math.exp(-r2 / (4.0 * t[j]))
            for j in range(nt):
                out[i, j] = acc[j] * pref[j]
        return out

    @njit(parallel=True, cache=False)
    def _radial_conv_numba(x, y, w, s, kind, amp, ascale, table, dr, rsup):
        n = x.shape[0]
        dim = x.shape[1]
        m = y.shape[0]
        ns = s.shape[0]
        ntab = table.shape[0]
        out = np.zeros((n, ns))
        for i in prange(n):
            acc = np.zeros(ns)
            for q in range(m):
                r2 = 0.0
                for a in range(dim):
                    dd = x[i, a] - y[q, a]
                    r2 += dd * dd
                r = math.sqrt(r2)
                # profile vanishes for |x-y|/s >= rsup; s is ascending
                j0 = np.searchsorted(s, r / rsup)
                for j in range(j0, ns):
                    z = r / s[j]
                    if z >= rsup:
                        continue
                    if kind == 0:
                        v = amp * math.exp(-0.25 * z * z)
                    elif kind == 1:
                        z2 = (z * ascale) ** 2
                        if z2 >= 1.0:
                            continue
                        v = amp * math.exp(-1.0 / (1.0 - z2))
                    else:
                        idx = z / dr
                        k = int(idx)
                        if k > ntab - 2:
                            continue
                        frac = idx - k
                        v = table[k] + frac * (table[k + 1] - table[k])
                    acc[j] += w[q] * v
            for j in range(ns):
                out[i, j] = acc[j] * s[j] ** (-dim)
        return out

else:
    _heat_values_numba = None
    _radial_conv_numba = None


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------

def heat_values(x, y, w, t, tail_eps=1e-12):
    """Gaussian heat sums ``out[i,j] = (4 pi t_j)^{-d/2} sum_m w_m G(x_i - y_m; t_j)``.

    ``x``: (n, d) evaluation points; ``y``: (m, d) mass locations; ``w``: (m,)
    weights; ``t``: (nt,) strictly positive times, ascending.  The numba path
    skips pairs beyond the truncation radius ``R(t) = 8 sqrt(t ln(1/tail_eps))``
    (absolute error at most ``tail_eps**16 * |mu|`` per value).
    """
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    y = np.ascontiguousarray(np.atleast_2d(np.asarray(y, dtype=np.float64)))
    w = np.ascontiguousarray(np.asarray(w, dtype=np.float64))
    t = np.ascontiguousarray(np.asarray(t, dtype=np.float64))
    if np.any(t <= 0):
        raise ValueError("heat times must be positive")
    d = x.shape[1]
    pref = (4.0 * np.pi * t) ** (-d / 2.0)
    r2max = 64.0 * t * math.log(1.0 / tail_eps)
    if HAVE_NUMBA:
        return _heat_values_numba(x, y, w, t, pref, r2max)
    return _heat_values_numpy(x, y, w, t, pref, r2max)


def radial_conv_values(x, y, w, s, kind, amp=1.0, arg_scale=1.0,
                       table=None, table_dr=1.0, support_radius=1.0):
    """Profile convolutions ``out[i,j] = s_j^{-d} sum_m w_m phi(|x_i-y_m|/s_j)``.

    ``kind`` selects the radial profile phi: ``KIND_GAUSS`` is
    ``amp*exp(-z^2/4)``, ``KIND_BUMP`` is ``amp*exp(-1/(1-(z*arg_scale)^2))``
    inside the unit ball of ``z*arg_scale``, ``KIND_TABLE`` interpolates a
    uniform radial table linearly.  ``support_radius`` bounds the support of
    phi in z; values beyond it are treated as zero.
    """
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    y = np.ascontiguousarray(np.atleast_2d(np.asarray(y, dtype=np.float64)))
    w = np.ascontiguousarray(np.asarray(w, dtype=np.float64))
    s = np.ascontiguousarray(np.asarray(s, dtype=np.float64))
    if np.any(s <= 0):
        raise ValueError("dilation scales must be positive")
    tab = _EMPTY if table is None else np.ascontiguousarray(table, dtype=np.float64)
    if HAVE_NUMBA:
        return _radial_conv_numba(x, y, w, s, kind, float(amp), float(arg_scale),
                                  tab, float(table_dr), float(support_radius))
    return _radial_conv_numpy(x, y, w, s, kind, float(amp), float(arg_scale),
                              tab, float(table_dr), float(support_radius))


def warmup():
    """Trigger jit compilation on tiny inputs (no-op on the numpy path)."""
    x = np.zeros((2, 1))
    y = np.array([[0.0], [0.4]])
    w = np.array([1.0, -0.5])
    heat_values(x, y, w, np.array([0.1, 1.0]))
    radial_conv_values(x, y, w, np.array([0.5, 2.0]), KIND_GAUSS,
                       amp=1.0, support_radius=12.0)
    radial_conv_values(x, y, w, np.array([0.5, 2.0]), KIND_BUMP,
                       amp=1.0, arg_scale=1.0, support_radius=1.0)
    radial_conv_values(x, y, w, np.array([0.5, 2.0]), KIND_TABLE,
                       table=np.array([1.0, 0.5, 0.0]), table_dr=0.5,
                       support_radius=1.0)
