"""Integration kernels: numba-jitted hot loop with a pure numpy twin.

The only hot path in the package is fixed-step RK4 over the packed lattice
state, so that loop exists twice: `_rk4_numba` (compiled, default) and
`_rk4_numpy` (vectorized fallback). Selection order:

  1. environment variable KOSTANT_TODA_BACKEND = "numba" | "numpy"
     (read once at import; "auto"/unset picks numba when importable),
  2. `set_backend(...)` at runtime (tests and benchmarks use this).

Packed state layout, length 3m + 4*nz complex entries:

  y[0:m]            a, diagonal coefficients
  y[m:2m-1]         b, first subdiagonal
  y[2m-1:3m-3]      c, second subdiagonal
  y[3m-3:3m]        q1, q2, q3 quadrature states
                    (q1' = a_1, q2' = a_2, q3' = exp(q2 - q1))
  y[3m+4k:3m+4k+4]  2x2 block X_k row-major, one per requested z:
                    X_k' = -exp(-z_k t) * C0(t)^{-1} N(t)

The quadratures feed the closed-form resolvent: N(t) is the upper
triangular matrix with entries exp(q1), exp(q1)*q3 / 0, exp(q2).

Corruption modes (negative controls for the verification harness):
  0 none, 1 scale b' by (1-mag), 2 scale c' by (1+mag),
  3 remove mag*(c_n - c_{n-1}) from b_n'.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-free installs
    numba = None
    HAS_NUMBA = False

_ENV_VAR = "KOSTANT_TODA_BACKEND"

__all__ = [
    "HAS_NUMBA",
    "active_backend",
    "pack_state",
    "rk4_trajectory",
    "set_backend",
    "unpack_bands",
]


def _resolve(choice: str) -> str:
    choice = (choice or "auto").strip().lower()
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(
            f"{_ENV_VAR} must be 'numba', 'numpy' or 'auto', got {choice!r}"
        )
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError(f"{_ENV_VAR}=numba requested but numba is not importable")
    return choice


_ACTIVE = _resolve(os.environ.get(_ENV_VAR, "auto"))


def active_backend() -> str:
    return _ACTIVE


def set_backend(choice: str) -> str:
    """Override the backend at runtime; returns the resolved name."""
    global _ACTIVE
    _ACTIVE = _resolve(choice)
    return _ACTIVE


def pack_state(a, b, c, q=(0.0, 0.0, 0.0), x_blocks=None) -> np.ndarray:
    parts = [a, b, c, q]
    if x_blocks is not None:
        parts.append(np.asarray(x_blocks, dtype=np.complex128).ravel())
    return np.concatenate([np.asarray(p, dtype=np.complex128).ravel() for p in parts])


def unpack_bands(y: np.ndarray, m: int):
    """Views (a, b, c, q) of one packed row; X blocks are y[3m:]."""
    return (
        y[:m],
        y[m : 2 * m - 1],
        y[2 * m - 1 : 3 * m - 3],
        y[3 * m - 3 : 3 * m],
    )


# ----------------------------------------------------------------------
# pure numpy path


def _rhs_numpy(t, y, dy, m, zs, mode, mag):
    a = y[:m]
    b = y[m : 2 * m - 1]
    c = y[2 * m - 1 : 3 * m - 3]
    da = dy[:m]
    db = dy[m : 2 * m - 1]
    dc = dy[2 * m - 1 : 3 * m - 3]

    da[0] = b[0]
    da[1 : m - 1] = b[1:] - b[:-1]
    da[m - 1] = -b[m - 2]

    db[:] = b * (a[1:] - a[:-1])
    db[: m - 2] += c
    db[1:] -= c

    dc[:] = c * (a[2:] - a[:-2])

    if mode == 1:
        db *= 1.0 - mag
    elif mode == 2:
        dc *= 1.0 + mag
    elif mode == 3:
        db[: m - 2] -= mag * c
        db[1:] += mag * c

    q1 = y[3 * m - 3]
    q2 = y[3 * m - 2]
    q3 = y[3 * m - 1]
    dy[3 * m - 3] = a[0]
    dy[3 * m - 2] = a[1]
    dy[3 * m - 1] = np.exp(q2 - q1)

    if zs.size:
        e1 = np.exp(q1)
        e2 = np.exp(q2)
        a1 = a[0]
        cn = np.array(
            [e1, e1 * q3, a1 * e1, a1 * e1 * q3 + e2], dtype=np.complex128
        )
        w = -np.exp(-zs * t)
        dy[3 * m :] = (w[:, None] * cn[None, :]).ravel()


def _rk4_numpy(y0, m, n_steps, h, t0, zs, c_floor, mode, mag):
    L = y0.size
    out = np.empty((n_steps + 1, L), dtype=np.complex128)
    out[0] = y0
    y = y0.copy()
    k1 = np.empty(L, dtype=np.complex128)
    k2 = np.empty(L, dtype=np.complex128)
    k3 = np.empty(L, dtype=np.complex128)
    k4 = np.empty(L, dtype=np.complex128)
    for k in range(n_steps):
        t = t0 + k * h
        _rhs_numpy(t, y, k1, m, zs, mode, mag)
        _rhs_numpy(t + 0.5 * h, y + (0.5 * h) * k1, k2, m, zs, mode, mag)
        _rhs_numpy(t + 0.5 * h, y + (0.5 * h) * k2, k3, m, zs, mode, mag)
        _rhs_numpy(t + h, y + h * k3, k4, m, zs, mode, mag)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
        cmin = np.min(np.abs(y[2 * m - 1 : 3 * m - 3]))
        if cmin < c_floor:
            return out, k + 1
    return out, 0


# ----------------------------------------------------------------------
# numba path: same formulas written as scalar loops

if HAS_NUMBA:

    @numba.njit(cache=True)
    def _rhs_numba(t, y, dy, m, zs, mode, mag):  # pragma: no cover - jitted
        for n in range(m):
            bn = y[m + n] if n < m - 1 else 0.0 + 0.0j
            bn1 = y[m + n - 1] if n >= 1 else 0.0 + 0.0j
            dy[n] = bn - bn1
        for n in range(m - 1):
            cn = y[2 * m - 1 + n] if n < m - 2 else 0.0 + 0.0j
            cn1 = y[2 * m - 1 + n - 1] if n >= 1 else 0.0 + 0.0j
            term = y[m + n] * (y[n + 1] - y[n]) + cn - cn1
            if mode == 1:
                term *= 1.0 - mag
            elif mode == 3:
                term -= mag * (cn - cn1)
            dy[m + n] = term
        for n in range(m - 2):
            term = y[2 * m - 1 + n] * (y[n + 2] - y[n])
            if mode == 2:
                term *= 1.0 + mag
            dy[2 * m - 1 + n] = term

        q1 = y[3 * m - 3]
        q2 = y[3 * m - 2]
        q3 = y[3 * m - 1]
        dy[3 * m - 3] = y[0]
        dy[3 * m - 2] = y[1]
        dy[3 * m - 1] = np.exp(q2 - q1)

        if zs.size:
            e1 = np.exp(q1)
            e2 = np.exp(q2)
            a1 = y[0]
            c0 = e1
            c1 = e1 * q3
            c2 = a1 * e1
            c3 = a1 * e1 * q3 + e2
            for iz in range(zs.size):
                w = -np.exp(-zs[iz] * t)
                base = 3 * m + 4 * iz
                dy[base] = w * c0
                dy[base + 1] = w * c1
                dy[base + 2] = w * c2
                dy[base + 3] = w * c3

    @numba.njit(cache=True)
    def _rk4_numba(y0, m, n_steps, h, t0, zs, c_floor, mode, mag):  # pragma: no cover
        L = y0.size
        out = np.empty((n_steps + 1, L), dtype=np.complex128)
        for i in range(L):
            out[0, i] = y0[i]
        y = y0.copy()
        ytmp = np.empty(L, dtype=np.complex128)
        k1 = np.empty(L, dtype=np.complex128)
        k2 = np.empty(L, dtype=np.complex128)
        k3 = np.empty(L, dtype=np.complex128)
        k4 = np.empty(L, dtype=np.complex128)
        for k in range(n_steps):
            t = t0 + k * h
            _rhs_numba(t, y, k1, m, zs, mode, mag)
            for i in range(L):
                ytmp[i] = y[i] + (0.5 * h) * k1[i]
            _rhs_numba(t + 0.5 * h, ytmp, k2, m, zs, mode, mag)
            for i in range(L):
                ytmp[i] = y[i] + (0.5 * h) * k2[i]
            _rhs_numba(t + 0.5 * h, ytmp, k3, m, zs, mode, mag)
            for i in range(L):
                ytmp[i] = y[i] + h * k3[i]
            _rhs_numba(t + h, ytmp, k4, m, zs, mode, mag)
            for i in range(L):
                y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                out[k + 1, i] = y[i]
            cmin = np.inf
            for n in range(m - 2):
                v = abs(y[2 * m - 1 + n])
                if v < cmin:
                    cmin = v
            if cmin < c_floor:
                return out, k + 1
        return out, 0


def rk4_trajectory(y0, m, n_steps, h, t0=0.0, zs=None, c_floor=1e-12, mode=0, mag=0.0):
    """Integrate the packed state; returns (samples, status).

    samples has shape (n_steps + 1, len(y0)); status is 0 on success or the
    1-based step index at which min |c| fell below c_floor (rows past that
    index are unspecified).
    """
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    if zs is None:
        zs = np.empty(0, dtype=np.complex128)
    zs = np.ascontiguousarray(zs, dtype=np.complex128)
    if y0.size != 3 * m + 4 * zs.size:
        raise ValueError(
            f"packed state length {y0.size} != 3*m + 4*nz = {3 * m + 4 * zs.size}"
        )
    if _ACTIVE == "numba":
        return _rk4_numba(
            y0, m, int(n_steps), float(h), float(t0), zs, float(c_floor),
            int(mode), float(mag),
        )
    return _rk4_numpy(
        y0, m, int(n_steps), float(h), float(t0), zs, float(c_floor),
        int(mode), float(mag),
    )
