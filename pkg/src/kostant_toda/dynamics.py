"""Lattice flow: coefficient ODE, Lax form, and the RK4 trajectory object.

The flow integrated here is

    a_n' = b_n - b_{n-1}
    b_n' = b_n (a_{n+1} - a_n) + c_n - c_{n-1}
    c_n' = c_n (a_{n+2} - a_n)

with b_0 = 0 and all coefficients beyond the truncation treated as absent.
Written on the dense operator this is exactly J' = [J, J_lower], so the
truncated flow is an honest Lax pair and the spectrum of J is conserved.

Alongside the bands, every trajectory carries three scalar quadratures
q1 = int a_1, q2 = int a_2 and q3 = int exp(q2 - q1), which assemble the
upper triangular normalization N(t) used by the closed-form resolvent.
Optionally, per-z 2x2 quadrature blocks X_z for that closed form are
integrated jointly on the same grid (see resolvent.closed_form_resolvent).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import backends
from .core import LatticeState, commutator

__all__ = [
    "CNearZeroError",
    "CorruptionSpec",
    "IntegratorConfig",
    "Trajectory",
    "grid_central_diff",
    "integrate",
    "kostant_rhs",
    "lax_rhs",
]

_CORRUPTION_MODES = {
    "freeze-b": 1,
    "scale-c-rhs": 2,
    "drop-commutator-term": 3,
}


class CNearZeroError(RuntimeError):
    """Raised when some |c_n| falls below the configured floor.

    The c band must stay away from zero for the block partition to remain
    invertible; the integrator refuses to continue past that point.
    """

    def __init__(self, t: float, step: int, c_min: float, c_floor: float):
        self.t = t
        self.step = step
        self.c_min = c_min
        self.c_floor = c_floor
        super().__init__(
            f"min |c| = {c_min:.3e} fell below floor {c_floor:.3e} "
            f"at t = {t:.6g} (step {step})"
        )


@dataclass(frozen=True)
class CorruptionSpec:
    """Deliberate defect injected into the flow (negative controls).

    kind: 'freeze-b' scales b' by (1 - magnitude), 'scale-c-rhs' scales c'
    by (1 + magnitude), 'drop-commutator-term' removes magnitude * (c_n -
    c_{n-1}) from b_n'. magnitude must be positive.
    """

    kind: str
    magnitude: float = 1.0

    def __post_init__(self):
        if self.kind not in _CORRUPTION_MODES:
            raise ValueError(
                f"unknown corruption kind {self.kind!r}; "
                f"expected one of {sorted(_CORRUPTION_MODES)}"
            )
        if not self.magnitude > 0:
            raise ValueError("corruption magnitude must be > 0")

    @property
    def mode(self) -> int:
        return _CORRUPTION_MODES[self.kind]


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 configuration; t_end must sit on the step grid."""

    t_end: float = 1.0
    h: float = 1e-3
    c_floor: float = 1e-12

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if not self.c_floor >= 0:
            raise ValueError("c_floor must be >= 0")
        n = round(self.t_end / self.h)
        if abs(n * self.h - self.t_end) > 1e-9 * max(1.0, abs(self.t_end)):
            raise ValueError(
                f"t_end={self.t_end} is not an integer multiple of h={self.h}"
            )

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.h)


def kostant_rhs(state: LatticeState):
    """Time derivatives (a', b', c') of the coefficient arrays."""
    a, b, c = state.a, state.b, state.c
    m = state.m
    da = np.empty(m, dtype=np.complex128)
    da[0] = b[0]
    da[1 : m - 1] = b[1:] - b[:-1]
    da[m - 1] = -b[m - 2]
    db = b * (a[1:] - a[:-1])
    db[: m - 2] += c
    db[1:] -= c
    dc = c * (a[2:] - a[:-2])
    return da, db, dc


def lax_rhs(J: np.ndarray) -> np.ndarray:
    """Dense right hand side [J, J_lower] of the Lax form."""
    return commutator(J, np.tril(J, -1))


class Trajectory:
    """Sampled solution on the uniform grid t0 + k h, k = 0..n_steps.

    samples holds the packed rows described in backends; band and
    quadrature accessors return views into it.
    """

    def __init__(self, samples, m, h, t0=0.0, zs=None, corruption=None):
        self.samples = samples
        self.m = m
        self.h = h
        self.t0 = t0
        self.zs = np.empty(0, dtype=np.complex128) if zs is None else zs
        self.corruption = corruption
        self.ts = t0 + h * np.arange(samples.shape[0])

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def a(self) -> np.ndarray:
        return self.samples[:, : self.m]

    @property
    def b(self) -> np.ndarray:
        return self.samples[:, self.m : 2 * self.m - 1]

    @property
    def c(self) -> np.ndarray:
        return self.samples[:, 2 * self.m - 1 : 3 * self.m - 3]

    @property
    def q(self) -> np.ndarray:
        return self.samples[:, 3 * self.m - 3 : 3 * self.m]

    def x_blocks(self, iz: int) -> np.ndarray:
        """Per-sample 2x2 quadrature blocks for requested z index iz."""
        if not 0 <= iz < self.zs.size:
            raise IndexError(f"no resolvent quadrature at index {iz}")
        base = 3 * self.m + 4 * iz
        return self.samples[:, base : base + 4].reshape(-1, 2, 2)

    def index_of(self, t: float) -> int:
        """Grid index of time t; t must lie on the grid."""
        i = int(round((t - self.t0) / self.h))
        if not 0 <= i < self.n_samples or abs(self.t0 + i * self.h - t) > 1e-9 * max(
            1.0, abs(t)
        ):
            raise ValueError(f"t={t} is not on the integration grid")
        return i

    def norm_bounds(self) -> np.ndarray:
        """norm_bound of the operator at every sample (float array)."""
        m = self.m
        rows = np.abs(self.a) + 1.0
        rows[:, 1:] += np.abs(self.b)
        rows[:, 2:] += np.abs(self.c)
        return np.max(rows, axis=1)

    def state_at(self, i: int) -> LatticeState:
        m = self.m
        row = self.samples[i]
        return LatticeState(
            row[:m].copy(),
            row[m : 2 * m - 1].copy(),
            row[2 * m - 1 : 3 * m - 3].copy(),
            t=float(self.ts[i]),
        )

    def to_csv(self, path_or_buf) -> None:
        """Write t, Re/Im of every band entry and quadrature, one row per sample."""
        m = self.m
        cols = ["t"]
        for name, count in (("a", m), ("b", m - 1), ("c", m - 2)):
            for n in range(1, count + 1):
                cols += [f"{name}{n}_re", f"{name}{n}_im"]
        for n in (1, 2, 3):
            cols += [f"q{n}_re", f"q{n}_im"]

        def write(buf):
            buf.write(",".join(cols) + "\n")
            band = self.samples[:, : 3 * m]
            for k in range(self.n_samples):
                vals = [f"{self.ts[k]:.17g}"]
                for v in band[k]:
                    vals.append(f"{v.real:.17g}")
                    vals.append(f"{v.imag:.17g}")
                buf.write(",".join(vals) + "\n")

        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w", newline="\n") as f:
                write(f)
        else:
            write(path_or_buf)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def integrate(
    state: LatticeState,
    cfg: IntegratorConfig,
    corruption: CorruptionSpec | None = None,
    resolvent_zs=None,
    x0_blocks=None,
) -> Trajectory:
    """Run fixed-step RK4 from state.t over [t, t + t_end].

    resolvent_zs / x0_blocks attach per-z quadrature blocks with the given
    initial 2x2 values; they are integrated jointly so that every RK4 stage
    sees stage-consistent band values. Raises CNearZeroError if any |c_n|
    reaches the configured floor.
    """
    c_min0 = float(np.min(np.abs(state.c)))
    if c_min0 < cfg.c_floor:
        raise CNearZeroError(state.t, 0, c_min0, cfg.c_floor)

    zs = None
    if resolvent_zs is not None:
        zs = np.ascontiguousarray(resolvent_zs, dtype=np.complex128)
        x0_blocks = np.asarray(x0_blocks, dtype=np.complex128)
        if x0_blocks.shape != (zs.size, 2, 2):
            raise ValueError(
                f"x0_blocks must have shape ({zs.size}, 2, 2), got {x0_blocks.shape}"
            )

    y0 = backends.pack_state(state.a, state.b, state.c, (0.0, 0.0, 0.0), x0_blocks)
    mode, mag = (corruption.mode, corruption.magnitude) if corruption else (0, 0.0)
    samples, status = backends.rk4_trajectory(
        y0, state.m, cfg.n_steps, cfg.h, state.t, zs, cfg.c_floor, mode, mag
    )
    if status:
        m = state.m
        c_min = float(np.min(np.abs(samples[status, 2 * m - 1 : 3 * m - 3])))
        raise CNearZeroError(state.t + status * cfg.h, status, c_min, cfg.c_floor)
    return Trajectory(
        samples,
        state.m,
        cfg.h,
        t0=state.t,
        zs=zs,
        corruption=corruption.kind if corruption else None,
    )


def grid_central_diff(values: np.ndarray, i: int, h: float, halfwidth: int = 2):
    """Central difference along axis 0 at index i with delta = halfwidth * h.

    The default halfwidth 2 gives delta = 2h, keeping the stencil on the
    stored grid. Truncation error is delta^2/6 times the third derivative.
    """
    if i - halfwidth < 0 or i + halfwidth >= values.shape[0]:
        raise ValueError(
            f"central difference stencil [{i - halfwidth}, {i + halfwidth}] "
            f"leaves the grid (n={values.shape[0]})"
        )
    delta = halfwidth * h
    return (values[i + halfwidth] - values[i - halfwidth]) / (2.0 * delta)
