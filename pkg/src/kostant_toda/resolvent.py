"""Resolvent block, generating function, and the closed-form representation.

For |z| > ||J|| the (1,1) block of the resolvent of J expands as

    R(z) = sum_{n >= 0} (J^n)_11 / z^{n+1},

summed here with a certified geometric tail bound derived from the norm
bound rho: stopping after terms 0..K leaves at most
(rho/|z|)^{K+1} / (|z| - rho). All entry points enforce the safety margin
|z| >= 1.5 rho. The conjugated block F(z) = C0^{-1} R(z) C0 is the
generating function of the moment blocks.

Along the flow, R satisfies a first-order matrix ODE whose solution has
the closed form

    R(t, z) = exp(z t) C0(t) X(t, z) N(t)^{-1},

where N is the upper triangular matrix built from the trajectory
quadratures q1, q2, q3 and X is the per-z quadrature block integrated
jointly with the flow (see dynamics.integrate). `closed_form_resolvent`
assembles that product; on the true flow it reproduces the directly
computed resolvent to integrator accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    LatticeState,
    TruncationTooSmallError,
    b_block,
    c0_block,
    c0_block_inv,
    commutator,
    d_block,
    norm_bound,
)
from .dynamics import IntegratorConfig, Trajectory, integrate
from .moments import moments_from_j

__all__ = [
    "ResolventBlock",
    "ZTooSmallError",
    "closed_form_resolvent",
    "dense_resolvent_block",
    "generating_function",
    "generating_ode_residual",
    "integrate_with_closed_form",
    "neumann_terms_needed",
    "resolvent_block",
    "resolvent_ode_residual",
]

MARGIN = 1.5


class ZTooSmallError(ValueError):
    """|z| is inside the safety margin MARGIN * rho of the series bound."""


@dataclass(frozen=True)
class ResolventBlock:
    """Certified partial sum: value, term count, and geometric tail bound."""

    value: np.ndarray
    z: complex
    rho: float
    terms_used: int
    tail_bound: float


def _check_margin(z: complex, rho: float, where: str = "") -> None:
    if abs(z) < MARGIN * rho:
        raise ZTooSmallError(
            f"|z| = {abs(z):.6g} is below the safety margin "
            f"{MARGIN} * rho = {MARGIN * rho:.6g}{where}"
        )


def neumann_terms_needed(rho: float, z_abs: float, tol: float, cap: int = 100000) -> int:
    """Smallest K with (rho/z_abs)^{K+1} / (z_abs - rho) < tol."""
    if z_abs <= rho:
        raise ZTooSmallError(f"|z| = {z_abs:.6g} <= rho = {rho:.6g}")
    r = rho / z_abs
    bound = 1.0 / (z_abs - rho)
    K = -1
    while bound >= tol:
        K += 1
        bound *= r
        if K > cap:
            raise RuntimeError(f"series needs more than {cap} terms for tol={tol}")
    return max(K, 0)


def resolvent_block(
    state: LatticeState,
    z: complex,
    tol: float = 1e-10,
    require_locality: bool = False,
    terms: int | None = None,
) -> ResolventBlock:
    """Partial Neumann sum of the (1,1) resolvent block with tail certificate.

    terms pins the number of summed powers (K + 1 with exponents 0..K),
    which residual stencils use to keep the truncation error a smooth
    function of time; by default K is the smallest index certified by tol.
    require_locality additionally demands m >= K + 2 so the value agrees
    with every larger truncation.
    """
    rho = norm_bound(state)
    _check_margin(z, rho)
    K = terms - 1 if terms is not None else neumann_terms_needed(rho, abs(z), tol)
    if require_locality and state.m < K + 2:
        raise TruncationTooSmallError(
            f"K={K} summed powers need m >= {K + 2}, got m={state.m}"
        )
    J = state.dense()
    W = np.zeros((2, state.m), dtype=np.complex128)
    W[0, 0] = 1.0
    W[1, 1] = 1.0
    S = np.zeros((2, 2), dtype=np.complex128)
    zinv = 1.0 / z
    zp = zinv
    for _ in range(K + 1):
        S += W[:, :2] * zp
        W = W @ J
        zp *= zinv
    tail = (rho / abs(z)) ** (K + 1) / (abs(z) - rho)
    return ResolventBlock(S, z, rho, K + 1, float(tail))


def dense_resolvent_block(state: LatticeState, z: complex) -> np.ndarray:
    """(1,1) block of (zI - J)^{-1} by dense solve (reference oracle)."""
    m = state.m
    rhs = np.zeros((m, 2), dtype=np.complex128)
    rhs[0, 0] = 1.0
    rhs[1, 1] = 1.0
    sol = np.linalg.solve(z * np.eye(m, dtype=np.complex128) - state.dense(), rhs)
    return sol[:2, :]


def generating_function(
    state: LatticeState,
    z: complex,
    tol: float = 1e-10,
    terms: int | None = None,
) -> ResolventBlock:
    """F(z) = C0^{-1} R(z) C0, the moment generating block.

    The tail bound is the resolvent bound scaled by the condition factor
    (1 + |a_1|)^2 of the conjugation.
    """
    rb = resolvent_block(state, z, tol=tol, terms=terms)
    a1 = state.a[0]
    F = c0_block_inv(a1) @ rb.value @ c0_block(a1)
    kappa = (1.0 + abs(a1)) ** 2
    return ResolventBlock(F, z, rb.rho, rb.terms_used, rb.tail_bound * kappa)


def _stencil_terms(states, z: complex, tol: float) -> int:
    needed = 0
    for st in states:
        rho = norm_bound(st)
        _check_margin(z, rho, " along the stencil")
        needed = max(needed, neumann_terms_needed(rho, abs(z), tol))
    return needed + 1


def _resolvent_ode_residual_matrix(
    traj: Trajectory, z: complex, t: float, tol: float = 1e-12, halfwidth: int = 2
) -> np.ndarray:
    i = traj.index_of(t)
    st_lo = traj.state_at(i - halfwidth)
    st = traj.state_at(i)
    st_hi = traj.state_at(i + halfwidth)
    terms = _stencil_terms((st_lo, st, st_hi), z, tol)
    r_lo = resolvent_block(st_lo, z, terms=terms).value
    r = resolvent_block(st, z, terms=terms).value
    r_hi = resolvent_block(st_hi, z, terms=terms).value
    delta = halfwidth * traj.h
    dr = (r_hi - r_lo) / (2.0 * delta)
    eye = np.eye(2, dtype=np.complex128)
    rhs = r @ (z * eye - b_block(st, 1)) - eye + commutator(r, d_block(st, 0))
    return dr - rhs


def resolvent_ode_residual(
    traj: Trajectory, z: complex, t: float, tol: float = 1e-12, halfwidth: int = 2
) -> float:
    """Defect of R' = R (zI - B_1) - I + [R, (J_lower)_11] at time t."""
    res = _resolvent_ode_residual_matrix(traj, z, t, tol, halfwidth)
    return float(np.max(np.abs(res)))


def _generating_ode_residual_matrix(
    traj: Trajectory, zeta: complex, t: float, tol: float = 1e-12, halfwidth: int = 2
) -> np.ndarray:
    i = traj.index_of(t)
    st_lo = traj.state_at(i - halfwidth)
    st = traj.state_at(i)
    st_hi = traj.state_at(i + halfwidth)
    terms = _stencil_terms((st_lo, st, st_hi), zeta, tol)
    f_lo = generating_function(st_lo, zeta, terms=terms).value
    f = generating_function(st, zeta, terms=terms).value
    f_hi = generating_function(st_hi, zeta, terms=terms).value
    delta = halfwidth * traj.h
    df = (f_hi - f_lo) / (2.0 * delta)
    m1 = moments_from_j(st, 1).moments[1]
    eye = np.eye(2, dtype=np.complex128)
    rhs = f @ (zeta * eye - m1) - eye
    return df - rhs


def generating_ode_residual(
    traj: Trajectory, zeta: complex, t: float, tol: float = 1e-12, halfwidth: int = 2
) -> float:
    """Defect of F' = F (zeta I - moment_1) - I at time t."""
    res = _generating_ode_residual_matrix(traj, zeta, t, tol, halfwidth)
    return float(np.max(np.abs(res)))


def integrate_with_closed_form(
    state: LatticeState, cfg: IntegratorConfig, zs
) -> Trajectory:
    """Integrate the flow with per-z closed-form quadrature blocks attached.

    Initial blocks are X(0) = C0(0)^{-1} R(0, z) with R(0, z) from the
    dense solve; each requested z must respect the margin at t = 0.
    """
    zs = np.ascontiguousarray(zs, dtype=np.complex128)
    rho0 = norm_bound(state)
    x0 = np.empty((zs.size, 2, 2), dtype=np.complex128)
    c0i = c0_block_inv(state.a[0])
    for k, z in enumerate(zs):
        _check_margin(z, rho0, " at t = 0")
        x0[k] = c0i @ dense_resolvent_block(state, z)
    return integrate(state, cfg, resolvent_zs=zs, x0_blocks=x0)


def closed_form_resolvent(traj: Trajectory, z: complex) -> np.ndarray:
    """R(t, z) = exp(zt) C0(t) X(t, z) N(t)^{-1} at every sample, (k, 2, 2).

    The trajectory must carry the quadrature block for z (see
    integrate_with_closed_form). N is assembled from q1, q2, q3; its
    determinant exp(q1 + q2) never vanishes, so the explicit triangular
    inverse is used.
    """
    matches = np.nonzero(np.abs(traj.zs - z) <= 1e-12 * max(1.0, abs(z)))[0]
    if matches.size == 0:
        raise ValueError(
            f"trajectory carries no closed-form quadrature for z = {z}; "
            "integrate with integrate_with_closed_form"
        )
    X = traj.x_blocks(int(matches[0]))
    n = traj.n_samples
    a1 = traj.a[:, 0]
    q1 = traj.q[:, 0]
    q2 = traj.q[:, 1]
    q3 = traj.q[:, 2]

    c0 = np.zeros((n, 2, 2), dtype=np.complex128)
    c0[:, 0, 0] = 1.0
    c0[:, 1, 0] = -a1
    c0[:, 1, 1] = 1.0

    ninv = np.zeros((n, 2, 2), dtype=np.complex128)
    ninv[:, 0, 0] = np.exp(-q1)
    ninv[:, 0, 1] = -q3 * np.exp(-q2)
    ninv[:, 1, 1] = np.exp(-q2)

    phase = np.exp(z * traj.ts)[:, None, None]
    return phase * (c0 @ X @ ninv)
