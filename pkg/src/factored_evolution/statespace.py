"""Dense linear-algebra and integration kernel shared by all backends.

State vectors are plain 1-D numpy arrays (float64, or complex128 where a
backend needs it) and matrices are 2-D arrays.  This module wraps the few
numerical primitives everything else is built on: a pivoted LU solve with an
explicit singularity gate, matrix-exponential actions, a fixed-step RK4
integrator used as the brute-force referee, composite quadrature rules, and
finite-difference weights for derivative checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    SemigroupOverflowError,
    SingularMatrixError,
)

# Pivots below PIVOT_RTOL * ||A||_inf are treated as a singular system.
PIVOT_RTOL = 1e-14

# Relative tolerance for detecting (skew-)symmetry of a matrix.
SYMMETRY_RTOL = 1e-13


def as_state_vector(v, dim: int | None = None) -> np.ndarray:
    """Coerce ``v`` to a finite 1-D float64/complex128 array.

    Raises
    ------
    DimensionMismatchError
        If ``v`` is not 1-D or its length differs from ``dim``.
    NonFiniteError
        If ``v`` contains NaN or Inf entries.
    """
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D state vector, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        arr = arr.astype(np.complex128, copy=False)
    else:
        arr = arr.astype(np.float64, copy=False)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {arr.shape[0]}")
    check_finite(arr, "state vector")
    return arr


def check_finite(arr: np.ndarray, what: str) -> None:
    """Raise :class:`NonFiniteError` if ``arr`` has NaN/Inf entries."""
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contains non-finite entries")


def inf_norm(a) -> float:
    """Infinity norm: max row sum for matrices, max magnitude for vectors."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if a.ndim <= 1:
        return float(np.max(np.abs(a)))
    return float(np.max(np.sum(np.abs(a), axis=1)))


def condition_estimate(a) -> float:
    """2-norm condition number; Inf for a numerically singular matrix."""
    a = np.asarray(a)
    try:
        c = float(np.linalg.cond(a))
    except np.linalg.LinAlgError:
        return float("inf")
    return c


def lu_solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` by pivoted LU elimination.

    ``b`` may be a vector or a matrix of stacked right-hand-side columns.
    A pivot of magnitude below ``PIVOT_RTOL * ||a||_inf`` raises
    :class:`SingularMatrixError` instead of returning garbage; for an
    assembled coefficient system that signals a non-injective operator
    difference.
    """
    factors = lu_factor_checked(a)
    return lu_apply(factors, b)


def lu_factor_checked(a):
    """LU-factor ``a`` with the pivot gate applied; reusable via lu_apply."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    check_finite(a, "matrix")
    scale = inf_norm(a)
    if scale == 0.0:
        raise SingularMatrixError("zero matrix is singular")
    with warnings.catch_warnings():
        # exact singularity warns before we get to apply the pivot gate
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < PIVOT_RTOL * scale:
        raise SingularMatrixError(
            f"pivot {np.min(pivots):.3e} below threshold {PIVOT_RTOL * scale:.3e}; "
            "matrix is numerically singular"
        )
    return lu, piv


def lu_apply(factors, b) -> np.ndarray:
    """Back-substitute a right-hand side through factors from lu_factor_checked."""
    lu, piv = factors
    b = np.asarray(b)
    check_finite(b, "right-hand side")
    if b.shape[0] != lu.shape[0]:
        raise DimensionMismatchError(
            f"right-hand side length {b.shape[0]} does not match matrix size {lu.shape[0]}"
        )
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    check_finite(x, "solution")
    return x


def _hermitian(a: np.ndarray) -> bool:
    scale = inf_norm(a)
    if scale == 0.0:
        return True
    return inf_norm(a - a.conj().T) <= SYMMETRY_RTOL * scale


def expm_apply(a, t: float, v) -> np.ndarray:
    """Apply the matrix exponential: ``e^{t a} v``.

    Hermitian (in particular real symmetric) matrices go through an
    eigendecomposition; everything else uses scaling-and-squaring with Pade
    approximation via :func:`scipy.linalg.expm`.
    """
    a = np.asarray(a, dtype=np.complex128 if np.iscomplexobj(a) else np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    v = as_state_vector(v, a.shape[0])
    if _hermitian(a):
        w, q = scipy.linalg.eigh(a)
        with np.errstate(over="ignore"):
            grow = np.exp(w * t)
        if not np.all(np.isfinite(grow)):
            raise SemigroupOverflowError(f"exp({np.max(w) * t:.3e}) overflows float range")
        out = q @ (grow * (q.conj().T @ v))
        if not np.iscomplexobj(a) and not np.iscomplexobj(v):
            out = out.real
    else:
        phi = scipy.linalg.expm(t * a)
        if not np.all(np.isfinite(phi)):
            raise SemigroupOverflowError("matrix exponential overflowed float range")
        out = phi @ v
    check_finite(out, "matrix exponential action")
    return out


def rk4_integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    u0,
    t_end: float,
    steps: int,
    t0: float = 0.0,
) -> np.ndarray:
    """Integrate ``u' = f(t, u)`` from ``t0`` to ``t_end`` with classical RK4.

    Fixed step size, deterministic for fixed inputs.  Raises
    :class:`NonFiniteError` as soon as the state picks up NaN/Inf entries.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    u = np.array(u0, copy=True)
    u = u.astype(np.complex128 if np.iscomplexobj(u) else np.float64, copy=False)
    h = (t_end - t0) / steps
    for i in range(steps):
        t = t0 + i * h
        k1 = f(t, u)
        k2 = f(t + 0.5 * h, u + (0.5 * h) * k1)
        k3 = f(t + 0.5 * h, u + (0.5 * h) * k2)
        k4 = f(t + h, u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise NonFiniteError(f"RK4 state became non-finite at t={t + h:.6g}")
    return u


@lru_cache(maxsize=32)
def _gauss_legendre_reference(q: int):
    # Nodes/weights on [-1, 1]; cached because rules are rebuilt per interval.
    x, w = np.polynomial.legendre.leggauss(q)
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    """Composite quadrature rule on an interval, split into equal panels.

    ``gauss-legendre`` places ``nodes_per_panel`` Gauss points in each panel
    (exact on polynomials of degree ``2 q - 1``).  ``composite-simpson`` uses
    the 3-point Simpson rule per panel (degree 3).  Panel-boundary nodes are
    not merged; the duplicate evaluations keep the bookkeeping trivial.
    """

    kind: str = "gauss-legendre"
    panels: int = 16
    nodes_per_panel: int = 8

    def __post_init__(self):
        if self.kind not in ("gauss-legendre", "composite-simpson"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if self.kind == "composite-simpson" and self.nodes_per_panel != 3:
            raise ValueError("composite-simpson uses exactly 3 nodes per panel")
        if self.kind == "gauss-legendre" and self.nodes_per_panel < 1:
            raise ValueError("nodes_per_panel must be >= 1")

    @property
    def order(self) -> int:
        """Convergence order (also: exact on polynomials of degree order-1)."""
        if self.kind == "gauss-legendre":
            return 2 * self.nodes_per_panel
        return 4

    def refined(self, factor: int = 2) -> "QuadratureRule":
        """Same rule with ``factor`` times as many panels."""
        return replace(self, panels=self.panels * factor)

    def nodes(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for the interval ``[a, b]``.

        Weights sum to ``b - a``.  Returns empty arrays for a zero-length
        interval.
        """
        if b == a:
            return np.empty(0), np.empty(0)
        edges = np.linspace(a, b, self.panels + 1)
        h = (b - a) / self.panels
        if self.kind == "gauss-legendre":
            xr, wr = _gauss_legendre_reference(self.nodes_per_panel)
            mids = 0.5 * (edges[:-1] + edges[1:])
            pts = mids[:, None] + (0.5 * h) * xr[None, :]
            wts = np.broadcast_to((0.5 * h) * wr, pts.shape)
        else:
            left = edges[:-1]
            pts = left[:, None] + h * np.array([0.0, 0.5, 1.0])[None, :]
            wts = np.broadcast_to((h / 6.0) * np.array([1.0, 4.0, 1.0]), pts.shape)
        return pts.ravel(), np.ascontiguousarray(wts).ravel()


def finite_difference_weights(offsets, derivative_order: int) -> np.ndarray:
    """Weights approximating the ``derivative_order``-th derivative at 0.

    ``offsets`` are the (distinct) sample abscissae relative to the
    evaluation point.  Solves the small Vandermonde moment system, so the
    stencil is exact on polynomials of degree ``len(offsets) - 1``.
    """
    x = np.asarray(offsets, dtype=np.float64)
    m = x.shape[0]
    if derivative_order >= m:
        raise ValueError("need more offsets than the derivative order")
    powers = np.vander(x, m, increasing=True).T  # powers[p, i] = x_i**p
    rhs = np.zeros(m)
    rhs[derivative_order] = math.factorial(derivative_order)
    return np.linalg.solve(powers, rhs)
