"""Confluent operator-Vandermonde system: build, solve, cross-check.

For grouped factors ``(B_1, S_1), ..., (B_g, S_g)`` with ``sum S_j = n`` the
coefficient matrix ``M`` is the n x n block grid whose column block for
``B_j`` holds the first ``S_j`` columns of the lower-triangular pattern

    row r, local column k:   C(r, k) * B_j^(r-k)   for r >= k, else 0,

i.e. columns ``I, B, B^2, ...`` followed by their scaled derivative columns
``0, I, 2B, 3B^2, ...`` and so on.  Row r of ``M y = x`` states that the
r-th derivative at ``t = 0`` of the ansatz ``sum_j sum_k (t^k/k!) e^{t B_j}
y_{jk}`` equals ``x_r``, which is exactly how the solver consumes it.

Scalars reduce this to the classical confluent Vandermonde matrix of the
modal values with the given multiplicities, which is how the spectral and
periodic-translation backends solve it: one small scalar system per mode.
Dense backends assemble the full ``(n d) x (n d)`` matrix once and LU-solve
it.  A single repeated factor needs no inversion at all, the matrix is unit
lower triangular and forward substitution with operator applications does
the job for every backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import (
    DimensionMismatchError,
    SingularMatrixError,
    SingularSystemError,
    UnsupportedOperationError,
)
from .operators import COINCIDENCE_RTOL, Operator
from .statespace import as_state_vector, inf_norm, lu_apply, lu_factor_checked

# Desk-scale cap: binomials stay comfortably in exact integer range and the
# scalar systems stay solvable in double precision.
MAX_ORDER = 30

# Residual gate applied to every coefficient solve.
RESIDUAL_RTOL = 1e-9

# A right-hand-side mode this small (relatively) counts as absent when the
# per-mode matrix is singular there.
DEAD_MODE_RTOL = 1e-11

_PROBE_SEED = 911003


@dataclass(frozen=True)
class BlockOperatorMatrix:
    """Symbolic n x n grid of monomial operator entries ``c * B^p``.

    Entries are built on demand from the grouped factor layout; nothing is
    evaluated numerically until a solve is requested.  Column ordering
    follows the grouped layout: the block of ``B_j`` occupies columns
    ``sum_{l<j} S_l .. sum_{l<=j} S_l - 1``.
    """

    grouped: tuple[tuple[Operator, int], ...]

    def __post_init__(self):
        if not self.grouped:
            raise ValueError("grouped factor list must be non-empty")
        labels = [op.label for op, _ in self.grouped]
        if len(set(labels)) != len(labels):
            raise ValueError(f"grouped labels must be distinct, got {labels}")
        first = self.grouped[0][0]
        for op, mult in self.grouped:
            if mult < 1:
                raise ValueError(f"multiplicity of {op.label!r} must be >= 1")
            if op.family != first.family or op.dim != first.dim:
                raise DimensionMismatchError(
                    "all grouped operators must share one backend family and dimension"
                )
        if self.n > MAX_ORDER:
            raise UnsupportedOperationError(
                f"order {self.n} exceeds the supported maximum {MAX_ORDER}"
            )

    @property
    def n(self) -> int:
        return sum(mult for _, mult in self.grouped)

    @property
    def dim(self) -> int:
        return self.grouped[0][0].dim

    @property
    def family(self) -> str:
        return self.grouped[0][0].family

    @property
    def offsets(self) -> list[int]:
        offs, acc = [], 0
        for _, mult in self.grouped:
            offs.append(acc)
            acc += mult
        return offs

    def _locate(self, c: int) -> tuple[Operator, int]:
        acc = 0
        for op, mult in self.grouped:
            if c < acc + mult:
                return op, c - acc
            acc += mult
        raise IndexError(f"column {c} out of range for order {self.n}")

    def entry(self, r: int, c: int) -> tuple[tuple[int, int, str], ...]:
        """Terms ``(coefficient, power, label)`` of entry (r, c); () is zero."""
        if not (0 <= r < self.n):
            raise IndexError(f"row {r} out of range for order {self.n}")
        op, k = self._locate(c)
        if r < k:
            return ()
        return ((comb(r, k), r - k, op.label),)

    def symbol_grid(self) -> list[list[tuple[int, int, str] | None]]:
        """Whole grid with one monomial (or None) per entry."""
        n = self.n
        return [
            [self.entry(r, c)[0] if self.entry(r, c) else None for c in range(n)]
            for r in range(n)
        ]

    def apply(self, ys) -> list[np.ndarray]:
        """Apply the matrix to a coefficient vector via operator actions.

        Walks each column upward through its powers, so entry values
        ``B^(r-k) y`` are produced by repeated ``apply`` calls and never by
        materialized matrix powers.
        """
        n = self.n
        if len(ys) != n:
            raise DimensionMismatchError(f"expected {n} coefficient vectors, got {len(ys)}")
        ys = [as_state_vector(y, self.dim) for y in ys]
        out: list[np.ndarray | None] = [None] * n
        offset = 0
        for op, mult in self.grouped:
            for k in range(mult):
                w = ys[offset + k]
                for r in range(k, n):
                    contrib = comb(r, k) * w
                    out[r] = contrib if out[r] is None else out[r] + contrib
                    if r < n - 1:
                        w = op.apply(w)
            offset += mult
        return [np.asarray(row) for row in out]

    def __str__(self) -> str:
        def render(term):
            if term is None:
                return "0"
            c, p, label = term
            if p == 0:
                return "I" if c == 1 else f"{c}I"
            base = label if p == 1 else f"{label}^{p}"
            return base if c == 1 else f"{c}{base}"

        grid = self.symbol_grid()
        cells = [[render(t) for t in row] for row in grid]
        width = max(len(s) for row in cells for s in row)
        return "\n".join("  ".join(s.rjust(width) for s in row) for row in cells)


def build_confluent_matrix(grouped) -> BlockOperatorMatrix:
    """Build the symbolic coefficient matrix from grouped factors."""
    return BlockOperatorMatrix(tuple((op, int(mult)) for op, mult in grouped))


# ---------------------------------------------------------------------------
# scalar / per-mode machinery
# ---------------------------------------------------------------------------


def scalar_confluent_matrix(nodes, multiplicities) -> np.ndarray:
    """Classical confluent Vandermonde matrix for scalar nodes.

    ``nodes[j]`` appears with multiplicity ``multiplicities[j]``; the
    derivative columns carry the binomial normalization used throughout
    this package (entry ``C(r, k) node^(r-k)``).
    """
    nodes = np.asarray(nodes)
    multiplicities = list(multiplicities)
    if nodes.ndim != 1 or nodes.shape[0] != len(multiplicities):
        raise ValueError("need exactly one scalar node per multiplicity")
    dtype = np.complex128 if np.iscomplexobj(nodes) else np.float64
    return _mode_matrices(nodes.astype(dtype).reshape(-1, 1), multiplicities)[0]


def _mode_matrices(node_rows: np.ndarray, multiplicities) -> np.ndarray:
    """Stack of per-mode scalar matrices, shape ``(d, n, n)``.

    ``node_rows[j, i]`` is the modal value of group j at mode i.
    """
    d = node_rows.shape[1]
    n = sum(multiplicities)
    dtype = np.complex128 if np.iscomplexobj(node_rows) else np.float64
    v = np.zeros((d, n, n), dtype=dtype)
    col = 0
    for j, mult in enumerate(multiplicities):
        base = node_rows[j]
        for k in range(mult):
            for r in range(k, n):
                v[:, r, col] = comb(r, k) * base ** (r - k)
            col += 1
    return v


def _group_mode_nodes(matrix: BlockOperatorMatrix) -> np.ndarray:
    rows = []
    for op, _ in matrix.grouped:
        if matrix.family == "spectral":
            rows.append(op.modal_values)
        else:
            rows.append(op.node_multipliers())
    dtype = np.complex128 if any(np.iscomplexobj(r) for r in rows) else np.float64
    return np.stack([np.asarray(r, dtype=dtype) for r in rows])


def _coincident_modes(matrix: BlockOperatorMatrix, nodes: np.ndarray):
    """Modes where distinct-labeled groups carry (numerically) equal nodes."""
    g, d = nodes.shape
    mask = np.zeros(d, dtype=bool)
    pairs = []
    scale = np.maximum(1.0, np.max(np.abs(nodes), axis=0))
    for j in range(g):
        for l in range(j + 1, g):
            close = np.abs(nodes[j] - nodes[l]) <= COINCIDENCE_RTOL * scale
            if np.any(close):
                mask |= close
                pairs.append(
                    (matrix.grouped[j][0].label, matrix.grouped[l][0].label, np.where(close)[0])
                )
    return mask, pairs


def _coincidence_message(pairs) -> str:
    bits = []
    for la, lb, modes in pairs:
        shown = ", ".join(str(m) for m in modes[:8])
        more = "" if len(modes) <= 8 else f", ... ({len(modes)} total)"
        bits.append(f"labels {la!r} and {lb!r} coincide at modes [{shown}{more}]")
    return "; ".join(bits)


def _solve_modes(matrix: BlockOperatorMatrix, rhs_modal: np.ndarray) -> np.ndarray:
    """Solve the per-mode scalar systems; ``rhs_modal`` has shape (n, d).

    Modes where distinct groups coincide violate the injectivity hypothesis
    there; they are tolerated only if the right-hand side carries nothing on
    them (the solution component is then 0), otherwise the solve fails loudly.
    """
    nodes = _group_mode_nodes(matrix)
    mults = [mult for _, mult in matrix.grouped]
    v = _mode_matrices(nodes, mults)
    rhs = np.array(rhs_modal.T, dtype=np.result_type(v, rhs_modal))  # (d, n)
    mask, pairs = _coincident_modes(matrix, nodes)
    if np.any(mask):
        tol = DEAD_MODE_RTOL * max(1.0, float(np.max(np.abs(rhs))))
        if np.any(np.abs(rhs[mask]) > tol):
            raise SingularSystemError(
                "declared-distinct factors act identically on excited modes: "
                + _coincidence_message(pairs)
            )
        v[mask] = np.eye(v.shape[1], dtype=v.dtype)
        rhs[mask] = 0.0
    try:
        sol = np.linalg.solve(v, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"per-mode coefficient solve failed: {exc}") from exc
    return sol.T  # (n, d)


def _assemble_dense(matrix: BlockOperatorMatrix) -> np.ndarray:
    n, d = matrix.n, matrix.dim
    mats = [op.matrix for op, _ in matrix.grouped]
    dtype = np.result_type(*[m.dtype for m in mats])
    big = np.zeros((n * d, n * d), dtype=dtype)
    col = 0
    for (op, mult), mat in zip(matrix.grouped, mats):
        powers = [np.eye(d, dtype=dtype)]
        for _ in range(n - 1):
            powers.append(mat @ powers[-1])
        for k in range(mult):
            for r in range(k, n):
                big[r * d : (r + 1) * d, col * d : (col + 1) * d] = comb(r, k) * powers[r - k]
            col += 1
    return big


def _forward_substitution(matrix: BlockOperatorMatrix, rhs_vectors) -> list[np.ndarray]:
    # Single repeated factor: M is unit lower triangular, so the solve only
    # needs operator applications.
    op = matrix.grouped[0][0]
    n = matrix.n
    ys: list[np.ndarray] = []
    powered: list[np.ndarray] = []
    for r in range(n):
        acc = rhs_vectors[r]
        for k in range(r):
            powered[k] = op.apply(powered[k])  # now B^(r-k) y_k
            acc = acc - comb(r, k) * powered[k]
        acc = np.array(acc, copy=True)
        ys.append(acc)
        powered.append(acc)
    return ys


def _translation_guard(matrix: BlockOperatorMatrix) -> None:
    for op, _ in matrix.grouped:
        if op.boundary != "periodic":
            raise UnsupportedOperationError(
                "coefficient solves with several distinct translation factors "
                "need the periodic boundary"
            )


def _residual_gate(matrix: BlockOperatorMatrix, ys, rhs_vectors) -> float:
    applied = matrix.apply(ys)
    scale = 1.0 + max(inf_norm(x) for x in rhs_vectors)
    worst = max(inf_norm(row - x) for row, x in zip(applied, rhs_vectors))
    if worst > RESIDUAL_RTOL * scale:
        raise SingularSystemError(
            f"coefficient solve failed the residual gate: {worst:.3e} > "
            f"{RESIDUAL_RTOL * scale:.3e}; check for coincident factors declared "
            "under distinct labels"
        )
    return worst


def solve_coefficients(matrix: BlockOperatorMatrix, x) -> list[np.ndarray]:
    """Solve ``M y = x`` for the coefficient vectors ``y_0 .. y_{n-1}``.

    ``x`` holds the n right-hand-side state vectors (for the homogeneous
    problem these are the raw initial derivatives ``x_0 .. x_{n-1}``).
    Every returned solution has passed the residual gate
    ``||(M y)_r - x_r||_inf <= 1e-9 (1 + ||x||_inf)``.
    """
    n = matrix.n
    if len(x) != n:
        raise DimensionMismatchError(f"expected {n} right-hand-side vectors, got {len(x)}")
    xs = [as_state_vector(xi, matrix.dim) for xi in x]

    if len(matrix.grouped) == 1:
        ys = _forward_substitution(matrix, xs)
    elif matrix.family == "dense":
        big = _assemble_dense(matrix)
        stacked = np.concatenate([np.asarray(v, dtype=np.result_type(big, v)) for v in xs])
        try:
            sol = lu_apply(lu_factor_checked(big), stacked)
        except SingularMatrixError as exc:
            labels = [op.label for op, _ in matrix.grouped]
            raise SingularSystemError(
                f"assembled coefficient matrix for groups {labels} is singular "
                f"({exc}); some pair of declared-distinct factors may coincide"
            ) from exc
        d = matrix.dim
        ys = [sol[r * d : (r + 1) * d] for r in range(n)]
    elif matrix.family == "spectral":
        ys = list(_solve_modes(matrix, np.stack(xs)))
    elif matrix.family == "translation":
        _translation_guard(matrix)
        rhs_modal = np.fft.fft(np.stack(xs), axis=1)
        sol = _solve_modes(matrix, rhs_modal)
        real_ok = all(op._real_action for op, _ in matrix.grouped) and not any(
            np.iscomplexobj(v) for v in xs
        )
        ys = [np.fft.ifft(row).real if real_ok else np.fft.ifft(row) for row in sol]
    else:  # pragma: no cover - families are closed
        raise UnsupportedOperationError(f"unknown backend family {matrix.family!r}")

    _residual_gate(matrix, ys, xs)
    return ys


# ---------------------------------------------------------------------------
# forcing weights
# ---------------------------------------------------------------------------


class ZCoefficients:
    """Forcing-weight recipes: the solution of ``M z = (0, ..., 0, I)``.

    Entries are operator recipes, not vectors.  ``apply_all(g)`` evaluates
    every ``z_k g`` in one pass (one factorized solve, or one transform for
    the per-mode backends); indexing returns a single-entry recipe that
    internally still evaluates the full pass, so prefer ``apply_all`` in
    loops.
    """

    def __init__(self, matrix: BlockOperatorMatrix):
        self.matrix = matrix

    @property
    def n(self) -> int:
        return self.matrix.n

    def __len__(self) -> int:
        return self.n

    def apply_all(self, g) -> list[np.ndarray]:
        raise NotImplementedError

    def __getitem__(self, k: int):
        if not 0 <= k < self.n:
            raise IndexError(f"coefficient index {k} out of range for order {self.n}")

        def recipe(g):
            return self.apply_all(g)[k]

        return recipe


class _ForwardSubstitutionZ(ZCoefficients):
    def apply_all(self, g) -> list[np.ndarray]:
        g = as_state_vector(g, self.matrix.dim)
        rhs = [np.zeros_like(g) for _ in range(self.n - 1)] + [g]
        return _forward_substitution(self.matrix, rhs)


class _DenseZ(ZCoefficients):
    def __init__(self, matrix: BlockOperatorMatrix):
        super().__init__(matrix)
        try:
            self._factors = lu_factor_checked(_assemble_dense(matrix))
        except SingularMatrixError as exc:
            labels = [op.label for op, _ in matrix.grouped]
            raise SingularSystemError(
                f"assembled coefficient matrix for groups {labels} is singular ({exc})"
            ) from exc

    def apply_all(self, g) -> list[np.ndarray]:
        g = as_state_vector(g, self.matrix.dim)
        n, d = self.n, self.matrix.dim
        rhs = np.zeros(n * d, dtype=np.result_type(self._factors[0], g))
        rhs[-d:] = g
        sol = lu_apply(self._factors, rhs)
        return [sol[r * d : (r + 1) * d] for r in range(n)]


class _PerModeZ(ZCoefficients):
    def __init__(self, matrix: BlockOperatorMatrix):
        super().__init__(matrix)
        nodes = _group_mode_nodes(matrix)
        mults = [mult for _, mult in matrix.grouped]
        v = _mode_matrices(nodes, mults)
        self._mask, self._pairs = _coincident_modes(matrix, nodes)
        if np.any(self._mask):
            v[self._mask] = np.eye(v.shape[1], dtype=v.dtype)
        rhs = np.zeros((v.shape[0], self.n), dtype=v.dtype)
        rhs[:, -1] = 1.0
        try:
            zeta = np.linalg.solve(v, rhs[..., None])[..., 0].T  # (n, d)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"per-mode forcing-weight solve failed: {exc}") from exc
        zeta[:, self._mask] = 0.0
        self._zeta = zeta
        self._translation = matrix.family == "translation"
        if self._translation:
            self._real_ok = all(op._real_action for op, _ in matrix.grouped)

    def _check_dead_modes(self, g_modal: np.ndarray) -> None:
        if not np.any(self._mask):
            return
        tol = DEAD_MODE_RTOL * max(1.0, float(np.max(np.abs(g_modal))))
        if np.any(np.abs(g_modal[self._mask]) > tol):
            raise SingularSystemError(
                "forcing excites modes where declared-distinct factors act "
                "identically: " + _coincidence_message(self._pairs)
            )

    def apply_all(self, g) -> list[np.ndarray]:
        g = as_state_vector(g, self.matrix.dim)
        if self._translation:
            g_modal = np.fft.fft(g)
            self._check_dead_modes(g_modal)
            w = self._zeta * g_modal[None, :]
            real_out = self._real_ok and not np.iscomplexobj(g)
            return [np.fft.ifft(row).real if real_out else np.fft.ifft(row) for row in w]
        self._check_dead_modes(g)
        return list(self._zeta * g[None, :])


def solve_z_vector(matrix: BlockOperatorMatrix) -> ZCoefficients:
    """Solve ``M z = (0, ..., 0, I)`` and return the lazy forcing weights.

    The returned recipes are validated once against a random probe through
    the residual gate (applying ``M`` via operator actions must reproduce
    the probe in the last row and zeros above).
    """
    if len(matrix.grouped) == 1:
        z: ZCoefficients = _ForwardSubstitutionZ(matrix)
    elif matrix.family == "dense":
        z = _DenseZ(matrix)
    elif matrix.family == "spectral":
        z = _PerModeZ(matrix)
    elif matrix.family == "translation":
        _translation_guard(matrix)
        z = _PerModeZ(matrix)
    else:  # pragma: no cover
        raise UnsupportedOperationError(f"unknown backend family {matrix.family!r}")

    probe = np.random.default_rng(_PROBE_SEED).standard_normal(matrix.dim)
    if isinstance(z, _PerModeZ) and np.any(z._mask):
        if z._translation:
            p_modal = np.fft.fft(probe)
            p_modal[z._mask] = 0.0
            probe = np.fft.ifft(p_modal).real
        else:
            probe = probe.copy()
            probe[z._mask] = 0.0
    rhs = [np.zeros_like(probe) for _ in range(matrix.n - 1)] + [probe]
    _residual_gate(matrix, z.apply_all(probe), rhs)
    return z


# ---------------------------------------------------------------------------
# two-operator recursion cross-check
# ---------------------------------------------------------------------------


def two_operator_closed_form(a: Operator, b: Operator, u1_star, prev) -> list[np.ndarray]:
    """Coefficients for the factor pattern ``(B, A, A, ..., A)`` by recursion.

    ``a`` is the repeated operator, ``b`` the single leading factor.
    ``prev`` holds the ``n - 1`` coefficients of the repeated-``a``
    sub-equation (the cascade stage after peeling ``b``) and ``u1_star``
    is the plain initial value ``u(0)``.  The new coefficients are built
    from iterated resolvent applications ``(A - B)^{-m}``:

        y_0 = u(0) + sum_{k=0}^{n-2} (-1)^(k+1) (A-B)^-(k+1) prev_k
        y_j = sum_{k=j-1}^{n-2} (-1)^(k-j+1) (A-B)^-(k-j+2) prev_k,  j >= 1

    ordered to match ``solve_coefficients`` on grouped factors
    ``[(B, 1), (A, n-1)]``; the two paths must agree and tests hold them to
    1e-8.
    """
    from .operators import resolvent_solve

    prev = [as_state_vector(p, a.dim) for p in prev]
    u1 = as_state_vector(u1_star, a.dim)
    n = len(prev) + 1
    if n == 1:
        return [u1]
    # chains[k][m-1] = (A - B)^{-m} prev[k] for m = 1 .. k+1
    chains: list[list[np.ndarray]] = []
    for k, vec in enumerate(prev):
        w = vec
        chain = []
        for _ in range(k + 1):
            w = resolvent_solve(a, b, w)
            chain.append(w)
        chains.append(chain)

    y0 = u1
    for k in range(n - 1):
        term = chains[k][k]
        y0 = y0 + term if (k + 1) % 2 == 0 else y0 - term
    ys = [y0]
    for j in range(1, n):
        acc: np.ndarray | None = None
        for k in range(j - 1, n - 1):
            term = chains[k][k - j + 1]
            signed = term if (k - j + 1) % 2 == 0 else -term
            acc = signed if acc is None else acc + signed
        ys.append(acc)
    return ys
