"""Composite log-space grid, banded storage and finite-difference stencils.

The grid lives on ``x = log(S/S0)``. An inner window of uniform step ``h`` carries
the diffusion stage; optional geometric wings extend it for the jump stage.

Stencil kinds
-------------
F, B, C   first-order forward / backward and central first derivative
F2, B2    second-order one-sided first derivative (uniform grids only)
C2        central second derivative
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .errors import CapacityError, GridError, SolveError

DEFAULT_MAX_NODES = 4096


def max_dense_nodes() -> int:
    """Node cap for dense work, overridable with ``LEVY_PIDE_MAX_N``."""
    raw = os.environ.get("LEVY_PIDE_MAX_N")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_NODES
    try:
        return int(raw)
    except ValueError as exc:
        raise GridError(f"LEVY_PIDE_MAX_N must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class CompositeGrid:
    nodes: np.ndarray
    i_lo: int
    i_hi: int  # inclusive
    uniform: bool
    h: float  # inner step

    def __post_init__(self):
        self.nodes.setflags(write=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def inner(self) -> slice:
        return slice(self.i_lo, self.i_hi + 1)

    @property
    def inner_nodes(self) -> np.ndarray:
        return self.nodes[self.inner]

    def locate(self, x: float) -> int:
        """Index of the node closest to ``x``."""
        return int(np.argmin(np.abs(self.nodes - x)))


def _wing(h: float, extent: float, ratio: float, budget: int) -> np.ndarray:
    """Positive offsets from the inner edge, geometric steps h*ratio^k, capped at ``extent``."""
    offsets = []
    pos, step = 0.0, h
    while pos < extent and len(offsets) < budget:
        step *= ratio
        pos = min(pos + step, extent)
        offsets.append(pos)
    if offsets and offsets[-1] < extent:
        # budget ran out before reaching the target; stretch the last step
        offsets[-1] = extent
    return np.asarray(offsets)


def build_grid(h: float, width: float, jump_extension: float = 0.0, center: float = 0.0,
               wing_ratio: float = 1.5, wing_budget: int = 30,
               max_nodes: int | None = None) -> CompositeGrid:
    """Uniform inner window of step ``h`` over ``width`` centred at ``center``.

    The inner node count is ``round(width / h) + 1`` so ``h`` is kept exactly and an
    odd count puts ``center`` on a node. ``jump_extension`` is the extra distance
    added on each side by the geometric wings.
    """
    if not (h > 0 and width > 0):
        raise GridError(f"need h > 0 and width > 0, got h={h}, width={width}")
    if jump_extension < 0:
        raise GridError("jump_extension must be >= 0")
    if wing_ratio < 1:
        raise GridError("wing_ratio must be >= 1")
    n_inner = int(round(width / h)) + 1
    if n_inner < 3:
        raise GridError(f"inner window has {n_inner} nodes; at least 3 are required")
    cap = max_dense_nodes() if max_nodes is None else max_nodes
    inner = center + (np.arange(n_inner) - (n_inner - 1) / 2.0) * h
    if jump_extension > 0:
        wing = _wing(h, jump_extension, wing_ratio, wing_budget)
        left = inner[0] - wing[::-1]
        right = inner[-1] + wing
    else:
        left = right = np.empty(0)
    nodes = np.concatenate([left, inner, right])
    if nodes.size > cap:
        raise CapacityError(f"grid has {nodes.size} nodes, cap is {cap}")
    i_lo = left.size
    return CompositeGrid(nodes=nodes, i_lo=i_lo, i_hi=i_lo + n_inner - 1,
                         uniform=jump_extension == 0 or wing_ratio == 1.0, h=float(h))


# ---------------------------------------------------------------------------
# banded storage


@dataclass
class BandedMatrix:
    """Square matrix stored by diagonals in LAPACK ``gb`` layout.

    ``data[ku + i - j, j] == A[i, j]`` inside the band; entries with ``i - j > kl``
    or ``j - i > ku`` are structurally zero.
    """

    n: int
    kl: int
    ku: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n < 3:
            raise GridError(f"banded matrix needs N >= 3, got {self.n}")
        if self.data.shape != (self.kl + self.ku + 1, self.n):
            raise GridError(f"band storage has shape {self.data.shape}, "
                            f"expected {(self.kl + self.ku + 1, self.n)}")

    @classmethod
    def zeros(cls, n: int, kl: int, ku: int) -> "BandedMatrix":
        return cls(n, kl, ku, np.zeros((kl + ku + 1, n)))

    @classmethod
    def identity(cls, n: int) -> "BandedMatrix":
        return cls(n, 0, 0, np.ones((1, n)))

    @classmethod
    def from_dense(cls, a: np.ndarray, kl: int, ku: int, check: bool = True) -> "BandedMatrix":
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        out = cls.zeros(n, kl, ku)
        for d in range(-kl, ku + 1):
            out.set_diagonal(d, np.diagonal(a, d))
        if check and not np.array_equal(out.to_dense(), a):
            raise GridError(f"matrix has entries outside band ({kl}, {ku})")
        return out

    def diagonal(self, d: int) -> np.ndarray:
        """Diagonal ``d`` (positive = above the main diagonal)."""
        row = self.ku - d
        if d >= 0:
            return self.data[row, d:].copy()
        return self.data[row, : self.n + d].copy()

    def set_diagonal(self, d: int, values) -> None:
        row = self.ku - d
        if d >= 0:
            self.data[row, d:] = values
        else:
            self.data[row, : self.n + d] = values

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for d in range(-self.kl, self.ku + 1):
            a += np.diag(self.diagonal(d), d)
        return a

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.zeros(self.n)
        for d in range(-self.kl, self.ku + 1):
            diag = self.diagonal(d)
            if d >= 0:
                out[: self.n - d] += diag * v[d:]
            else:
                out[-d:] += diag * v[: self.n + d]
        return out

    __matmul__ = matvec

    def _row_aligned(self, d: int) -> np.ndarray:
        # r[i] = A[i, i + d], zero where the column leaves the matrix
        r = np.zeros(self.n)
        if -self.kl <= d <= self.ku:
            if d >= 0:
                r[: self.n - d] = self.diagonal(d)
            else:
                r[-d:] = self.diagonal(d)
        return r

    def matmul(self, other: "BandedMatrix") -> "BandedMatrix":
        """Banded product; bandwidths add."""
        if other.n != self.n:
            raise GridError("size mismatch in banded product")
        n = self.n
        kl = min(self.kl + other.kl, n - 1)
        ku = min(self.ku + other.ku, n - 1)
        out = BandedMatrix.zeros(n, kl, ku)
        for d in range(-kl, ku + 1):
            acc = np.zeros(n)
            for d1 in range(-self.kl, self.ku + 1):
                b = other._row_aligned(d - d1)
                # C[i, i+d] += A[i, i+d1] * B[i+d1, i+d]
                shifted = np.zeros(n)
                if d1 >= 0:
                    shifted[: n - d1] = b[d1:]
                else:
                    shifted[-d1:] = b[: n + d1]
                acc += self._row_aligned(d1) * shifted
            out.set_diagonal(d, acc[: n - d] if d >= 0 else acc[-d:])
        return out

    def scaled(self, s: float) -> "BandedMatrix":
        return BandedMatrix(self.n, self.kl, self.ku, self.data * s)

    def plus(self, other: "BandedMatrix", scale: float = 1.0) -> "BandedMatrix":
        """``self + scale * other`` with the union bandwidth."""
        kl, ku = max(self.kl, other.kl), max(self.ku, other.ku)
        out = BandedMatrix.zeros(self.n, kl, ku)
        for d in range(-kl, ku + 1):
            v = np.zeros(self.n - abs(d))
            if -self.kl <= d <= self.ku:
                v += self.diagonal(d)
            if -other.kl <= d <= other.ku:
                v += scale * other.diagonal(d)
            out.set_diagonal(d, v)
        return out

    def transpose(self) -> "BandedMatrix":
        out = BandedMatrix.zeros(self.n, self.ku, self.kl)
        for d in range(-self.kl, self.ku + 1):
            out.set_diagonal(-d, self.diagonal(d))
        return out

    def lu(self) -> "BandedLU":
        return BandedLU.factor(self)


@dataclass(frozen=True)
class BandedLU:
    """Partial-pivoting LU of a banded matrix (LAPACK gbtrf), reusable across solves."""

    n: int
    kl: int
    ku: int
    lu: np.ndarray = field(repr=False)
    piv: np.ndarray = field(repr=False)

    @classmethod
    def factor(cls, m: BandedMatrix) -> "BandedLU":
        ab = np.zeros((2 * m.kl + m.ku + 1, m.n))
        ab[m.kl:, :] = m.data
        lu, piv, info = lapack.dgbtrf(ab, m.kl, m.ku)
        if info != 0:
            raise SolveError(f"banded LU failed (info={info})")
        return cls(m.n, m.kl, m.ku, lu, piv)

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x, info = lapack.dgbtrs(self.lu, self.kl, self.ku, b, self.piv)
        if info != 0:
            raise SolveError(f"banded solve failed (info={info})")
        return x


# ---------------------------------------------------------------------------
# stencils

STENCIL_KINDS = ("F", "B", "C", "F2", "B2", "C2")

# (derivative order, node offsets of the window)
_WINDOWS = {
    "F": (1, (0, 1)),
    "B": (1, (-1, 0)),
    "C": (1, (-1, 0, 1)),
    "F2": (1, (0, 1, 2)),
    "B2": (1, (-2, -1, 0)),
    "C2": (2, (-1, 0, 1)),
}


def fd_weights(x0: float, nodes, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0`` (Fornberg)."""
    z = np.asarray(nodes, dtype=float)
    n = z.size
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, z[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, z[i] - x0
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def interior_rows(kind: str, n: int) -> np.ndarray:
    """Rows whose full stencil window lies inside ``0..n-1``."""
    _, offsets = _WINDOWS[kind]
    lo, hi = -min(offsets), n - 1 - max(offsets)
    return np.arange(lo, hi + 1)


def _extended_nodes(nodes: np.ndarray, pad: int) -> np.ndarray:
    # ghost nodes mirror the first/last step; only used to form weights
    left = nodes[0] - (nodes[1] - nodes[0]) * np.arange(pad, 0, -1)
    right = nodes[-1] + (nodes[-1] - nodes[-2]) * np.arange(1, pad + 1)
    return np.concatenate([left, nodes, right])


def build_stencil(kind: str, grid: CompositeGrid, boundary: str = "truncate") -> BandedMatrix:
    """Difference matrix of ``kind`` on ``grid``.

    ``boundary="truncate"`` keeps the interior weights in every row and drops the
    entries that would fall on nodes outside the grid (zero values beyond the
    boundary). The result is the truncated Toeplitz matrix on a uniform grid and
    keeps the nominal bandwidth. ``boundary="shift"`` instead moves the window
    inward in the affected rows so every row stays a consistent approximation;
    that widens the band by the shift.
    """
    if kind not in _WINDOWS:
        raise GridError(f"unknown stencil kind {kind!r}; expected one of {STENCIL_KINDS}")
    if kind in ("F2", "B2") and not grid.uniform:
        raise GridError(f"stencil {kind} requires a uniform grid")
    if boundary not in ("truncate", "shift"):
        raise GridError(f"unknown boundary policy {boundary!r}")
    order, offsets = _WINDOWS[kind]
    x = grid.nodes
    n = x.size
    lo_off, hi_off = min(offsets), max(offsets)
    width = hi_off - lo_off
    if boundary == "truncate":
        kl, ku = max(0, -lo_off), max(0, hi_off)
    else:
        kl = ku = width
    m = BandedMatrix.zeros(n, kl, ku)
    pad = width
    xe = _extended_nodes(x, pad)
    rows = {}
    for i in range(n):
        if boundary == "shift":
            shift = max(0, -(i + lo_off)) - max(0, i + hi_off - (n - 1))
            cols = [i + o + shift for o in offsets]
            w = fd_weights(x[i], x[cols], order)
        else:
            cols = [i + o for o in offsets]
            w = fd_weights(x[i], xe[[c + pad for c in cols]], order)
        rows[i] = (cols, w)
    for i, (cols, w) in rows.items():
        for c, wc in zip(cols, w):
            if 0 <= c < n:
                m.data[ku + i - c, c] += wc
    if grid.uniform:
        # snap weights to the exact rational values so Toeplitz identities hold bitwise
        h = grid.h
        scale = h ** order
        m.data[:] = np.round(m.data * scale * 2.0) / 2.0 / scale
    if boundary == "shift":
        _shrink(m)
    return m


def _shrink(m: BandedMatrix) -> None:
    """Drop all-zero outer diagonals in place."""
    kl, ku = m.kl, m.ku
    while kl > 0 and not np.any(m.diagonal(-kl)):
        kl -= 1
    while ku > 0 and not np.any(m.diagonal(ku)):
        ku -= 1
    if (kl, ku) != (m.kl, m.ku):
        data = m.data[m.ku - ku: m.ku + kl + 1, :].copy()
        m.kl, m.ku, m.data = kl, ku, data
