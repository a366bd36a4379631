"""Dense matrix functions and structural probes.

``expm`` is scaling and squaring with diagonal Pade approximants (Higham 2005),
``sqrtm`` the determinant-scaled product-form Denman-Beavers iteration, ``logm``
inverse scaling and squaring with a Gauss-Legendre partial-fraction Pade
approximant, and ``powm`` composes the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConvergenceError, DomainError
from .grid import max_dense_nodes

EXPM_NORM_CAP = 1e12

# Pade degree -> largest 1-norm for which the degree is accurate to unit roundoff
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
         33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0),
}


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > max_dense_nodes():
        raise CapacityError(f"dense size {a.shape[0]} exceeds cap {max_dense_nodes()}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def _pade_terms(a: np.ndarray, m: int, powers: dict):
    """Return (U, V) with r_m(A) = (V - U)^{-1} (V + U)."""
    b = _PADE[m]
    n = a.shape[0]
    ident = np.eye(n)
    if m == 13:
        a2, a4, a6 = powers[2], powers[4], powers[6]
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    u_acc = b[1] * ident
    v_acc = b[0] * ident
    for k in range(2, m + 1, 2):
        u_acc = u_acc + b[k + 1] * powers[k]
        v_acc = v_acc + b[k] * powers[k]
    return a @ u_acc, v_acc


def expm(a, norm_cap: float = EXPM_NORM_CAP) -> np.ndarray:
    """Matrix exponential by scaling and squaring."""
    a = _as_square(a)
    n = a.shape[0]
    norm1 = np.linalg.norm(a, 1)
    if norm1 > norm_cap:
        raise OverflowError(f"||A||_1 = {norm1:.3g} exceeds the expm cap {norm_cap:.3g}")
    if norm1 == 0.0:
        return np.eye(n)
    powers = {2: a @ a}
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            for k in range(4, m, 2):
                powers.setdefault(k, powers[k - 2] @ powers[2])
            u, v = _pade_terms(a, m, powers)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA[13]))))
    a_s = a / 2.0 ** s
    p2 = powers[2] / 4.0 ** s
    p4 = p2 @ p2
    p6 = p4 @ p2
    u, v = _pade_terms(a_s, 13, {2: p2, 4: p4, 6: p6})
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


@dataclass(frozen=True)
class SqrtmInfo:
    iterations: int
    residual: float


def sqrtm(a, tol: float = 1e-13, max_iter: int = 60, stagnation_tol: float = 1e-9,
          return_info: bool = False):
    """Principal square root via the scaled product-form Denman-Beavers iteration.

    Iterates ``M <- (I + (mu^2 M + mu^-2 M^-1)/2)/2`` and ``X <- mu X (I + mu^-2 M^-1)/2``
    from ``M = X = A`` until ``||M - I||_1 < tol``. The determinantal scaling
    ``mu = |det M|^(-1/2n)`` is switched off once the residual is small. If the
    residual stops decreasing below ``stagnation_tol`` the iterate is accepted,
    since that floor is set by rounding rather than by the iteration.
    """
    a = _as_square(a)
    n = a.shape[0]
    ident = np.eye(n)
    m = a.copy()
    x = a.copy()
    res = np.linalg.norm(m - ident, 1)
    prev = np.inf
    for k in range(1, max_iter + 1):
        try:
            m_inv = np.linalg.inv(m)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("Denman-Beavers iterate became singular",
                                   iterations=k, residual=res) from exc
        if res > 1e-2:
            sign, logdet = np.linalg.slogdet(m)
            mu = math.exp(-logdet / (2 * n)) if sign != 0 else 1.0
        else:
            mu = 1.0
        x = 0.5 * mu * (x + x @ m_inv / mu ** 2)
        m = 0.5 * (ident + 0.5 * (mu ** 2 * m + m_inv / mu ** 2))
        prev, res = res, np.linalg.norm(m - ident, 1)
        if not np.isfinite(res):
            break
        if res < tol or (res < stagnation_tol and res >= 0.5 * prev):
            return (x, SqrtmInfo(k, res)) if return_info else x
    raise ConvergenceError(f"sqrtm did not converge in {max_iter} iterations "
                           f"(||M-I|| = {res:.3e})", iterations=max_iter, residual=res)


def _gauss_legendre_log1p(x: np.ndarray, m: int) -> np.ndarray:
    """[m/m] Pade approximant of log(I + X) in partial-fraction form."""
    nodes, weights = np.polynomial.legendre.leggauss(m)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    n = x.shape[0]
    ident = np.eye(n)
    out = np.zeros_like(x)
    for t, w in zip(nodes, weights):
        out += w * np.linalg.solve(ident + t * x, x)
    return out


def logm(a, pade_degree: int = 8, threshold: float = 0.25, max_roots: int = 40,
         sqrt_tol: float = 1e-13) -> np.ndarray:
    """Principal logarithm by inverse scaling and squaring."""
    a = _as_square(a)
    n = a.shape[0]
    ident = np.eye(n)
    if np.array_equal(a, ident):
        return np.zeros_like(a)
    eig = np.linalg.eigvals(a) if n <= 64 else None
    if eig is not None and np.any((np.abs(eig.imag) <= 1e-14 * np.abs(eig).max())
                                  & (eig.real <= 0)):
        raise DomainError("logm needs a matrix with no eigenvalues on the closed negative axis")
    r = a
    k = 0
    while np.linalg.norm(r - ident, 1) >= threshold:
        if k >= max_roots:
            raise ConvergenceError("logm: too many square roots before reaching the Pade region",
                                   iterations=k, residual=float(np.linalg.norm(r - ident, 1)))
        r = sqrtm(r, tol=sqrt_tol)
        k += 1
    return 2.0 ** k * _gauss_legendre_log1p(r - ident, pade_degree)


def powm(a, p: float) -> np.ndarray:
    """Real power ``A^p = expm(p logm A)``."""
    a = _as_square(a)
    if p == 0:
        return np.eye(a.shape[0])
    if p == 1:
        return a.copy()
    return expm(p * logm(a))


def eventual_nonneg_probe(a, kmax: int, tol: float = 1e-12, confirm_to: int | None = None):
    """Smallest ``k0 <= kmax`` with ``A^k >= 0`` (up to rounding) for every checked ``k >= k0``.

    Powers are checked up to ``confirm_to`` (default ``2*kmax``) so a sign pattern
    that merely alternates is not mistaken for eventual nonnegativity. Entries
    count as nonnegative when ``>= -tol * max|A^k|``. Returns ``None`` when no
    such ``k0`` exists.
    """
    if kmax < 1:
        raise DomainError("kmax must be >= 1")
    a = _as_square(a)
    last = 2 * kmax if confirm_to is None else max(confirm_to, kmax)
    ok = []
    p = np.eye(a.shape[0])
    for _ in range(last):
        p = p @ a
        scale = np.abs(p).max()
        if scale == 0.0:
            ok.append(True)
            continue
        p = p / scale  # keep powers bounded, signs are all that matter
        ok.append(bool(p.min() >= -tol))
    k0 = None
    for k in range(last, 0, -1):
        if not ok[k - 1]:
            break
        k0 = k
    if k0 is None or k0 > kmax:
        return None
    return k0


def spectral_radius(a, tol: float = 1e-8, max_iter: int = 5000, seed: int = 0) -> float:
    """Spectral radius by power iteration, with a dense eigensolve fallback for N <= 512."""
    a = _as_square(a)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = a @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        w /= nw
        # two-step ratio is robust to a dominant pair of opposite sign
        w2 = a @ w
        nw2 = np.linalg.norm(w2)
        if nw2 == 0.0:
            return 0.0
        new = math.sqrt(nw * nw2)
        v = w2 / nw2
        if abs(new - est) <= tol * new:
            return new
        est = new
    if n <= 512:
        return float(np.abs(np.linalg.eigvals(a)).max())
    raise ConvergenceError("power iteration did not converge", iterations=max_iter)


@dataclass(frozen=True)
class EMProbe:
    """Outcome of testing ``A = s I - B`` with ``B`` eventually nonnegative and ``rho(B) < s``."""

    is_em: bool
    shift: float
    power_index: int | None
    rho: float


def is_em_matrix(a, kmax: int | None = None, shifts=None) -> EMProbe:
    """Search a few splittings ``A = s I - B`` for one that certifies an EM-matrix.

    ``s`` is the largest diagonal entry plus a multiple of the largest absolute
    off-diagonal row sum, so the search is invariant under ``A -> cA + tI``.
    Shifts that are too small leave sign patterns that persist for many powers
    (banded generators with a zero diagonal in ``B`` are nearly periodic), so
    the default ``kmax`` is ``4N``.
    """
    a = _as_square(a)
    n = a.shape[0]
    kmax = 4 * n if kmax is None else kmax
    if shifts is None:
        d = float(np.max(np.diag(a)))
        w = float(np.max(np.abs(a - np.diag(np.diag(a))).sum(axis=1)))
        shifts = tuple(d + t * w for t in (0.0, 0.1, 0.2, 0.5, 1.0))
    best = EMProbe(False, float("nan"), None, float("nan"))
    for s in shifts:
        b = s * np.eye(n) - a
        k0 = eventual_nonneg_probe(b, kmax)
        if k0 is None:
            continue
        rho = spectral_radius(b)
        if rho < s:
            return EMProbe(True, float(s), k0, rho)
        best = EMProbe(False, float(s), k0, rho)
    return best
