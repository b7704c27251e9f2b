"""Band-coefficient fields on the half-cylinder and their weighted norms.

A CylinderField stores one real value per coefficient row and s-node.  Rows
follow the SphereField layout: row 0 is the constant band, rows 1..n the n
components of the linear band, rows n+1..n+L-1 the zonal bands 2..L.  All
band solvers act row by row since the cylinder operators are band-diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import BandSpectrum, SphereField, SpectralError


class GridError(ValueError):
    """Raised on incompatible grids."""


def row_bands(spectrum: BandSpectrum) -> np.ndarray:
    """Band index l of each coefficient row."""
    n, L = spectrum.n, spectrum.L
    return np.concatenate([[0], np.full(n, 1), np.arange(2, L + 1)])


@dataclass
class CylinderField:
    """Function on [S, S_max] x S^{n-1} as band rows over a uniform s-grid."""

    spectrum: BandSpectrum
    s: np.ndarray
    values: np.ndarray
    pole: np.ndarray = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        rows = self.spectrum.row_count()
        if self.values.shape != (rows, self.s.size):
            raise GridError(
                f"values shape {self.values.shape} != ({rows}, {self.s.size})"
            )
        steps = np.diff(self.s)
        if self.s.size < 4 or np.any(steps <= 0):
            raise GridError("s-grid must be increasing with at least 4 nodes")
        if not np.allclose(steps, steps[0], rtol=1e-10, atol=1e-14):
            raise GridError("s-grid must be uniform")
        if self.pole is None:
            pole = np.zeros(self.spectrum.n)
            pole[0] = 1.0
            self.pole = pole
        else:
            self.pole = np.asarray(self.pole, dtype=float)

    @classmethod
    def zeros(cls, spectrum: BandSpectrum, s: np.ndarray, pole=None) -> "CylinderField":
        s = np.asarray(s, dtype=float)
        return cls(spectrum, s, np.zeros((spectrum.row_count(), s.size)), pole=pole)

    @property
    def step(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def S(self) -> float:
        return float(self.s[0])

    def copy(self) -> "CylinderField":
        return CylinderField(self.spectrum, self.s, self.values.copy(), self.pole.copy())

    def _check(self, other: "CylinderField"):
        if self.spectrum is not other.spectrum and (
            self.spectrum.n != other.spectrum.n or self.spectrum.L != other.spectrum.L
        ):
            raise GridError("cylinder fields live on different spectra")
        if self.s.size != other.s.size or not np.allclose(self.s, other.s, atol=1e-12):
            raise GridError("cylinder fields live on different s-grids")

    def __add__(self, other):
        self._check(other)
        return CylinderField(self.spectrum, self.s, self.values + other.values, self.pole)

    def __sub__(self, other):
        self._check(other)
        return CylinderField(self.spectrum, self.s, self.values - other.values, self.pole)

    def __mul__(self, a: float):
        return CylinderField(self.spectrum, self.s, a * self.values, self.pole)

    __rmul__ = __mul__

    def trace(self, index: int = 0) -> SphereField:
        """SphereField of the coefficient column at node `index`."""
        col = self.values[:, index]
        n = self.spectrum.n
        return SphereField(self.spectrum, col[: n + 1].copy(), col[n + 1 :].copy(), self.pole)

    def set_trace_column(self, index: int, f: SphereField):
        n = self.spectrum.n
        self.values[0, index] = f.low[0]
        self.values[1 : n + 1, index] = f.low[1:]
        self.values[n + 1 :, index] = f.zonal

    def dds_trace(self, index: int = 0) -> SphereField:
        """One-sided 2nd-order d/ds of the coefficient rows at an end node."""
        h = self.step
        v = self.values
        if index == 0:
            col = (-3.0 * v[:, 0] + 4.0 * v[:, 1] - v[:, 2]) / (2 * h)
        elif index in (-1, self.s.size - 1):
            col = (3.0 * v[:, -1] - 4.0 * v[:, -2] + v[:, -3]) / (2 * h)
        else:
            col = (v[:, index + 1] - v[:, index - 1]) / (2 * h)
        n = self.spectrum.n
        return SphereField(self.spectrum, col[: n + 1].copy(), col[n + 1 :].copy(), self.pole)

    def project_low(self) -> "CylinderField":
        out = self.copy()
        out.values[self.spectrum.n + 1 :, :] = 0.0
        return out

    def project_high(self) -> "CylinderField":
        out = self.copy()
        out.values[: self.spectrum.n + 1, :] = 0.0
        return out


def norm_exp(w: CylinderField, k: int, alpha: float, delta: float, S: float | None = None) -> float:
    """Discrete surrogate of the exponentially weighted Hoelder norm.

    Supremum over unit s-windows of e^{-delta s} times the sum of maxima of
    finite-difference derivatives up to order k plus a pairwise Hoelder
    quotient of the k-th derivative over node pairs at distance in
    [step, 3*step].  The weight uses the window start, windows start at
    every node at or beyond S.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1, or 2")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    s = w.s
    h = w.step
    if S is None:
        S = float(s[0])
    vals = w.values
    derivs = [vals]
    cur = vals
    for _ in range(k):
        d = np.gradient(cur, h, axis=1)
        derivs.append(d)
        cur = d
    win = max(2, int(round(1.0 / h)))
    top = derivs[k]
    # pairwise quotients at index offsets 1..3 (distances h..3h)
    quot = np.zeros_like(top)
    for off in (1, 2, 3):
        if top.shape[1] > off:
            q = np.abs(top[:, off:] - top[:, :-off]) / (off * h) ** alpha
            quot[:, : q.shape[1]] = np.maximum(quot[:, : q.shape[1]], q)
    start0 = int(np.searchsorted(s, S - 1e-12))
    best = 0.0
    for i0 in range(start0, s.size):
        i1 = min(s.size, i0 + win + 1)
        window_val = 0.0
        for d in derivs[: k + 1]:
            window_val += float(np.max(np.abs(d[:, i0:i1])))
        window_val += float(np.max(quot[:, i0 : max(i0 + 1, i1 - 1)]))
        best = max(best, float(np.exp(-delta * s[i0])) * window_val)
        if i1 == s.size:
            break
    return best


# -- band two-point solvers ------------------------------------------------------


def band_tridiag(vpot: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sub/main/super diagonals of w'' + vpot*w on the interior stencil."""
    m = vpot.size
    main = -2.0 / h**2 + vpot
    off = np.full(m - 1, 1.0 / h**2)
    return off, main, off


def solve_band_dirichlet_robin(
    vpot: np.ndarray, h: float, f: np.ndarray, left_value: float, robin_gamma: float
) -> np.ndarray:
    """Solve w'' + vpot w = f with w(S)=left_value, w' = -robin_gamma w at S_max.

    The outgoing Robin condition selects the decaying indicial behavior at
    the truncated far end; eliminated with a ghost node at 2nd order.
    """
    from scipy.linalg import solve_banded

    m = vpot.size
    ab = np.zeros((3, m))
    rhs = np.array(f, dtype=float)
    ab[1, 0] = 1.0
    ab[0, 1] = 0.0
    rhs[0] = left_value
    ab[0, 2:] = 1.0 / h**2
    ab[1, 1:-1] = -2.0 / h**2 + vpot[1:-1]
    ab[2, :-2] = 1.0 / h**2
    # ghost elimination: w_{m} = w_{m-2} - 2 h g w_{m-1}
    g = robin_gamma
    ab[1, -1] = (-2.0 - 2.0 * h * g) / h**2 + vpot[-1]
    ab[2, -2] = 2.0 / h**2
    return solve_banded((1, 1), ab, rhs)


def dense_band_dirichlet_robin(
    vpot: np.ndarray, h: float, f: np.ndarray, left_value: float, robin_gamma: float
) -> np.ndarray:
    """Same discrete rows as solve_band_dirichlet_robin via dense factorization."""
    m = vpot.size
    A = np.zeros((m, m))
    rhs = np.array(f, dtype=float)
    A[0, 0] = 1.0
    rhs[0] = left_value
    for i in range(1, m - 1):
        A[i, i - 1] = 1.0 / h**2
        A[i, i] = -2.0 / h**2 + vpot[i]
        A[i, i + 1] = 1.0 / h**2
    g = robin_gamma
    A[m - 1, m - 2] = 2.0 / h**2
    A[m - 1, m - 1] = (-2.0 - 2.0 * h * g) / h**2 + vpot[m - 1]
    return np.linalg.solve(A, rhs)


def homogeneous_pair(vpot: np.ndarray, h: float, gamma: float):
    """Discrete homogeneous solutions (u_plus growing, u_minus decaying).

    u_minus is seeded at the top, where the decaying indicial behavior
    e^{-gamma s} is exact to the potential's truncation level, and recursed
    downward (the stable direction).  u_plus is generated from u_minus by
    the discrete reduction of order, which satisfies the same three-term
    recurrence with an exactly conserved Wronskian; seeding it directly can
    degenerate against u_minus when the seed rate matches a both-ways
    decaying Jacobi field.
    """
    m = vpot.size
    a = 2.0 - h**2 * vpot
    um = np.empty(m)
    um[-1] = 1.0
    um[-2] = np.exp(gamma * h)
    for i in range(m - 2, 0, -1):
        um[i - 1] = a[i] * um[i] - um[i + 1]
    um = um / np.max(np.abs(um))
    if np.min(np.abs(um)) == 0.0:
        raise ArithmeticError("decaying homogeneous solution has a node")
    W = max(2.0 * gamma, 1.0)
    up = np.empty(m)
    up[0] = 1.0
    for i in range(m - 1):
        up[i + 1] = (W * h + up[i] * um[i + 1]) / um[i]
    return up, um, W


def solve_band_decaying_kernel(vpot: np.ndarray, h: float, gamma: float, f: np.ndarray) -> np.ndarray:
    """Low-band solve by the double-decaying variation-of-parameters kernel.

    w_i = (h/W) sum_{j >= i} (u-_i u+_j - u+_i u-_j) f_j, the discrete
    analogue of integrating the sinh kernel from above.  No trace may be
    imposed at S; the admissible decay excludes both homogeneous solutions.
    """
    up, um, W = homogeneous_pair(vpot, h, gamma)
    # suffix sums of u+ f and u- f
    sp = np.cumsum((up * f)[::-1])[::-1] * h
    sm = np.cumsum((um * f)[::-1])[::-1] * h
    return (um * sp - up * sm) / W
