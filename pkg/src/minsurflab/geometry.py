"""Mean curvature and second fundamental form of zonally symmetric charts.

Every chart in this laboratory is invariant under the rotations of R^n that
fix the chart's pole axis, so it is generated by a 2-surface in the flat
orbit space (x_q, rho, x_v): x_q along the pole, rho the distance to the
pole axis within the horizontal R^n, x_v the vertical.  For such a
hypersurface

    H = (G L - 2 F M + E NN)/(E G - F^2) - (n - 2) (N . e_rho) / rho,

the first group being the curvature trace of the generating 2-surface in
R^3 and the second the n-2 rotational principal curvatures.  The overall
sign follows the parametrization orientation; minimal charts are
orientation-free since H = 0.

Angular derivatives are exact (trig differentiation in the colatitude on
the ZonalGrid); the profile direction uses finite differences, so the
engine's only discretization error is the profile-direction truncation.
"""

from __future__ import annotations

import numpy as np

from .diffops import fd_derivative
from .spectral import ZonalGrid

# parities of (x_q, rho, x_v) under reflection through the pole axis
_ORBIT_PARITY = (+1, -1, +1)


class OrbitSurface:
    """2-parameter orbit generator P(a, beta) -> (x_q, rho, x_v).

    P has shape (3, Na, Nb) with the beta axis last, sampled on grid.beta.
    d_a / d_aa differentiate along the first parameter; solver and oracle
    paths pass different stencils, keeping verification independent.
    """

    def __init__(self, P, grid: ZonalGrid, d_a, d_aa):
        self.P = np.asarray(P, dtype=float)
        if self.P.shape[0] != 3 or self.P.shape[2] != grid.t.size:
            raise ValueError("P must have shape (3, Na, len(grid.beta))")
        self.grid = grid
        self.d_a = d_a
        self.d_aa = d_aa

    def _db(self, i: int, F: np.ndarray, deriv: int = 1) -> np.ndarray:
        return self.grid.d_beta(F, _ORBIT_PARITY[i], deriv)

    def fundamental_forms(self):
        P = self.P
        Pa = np.stack([self.d_a(P[i]) for i in range(3)])
        Pb = np.stack([self._db(i, P[i]) for i in range(3)])
        Paa = np.stack([self.d_aa(P[i]) for i in range(3)])
        Pab = np.stack([self._db(i, self.d_a(P[i])) for i in range(3)])
        Pbb = np.stack([self._db(i, P[i], 2) for i in range(3)])
        E = np.einsum("kij,kij->ij", Pa, Pa)
        F = np.einsum("kij,kij->ij", Pa, Pb)
        G = np.einsum("kij,kij->ij", Pb, Pb)
        Nvec = np.cross(Pa, Pb, axis=0)
        norm = np.sqrt(np.einsum("kij,kij->ij", Nvec, Nvec))
        Nvec = Nvec / norm
        L = np.einsum("kij,kij->ij", Paa, Nvec)
        M = np.einsum("kij,kij->ij", Pab, Nvec)
        NN = np.einsum("kij,kij->ij", Pbb, Nvec)
        return E, F, G, L, M, NN, Nvec

    def mean_curvature(self, n: int) -> np.ndarray:
        E, F, G, L, M, NN, Nvec = self.fundamental_forms()
        det = E * G - F * F
        h2 = (G * L - 2 * F * M + E * NN) / det
        return h2 - (n - 2) * Nvec[1] / self.P[1]

    def second_fundamental_sq(self, n: int) -> np.ndarray:
        """|A|^2 = kappa_1^2 + kappa_2^2 + (n - 2) kappa_rot^2."""
        E, F, G, L, M, NN, Nvec = self.fundamental_forms()
        det = E * G - F * F
        tr = (G * L - 2 * F * M + E * NN) / det
        dt = (L * NN - M * M) / det
        disc = np.clip(tr * tr - 4 * dt, 0.0, None)
        k1 = 0.5 * (tr + np.sqrt(disc))
        k2 = 0.5 * (tr - np.sqrt(disc))
        krot = -Nvec[1] / self.P[1]
        return k1 * k1 + k2 * k2 + (n - 2) * krot * krot

    def unit_normal(self) -> np.ndarray:
        return self.fundamental_forms()[-1]


def uniform_surface(P, grid: ZonalGrid, h: float, order: int = 2) -> OrbitSurface:
    """OrbitSurface whose first parameter lives on a uniform grid."""
    return OrbitSurface(
        P,
        grid,
        d_a=lambda F: fd_derivative(F, h, 0, 1, order),
        d_aa=lambda F: fd_derivative(F, h, 0, 2, order),
    )


def matrix_surface(P, grid: ZonalGrid, D1: np.ndarray, D2: np.ndarray | None = None) -> OrbitSurface:
    """OrbitSurface differentiated by a dense collocation matrix (axis 0)."""
    DD = D1 @ D1 if D2 is None else D2
    return OrbitSurface(
        P,
        grid,
        d_a=lambda F: D1 @ F,
        d_aa=lambda F: DD @ F,
    )


def graph_orbit_points(r: np.ndarray, grid: ZonalGrid, height: np.ndarray) -> np.ndarray:
    """Orbit generator of a height graph over polar coordinates x = r theta."""
    R = r[:, None]
    return np.stack([R * grid.t[None, :], R * grid.sinb[None, :], height])


def revolution_second_fundamental(n: int, phi, dphi, dpsi):
    """|A| of the profile surface of revolution, via its two distinct
    principal curvatures; the independent oracle for catenoid charts."""
    # conformal gauge: |X_s| = phi, kappa_rot = dpsi/phi^2, kappa_prof = -(n-1) kappa_rot on a minimal profile
    krot = dpsi / phi**2
    return np.sqrt((n - 1.0) ** 2 * krot**2 + (n - 1.0) * krot**2)
