"""The noncompact outer surface: ends, deficiency space, and site solvers.

The outer surface carries a core cylinder chart (the seed catenoid), a list
of planar-asymptotic ends in the catenoid band representation, and frozen
charts from earlier gluings.  Ring-data solves are localized at the active
gluing site: responses to data on the small ring decay like exterior
multipoles, so the exterior problem on [r0, R_site] with per-band decaying
Robin closure represents the global solve up to couplings far below the
working ball; the global band structure of the core enters the deficiency
bookkeeping and the nondegeneracy check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .catenoid import (
    ContractionError,
    PreconditionError,
    ResidualError,
    grid_profile,
)
from .cylinder import CylinderField, GridError, row_bands
from .geometry import graph_orbit_points, matrix_surface
from .neck import GraphPatch, NeckPiece, angular_grid, axial_collocation, rows_from_collocation, smooth_step
from .profile import ProfileTable, Scales, profile_values
from .radial import BandOperator, RadialField, RadialGrid
from .spectral import BandSpectrum, SphereField

log = logging.getLogger(__name__)


def psi_infinity(profile: ProfileTable) -> float:
    """Limit height of the unit catenoid end, with the analytic tail.

    The tail of the height integral beyond the table is phi^{2-n}/(n-2) up
    to relative O(phi^{-2n+2}).
    """
    n = profile.n
    phi_top = profile.phi[-1]
    return float(profile.psi[-1] + phi_top ** (2 - n) / (n - 2))


_END_SPLINES: dict = {}


def _end_splines(n: int, s_top: float = 26.0):
    """Cached splines s(log phi), psi(s), dpsi/dphi slope data for ends."""
    key = (n, s_top)
    if key not in _END_SPLINES:
        from scipy.interpolate import CubicSpline

        s = np.linspace(0.0, s_top, 9000)
        phi, dphi, psi, dpsi = profile_values(n, s)
        psi_inf_val = psi[-1] + phi[-1] ** (2 - n) / (n - 2)
        _END_SPLINES[key] = {
            "s_of_logphi": CubicSpline(np.log(phi[1:]), s[1:]),
            "phi": CubicSpline(s, phi),
            "dphi": CubicSpline(s, dphi),
            "psi": CubicSpline(s, psi),
            "dpsi": CubicSpline(s, dpsi),
            "psi_inf": psi_inf_val,
            "logphi_max": float(np.log(phi[-1])),
        }
    return _END_SPLINES[key]


@dataclass
class EndModel:
    """A planar-asymptotic end in the scaled catenoid band representation."""

    a: float  # end scale (neck units of its generating catenoid)
    S0: float  # start parameter of the end chart
    w: CylinderField | None  # decaying perturbation rows (may be None)
    orientation: int  # +1 opens upward, -1 downward
    axis_center: np.ndarray  # ambient (n+1,) point on the end's axis
    plane_height: float  # ambient height of the asymptotic plane
    psi_inf: float
    excised: list = field(default_factory=list)  # (center_xy, radius) holes

    def radius_at(self, s: float, profile_n: int) -> float:
        phi = profile_values(profile_n, np.array([s]))[0][0]
        return self.a * float(phi)

    def height_profile(self, n: int, R: np.ndarray):
        """Height over the asymptotic plane and its radial slope at radii R
        from the end's axis (ambient units); vectorized via cached splines."""
        R = np.atleast_1d(np.asarray(R, dtype=float))
        sp = _end_splines(n)
        target = np.log(R / self.a)
        if np.any(target <= 0) or np.any(target > sp["logphi_max"]):
            raise PreconditionError("end radius outside the representable range")
        s = sp["s_of_logphi"](target)
        phi = sp["phi"](s)
        dphi = sp["dphi"](s)
        psi = sp["psi"](s)
        dpsi = sp["dpsi"](s)
        h = self.a * (sp["psi_inf"] - psi)
        g = -dpsi / dphi  # d height / d radius, sign per the upper branch
        if self.w is not None:
            sw = np.clip(s, self.w.s[0], self.w.s[-1])
            idx = np.minimum(
                ((sw - self.w.s[0]) / self.w.step).astype(int), self.w.s.size - 1
            )
            conj = phi ** ((2 - n) / 2.0)
            h = h + conj * self.w.values[0][idx] * (-dphi / phi)
        return h, g


@dataclass
class OuterSurface:
    """Core cylinder chart, ends, deficiency data, and frozen glue charts."""

    profile: ProfileTable
    spectrum: BandSpectrum
    core_scale: float
    core_center: np.ndarray  # ambient (n+1,)
    core_span: float  # core chart covers |s| <= core_span
    core_w: CylinderField
    ends: list
    frozen_charts: list = field(default_factory=list)
    deficiency: dict = field(default_factory=dict)
    site: dict | None = None
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.profile.n

    def top_end(self) -> EndModel:
        return max(self.ends, key=lambda e: e.plane_height)


def seed_catenoid(
    profile: ProfileTable,
    spectrum: BandSpectrum,
    scale: float = 1.0,
    center: np.ndarray | None = None,
    core_span: float = 8.0,
    core_step: float = 8e-3,
) -> OuterSurface:
    """The exact catenoid with two planar ends as the tower seed."""
    n = profile.n
    if center is None:
        center = np.zeros(n + 1)
    m = int(round(2 * core_span / core_step))
    s = -core_span + core_step * np.arange(m + 1)
    core_w = CylinderField.zeros(spectrum, s)
    psi_inf = psi_infinity(profile)
    ends = [
        EndModel(
            a=scale, S0=core_span - 2.0, w=None, orientation=+1,
            axis_center=center.copy(),
            plane_height=float(center[-1] + scale * psi_inf),
            psi_inf=psi_inf,
        ),
        EndModel(
            a=scale, S0=core_span - 2.0, w=None, orientation=-1,
            axis_center=center.copy(),
            plane_height=float(center[-1] - scale * psi_inf),
            psi_inf=psi_inf,
        ),
    ]
    surface = OuterSurface(
        profile=profile,
        spectrum=spectrum,
        core_scale=scale,
        core_center=center,
        core_span=core_span,
        core_w=core_w,
        ends=ends,
    )
    surface.deficiency = build_deficiency(surface)
    return surface


# -- deficiency space --------------------------------------------------------------


def _homogeneous_profiles(n: int, ell: int, s: np.ndarray):
    """Discrete growing/decaying homogeneous band solutions on the end."""
    from .cylinder import homogeneous_pair

    data = grid_profile(n, s)
    c2 = ((n - 2) / 2.0) ** 2
    lam = ell * (ell + n - 2.0)
    gam = np.sqrt(lam + c2)
    h = s[1] - s[0]
    vpot = -(lam + c2) + data["pot"]
    up, um, _ = homogeneous_pair(vpot, h, gam)
    up = up / np.max(np.abs(up))
    return up, um


def build_deficiency(surface: OuterSurface) -> dict:
    """Cutoff Jacobi-field basis, its coefficient geometry, and the split.

    Coefficient order per band j: (end_0 +, end_0 -, end_1 +, end_1 -, ...).
    K0^{(j)} is spanned by the projections of the global geometric Jacobi
    fields; K1^{(j)} is its orthogonal complement.
    """
    n = surface.n
    prof = surface.profile
    s = surface.core_w.s
    data = grid_profile(n, s)
    phi, dphi, psi, dpsi = data["phi"], data["dphi"], data["psi"], data["dpsi"]
    k_ends = len(surface.ends)
    # geometric Jacobi fields of the core catenoid, conjugated
    conj = phi ** ((n - 2) / 2.0)
    fields = {
        0: [
            -(phi ** ((n - 4) / 2.0)) * dphi,  # vertical translation
            conj * (phi * dpsi - psi * dphi) / phi,  # dilation
        ],
        1: [
            phi ** (-n / 2.0),  # horizontal translation (per direction)
            conj * (psi * dpsi / phi + dphi),  # rotation (per direction)
        ],
    }
    # expansion windows at the two core ends; ends beyond the seed pair are
    # carried by their own glue charts and enter with zero core projection
    win_hi = (s >= s[-1] - 3.0) & (s <= s[-1] - 0.5)
    win_lo = (s <= s[0] + 3.0) & (s >= s[0] + 0.5)

    def project(gfield: np.ndarray, ell: int) -> np.ndarray:
        up, um = _homogeneous_profiles(n, ell, s)
        coeffs = np.zeros(2 * k_ends)
        for e_idx, win in ((0, win_hi), (1, win_lo)):
            if e_idx >= k_ends:
                break
            if e_idx == 1:
                gf = gfield[::-1]
                window = win_lo[::-1]
            else:
                gf = gfield
                window = win
            X = np.stack([up[window], um[window]], axis=1)
            c, *_ = np.linalg.lstsq(X, gf[window], rcond=None)
            coeffs[2 * e_idx : 2 * e_idx + 2] = c
        return coeffs

    K0 = {}
    K1 = {}
    for j in (0, 1):
        vecs = []
        for gfield in fields[j]:
            vecs.append(project(gfield, j))
        V = np.stack(vecs, axis=1)
        q, _ = np.linalg.qr(V)
        K0[j] = q
        full = np.eye(2 * k_ends)
        proj = full - q @ q.T
        # orthonormal basis of the complement
        u, sv, vt = np.linalg.svd(proj)
        K1[j] = u[:, : 2 * k_ends - q.shape[1]]
    return {"K0": K0, "K1": K1, "k_ends": k_ends, "dim_K": 2 * k_ends * (n + 1),
            "dim_K1": k_ends * (n + 1)}


def deficiency_field(surface: OuterSurface, j: int, coeffs: np.ndarray) -> np.ndarray:
    """Realize a band-j deficiency coefficient vector as a core profile."""
    n = surface.n
    s = surface.core_w.s
    up, um = _homogeneous_profiles(n, j, s)
    cut_hi = smooth_step(s - (surface.core_span - 4.0))
    cut_lo = cut_hi[::-1]
    out = coeffs[0] * cut_hi * up + coeffs[1] * cut_hi * um
    if coeffs.size > 2:
        out = out + coeffs[2] * cut_lo * up[::-1] + coeffs[3] * cut_lo * um[::-1]
    return out


# -- nondegeneracy ------------------------------------------------------------------


def _band_matrix_conjugated(n: int, ell: int, s: np.ndarray, delta: float) -> np.ndarray:
    """Dense band operator conjugated by the two-ended decay weight.

    Substituting w = e^{mu(s)} what, mu a smoothed delta |s|, maps the
    admissible space to bounded functions; Dirichlet rows then exclude any
    kernel decaying no faster than the weight with O(1) margin, so a small
    singular value detects genuine admissible kernel only.
    """
    data = grid_profile(n, s)
    c2 = ((n - 2) / 2.0) ** 2
    lam = ell * (ell + n - 2.0)
    h = s[1] - s[0]
    m = s.size
    mu_p = delta * s / np.sqrt(s * s + 1.0)
    mu_pp = delta * (1.0 / np.sqrt(s * s + 1.0) - s * s / (s * s + 1.0) ** 1.5)
    vpot = -(lam + c2) + data["pot"] + mu_pp + mu_p**2
    A = np.zeros((m, m))
    for i in range(1, m - 1):
        A[i, i - 1] = 1.0 / h**2 - mu_p[i] / h
        A[i, i] = -2.0 / h**2 + vpot[i]
        A[i, i + 1] = 1.0 / h**2 + mu_p[i] / h
    A[0, 0] = 1.0
    A[m - 1, m - 1] = 1.0
    return A


def nondegeneracy_check(
    surface: OuterSurface,
    delta: float,
    extra_fields: list | None = None,
    m: int = 800,
    threshold: float = 1e-6,
) -> float:
    """Normalized smallest singular value of the core operator on the
    decaying space, minimized over bands; raises if below threshold."""
    n = surface.n
    if not (-(n + 2) / 2.0 < delta < -n / 2.0):
        raise PreconditionError(f"delta={delta} outside the admissible interval")
    span = surface.core_span
    s = np.linspace(-span, span, m)
    mu = delta * np.sqrt(s * s + 1.0)
    weight = np.exp(mu)
    worst = np.inf
    for ell in range(0, surface.spectrum.L + 1):
        A = _band_matrix_conjugated(n, ell, s, delta)
        lam = ell * (ell + n - 2.0)
        gam = np.sqrt(lam + ((n - 2) / 2.0) ** 2)
        opscale = max(1.0, lam + ((n - 2) / 2.0) ** 2 + delta**2)
        if gam < abs(delta):
            # content decaying at only the indicial rate gamma_l < |delta| is
            # outside the admissible space yet invisible to local rows on a
            # truncated cylinder; quotient the end-decaying homogeneous pair
            up, um = _homogeneous_profiles(n, ell, s)
            slow = np.stack([um / weight, um[::-1] / weight], axis=1)
            slow[0, :] = 0.0
            slow[-1, :] = 0.0
            q, _ = np.linalg.qr(slow)
            comp = np.eye(m) - q @ q.T
            u2, sv2, _ = np.linalg.svd(comp)
            Q = u2[:, : m - q.shape[1]]
            sv = np.linalg.svd(A @ Q, compute_uv=False)
        else:
            sv = np.linalg.svd(A, compute_uv=False)
        worst = min(worst, sv[-1] / opscale)
    if extra_fields:
        s_f = np.linspace(-span, span, 4 * m)
        data = grid_profile(n, s_f)
        c2 = ((n - 2) / 2.0) ** 2
        h = s_f[1] - s_f[0]
        for ell, prof_fn in extra_fields:
            vals = prof_fn(s_f)
            lam = ell * (ell + n - 2.0)
            vpot = -(lam + c2) + data["pot"]
            res = np.empty_like(vals)
            res[1:-1] = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / h**2 + vpot[1:-1] * vals[1:-1]
            num = np.linalg.norm(res[1:-1]) / max(np.linalg.norm(vals[1:-1]), 1e-300)
            scale = np.abs(vpot).max()
            worst = min(worst, num / scale)
    if worst < threshold:
        raise ContractionError(
            f"outer surface degenerate: normalized sigma_min = {worst:.3e}"
        )
    return float(worst)


# -- core linear solve with the deficiency bookkeeping --------------------------------


def solve_outer_linear(
    surface: OuterSurface,
    f: CylinderField,
    h_I: SphereField | None,
    delta: float,
    ring_patch: GraphPatch | None = None,
):
    """Global linear solve in the decaying-plus-deficiency ansatz.

    The core part is solved band-wise with strict-decay closures, the
    low-band solution augmented by the band's K1 columns (coefficients
    returned); ring data is handled by the site-exterior solve when a site
    is active.  Returns (core CylinderField, K1 coefficient dict, site
    RadialField or None).
    """
    n = surface.n
    if not (-(n + 2) / 2.0 < delta < -n / 2.0):
        raise PreconditionError(f"delta={delta} outside the admissible interval")
    s = f.s
    data = grid_profile(n, s)
    c2 = ((n - 2) / 2.0) ** 2
    h = f.step
    m = s.size
    spec = f.spectrum
    bands = row_bands(spec)
    out = np.zeros_like(f.values)
    k1_coeffs: dict = {}
    sK1 = surface.deficiency["K1"]
    cut_hi = smooth_step(s - (surface.core_span - 4.0))
    cut_lo = cut_hi[::-1]
    weight = np.exp(delta * np.sqrt(s * s + 1.0))
    for i, ell in enumerate(bands):
        A = _band_matrix_conjugated(n, int(ell), s, delta)
        rhs = f.values[i] / weight
        rhs[0] = 0.0
        rhs[-1] = 0.0
        if ell <= 1:
            up, um = _homogeneous_profiles(n, int(ell), s)
            K1 = sK1[int(ell)]
            cols = []
            for c_idx in range(K1.shape[1]):
                cvec = K1[:, c_idx]
                prof_vals = (
                    cvec[0] * cut_hi * up
                    + cvec[1] * cut_hi * um
                    + (cvec[2] * cut_lo * up[::-1] + cvec[3] * cut_lo * um[::-1]
                       if cvec.size > 2 else 0.0)
                )
                cols.append(prof_vals)
            nc = len(cols)
            Abig = np.zeros((m + nc, m + nc))
            Abig[:m, :m] = A
            for c_idx, col in enumerate(cols):
                lcol = np.empty(m)
                lcol[1:-1] = (col[2:] - 2 * col[1:-1] + col[:-2]) / h**2 + (
                    -(spec.lam[ell] + c2) + data["pot"][1:-1]
                ) * col[1:-1]
                lcol[0] = 0.0
                lcol[-1] = 0.0
                Abig[:m, m + c_idx] = lcol / weight
                # orthogonality of the decaying part to the K1 window profile
                Abig[m + c_idx, :m] = col * weight * h
            rhs_big = np.concatenate([rhs, np.zeros(nc)])
            sol = np.linalg.solve(Abig, rhs_big)
            out[i] = weight * sol[:m] + sum(
                sol[m + c_idx] * cols[c_idx] for c_idx in range(nc)
            )
            k1_coeffs[(int(ell), i)] = sol[m:]
        else:
            out[i] = weight * np.linalg.solve(A, rhs)
    core = CylinderField(spec, s, out, f.pole)
    site_sol = None
    if h_I is not None:
        if surface.site is None and ring_patch is None:
            raise PreconditionError("ring data given but no active site")
        site_sol = site_exterior_solve(surface, h_I)
    return core, k1_coeffs, site_sol


# -- gluing site --------------------------------------------------------------------


def find_site(
    surface: OuterSurface, scales: Scales, margin: float = 1.3, r0_ratio: float = 180.0
) -> dict:
    """March outward along the top end to the first admissible gluing site.

    Beyond the hard bound |grad u| <= r_eps, the site tilt is pushed below
    r_eps^2 / r0 so the reference-plane tilt contributes below the matching
    tolerance at the inner ring; the fixed point then never needs a rotation
    of the glued pieces, and the new end stays parallel to the old plane.
    """
    n = surface.n
    end = surface.top_end()
    r_min_prev = surface.info.get("last_site_radius", 0.0)
    r_cap = 0.98 * end.a * np.exp(_end_splines(n)["logphi_max"])
    R = np.geomspace(max(2.0 * end.a, 1e-6), r_cap / margin, 600)
    h_prof, g_prof = end.height_profile(n, R)
    tilt_cap = min(scales.r_eps, 0.5 * scales.r_eps**2 / (r0_ratio * scales.r_eps))
    ok = np.abs(g_prof) < tilt_cap
    ok &= R > margin * max(r_min_prev * 3.0, 2.0 * end.a)
    idx = np.argmax(ok)
    if not ok[idx]:
        raise PreconditionError(
            "no admissible gluing site: end gradient never drops below the tilt cap"
        )
    r_site = float(R[idx] * margin)
    h_site, g_site = end.height_profile(n, np.array([r_site]))
    direction = np.zeros(n)
    direction[0] = 1.0
    center_xy = end.axis_center[:n] + r_site * direction
    return {
        "end": end,
        "r_site": r_site,
        "center_xy": center_xy,
        "height": float(end.plane_height + end.orientation * h_site[0]),
        "grad": float(abs(g_site[0])),
        "pole": direction,
    }


def assemble_outer(
    surface: OuterSurface,
    r0: float,
    p: np.ndarray,
    scales: Scales,
    m_radial: int = 150,
) -> tuple:
    """Split off the compact site patch around the ambient point p.

    p must lie on the top end with |grad u| <= r_eps over the site plane
    (the end's asymptotic plane); returns (surface with active site, patch)
    with the patch rebased so u(0) = 0.
    """
    n = surface.n
    end = surface.top_end()
    xy = np.asarray(p, dtype=float)[:n]
    r_site = float(np.linalg.norm(xy - end.axis_center[:n]))
    h_site, g_site = end.height_profile(n, np.array([r_site]))
    if abs(g_site[0]) > scales.r_eps:
        raise PreconditionError(
            f"site rejected: |grad u| = {abs(g_site[0]):.3e} exceeds r_eps = {scales.r_eps:.3e}"
        )
    if 4 * r0 > 0.5 * r_site:
        raise PreconditionError("r0 too large for the site radius")
    pole = (xy - end.axis_center[:n]) / r_site
    spec = surface.spectrum
    g = angular_grid(spec)
    grid = RadialGrid(scales.r_eps / 8.0, r0, m_radial)
    R_amb = np.sqrt(
        r_site**2 + grid.r[:, None] ** 2 + 2 * r_site * grid.r[:, None] * g.t[None, :]
    )
    h_prof, _ = end.height_profile(n, R_amb.ravel())
    u_vals = end.orientation * h_prof.reshape(R_amb.shape) - float(end.orientation * h_site[0])
    # rebase so u(0) = 0: subtract the interpolated center value
    u_field = RadialField(spec, grid, rows_from_collocation(u_vals, RadialField.zeros(spec, grid, pole=pole), g), pole=pole)
    c2 = _patch_c2(u_field, grid)
    patch = GraphPatch(
        n=n, r0=r0, grid=grid, u=u_field, kind="ball",
        grad0=float(abs(g_site[0])), c2_norm=c2, eta0=max(1.0, 2 * c2),
        frame_center=np.concatenate([xy, [end.plane_height + end.orientation * h_site[0]]]),
    )
    R_out = 0.45 * r_site
    ext_grid = RadialGrid(r0, R_out, m_radial)
    R_amb_e = np.sqrt(
        r_site**2 + ext_grid.r[:, None] ** 2 + 2 * r_site * ext_grid.r[:, None] * g.t[None, :]
    )
    h_e, _ = end.height_profile(n, R_amb_e.ravel())
    u_e = end.orientation * h_e.reshape(R_amb_e.shape) - float(end.orientation * h_site[0])
    ext_field = RadialField(spec, ext_grid, rows_from_collocation(u_e, RadialField.zeros(spec, ext_grid, pole=pole), g), pole=pole)
    surface.site = {
        "end": end,
        "patch": patch,
        "pole": pole,
        "center_xy": xy,
        "height": float(end.plane_height + end.orientation * h_site[0]),
        "r_site": r_site,
        "exterior_grid": ext_grid,
        "exterior_u": ext_field,
        "r0": r0,
        "scales": scales,
    }
    return surface, patch


def _patch_c2(u: RadialField, grid: RadialGrid) -> float:
    d1 = (u.values @ grid.D.T) / grid.r
    d2 = (u.values @ (grid.D @ grid.D).T) / grid.r**2
    return float(np.max(np.abs(u.values)) + np.max(np.abs(d1)) + np.max(np.abs(d2)))


# -- site-exterior solves --------------------------------------------------------------


def _exterior_operator(surface: OuterSurface) -> BandOperator:
    site = surface.site
    grid = site["exterior_grid"]
    ub = site["exterior_u"]
    slope = (grid.D @ ub.values[0]) / grid.r
    return BandOperator(surface.spectrum, grid, slope)


def _solve_exterior_band(op: BandOperator, ell: int, f: np.ndarray, ring_value: float, n: int):
    A = op.matrix_scaled(ell).copy()
    rhs = np.asarray(f, dtype=float) * op.row_scale
    A[0, :] = 0.0
    A[0, 0] = 1.0
    rhs[0] = ring_value
    # decaying-multipole closure at the outer truncation
    A[-1, :] = op.grid.D[-1]
    A[-1, -1] -= float(2 - n - ell)
    rhs[-1] = 0.0
    return np.linalg.solve(A, rhs)


def site_exterior_solve(
    surface: OuterSurface, h_I: SphereField, f: RadialField | None = None
) -> RadialField:
    """Linear exterior solve with full Dirichlet ring data."""
    site = surface.site
    if site is None:
        raise PreconditionError("no active gluing site")
    op = _exterior_operator(surface)
    grid = site["exterior_grid"]
    spec = surface.spectrum
    n = surface.n
    bands = row_bands(spec)
    ring = np.concatenate([h_I.low, h_I.zonal])
    out = np.zeros((spec.row_count(), grid.m))
    for i, ell in enumerate(bands):
        src = np.zeros(grid.m) if f is None else f.values[i]
        out[i] = _solve_exterior_band(op, int(ell), src, float(ring[i]), n)
    return RadialField(spec, grid, out, pole=site["pole"])


def solve_outer_nonlinear(
    surface: OuterSurface, h_I: SphereField, tol: float, max_iter: int = 30
) -> OuterSurface:
    """Minimal perturbation of the outer piece with ring data h_I.

    Site-exterior Picard iteration on the mean-curvature defect; far planes
    are untouched by construction and their drift is re-measured.  The
    perturbed field is stored on the active site as 'w_hI'.
    """
    site = surface.site
    if site is None:
        raise PreconditionError("no active gluing site")
    spec = surface.spectrum
    n = surface.n
    grid = site["exterior_grid"]
    g = angular_grid(spec)
    op = _exterior_operator(surface)
    base = site["exterior_u"]
    base_patch = GraphPatch(
        n=n, r0=grid.r_out / 2.0, grid=grid, u=base, kind="annulus",
        frame_center=np.concatenate([site["center_xy"], [site["height"]]]),
    )
    from .neck import mean_curvature_graph

    H_base_vals = mean_curvature_graph(base_patch)

    w = site_exterior_solve(surface, h_I)
    prev = None
    converged = h_I.holder_norm() == 0.0
    it = 0
    contractions = []
    for it in range(1, max_iter + 1):
        if converged:
            break
        H_vals = mean_curvature_graph(base_patch, w=w)
        lam_w = op.apply(w)
        q = RadialField(spec, grid, lam_w.values - rows_from_collocation(H_vals - H_base_vals, w, g), w.pole)
        w_new = site_exterior_solve(surface, h_I, f=q)
        dnorm = float(np.max(np.abs(w_new.values - w.values)))
        scale = max(float(np.max(np.abs(w_new.values))), 1e-300)
        if prev is not None and prev > 0:
            contractions.append(dnorm / prev)
        stalled = prev is not None and dnorm <= 1e-5 * scale and dnorm > 0.5 * prev
        prev = dnorm
        w = w_new
        if it >= 2 and (dnorm <= 1e-9 * scale or stalled):
            converged = True
            break
    if not converged:
        raise ContractionError("outer nonlinear iteration did not settle")

    total_patch = GraphPatch(
        n=n, r0=grid.r_out / 2.0, grid=grid, u=base + w, kind="annulus",
        frame_center=base_patch.frame_center,
    )
    H_or = mean_curvature_graph(total_patch, oracle=True)
    sup_H = float(np.max(np.abs(H_or[3:-3])))
    P = graph_orbit_points(grid.r, g, axial_collocation(base + w, g))
    surf2 = matrix_surface(P, g, grid.D)
    sup_A = float(np.sqrt(np.max(surf2.second_fundamental_sq(n))))
    res_rel = sup_H / max(sup_A, 1.0 / grid.r_out)
    if res_rel > tol:
        raise ResidualError(f"outer residual {res_rel:.3e} exceeds tol={tol:.3e}")
    site["w_hI"] = w
    site["outer_residual_rel"] = res_rel
    site["outer_iterations"] = it
    # plane drift: the perturbation decays by construction; report its far tail
    tail = float(np.max(np.abs(w.values[:, -1])))
    site["plane_drift"] = tail
    return surface


def interior_ball_solve(surface: OuterSurface, h_I: SphereField) -> RadialField:
    """Model interior solve on the site ball with Dirichlet ring data."""
    site = surface.site
    patch = site["patch"]
    spec = surface.spectrum
    n = surface.n
    r0 = site["r0"]
    grid = RadialGrid(1e-3 * r0, r0, patch.grid.m)
    Pm = patch.grid.interp_matrix(grid.r)
    slope = (patch.grid.D @ patch.u.values[0]) / patch.grid.r
    op = BandOperator(spec, grid, Pm @ slope)
    bands = row_bands(spec)
    ring = np.concatenate([h_I.low, h_I.zonal])
    out = np.zeros((spec.row_count(), grid.m))
    for i, ell in enumerate(bands):
        A = op.matrix_scaled(int(ell)).copy()
        rhs = np.zeros(grid.m)
        A[-1, :] = 0.0
        A[-1, -1] = 1.0
        rhs[-1] = float(ring[i])
        # regularity at the puncture-free center: w_rho = l w
        A[0, :] = op.grid.D[0]
        A[0, 0] -= float(ell)
        rhs[0] = 0.0
        out[i] = np.linalg.solve(A, rhs)
    return RadialField(spec, grid, out, pole=site["pole"])


def cauchy_U(surface: OuterSurface, h_I: SphereField, neck: NeckPiece):
    """Solved and simple outer Cauchy data on the ring (derivative slot).

    U_eps compares the outer piece's perturbation slope with the neck
    piece's outer deviation slope; U_0 uses the two linear model problems
    with the same ring data.
    """
    site = surface.site
    if site is None or "w_hI" not in site:
        raise PreconditionError("solve_outer_nonlinear must run before cauchy_U")
    w = site["w_hI"]
    u_eps = w.r_dr_trace(0) - neck.cauchy_outer[1]
    w0 = site_exterior_solve(surface, h_I)
    wt0 = interior_ball_solve(surface, h_I)
    u_0 = w0.r_dr_trace(0) - wt0.r_dr_trace(-1)
    gap = (u_eps - u_0).holder_norm()
    info = {
        "gap": gap,
        "gap_over_scale": gap / neck.scales.r_eps ** (surface.n - 2.0 / 3.0),
    }
    return u_eps, u_0, info
