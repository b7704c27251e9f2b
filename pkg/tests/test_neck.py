import numpy as np
import pytest
from scipy.integrate import quad

from minsurflab.catenoid import PreconditionError
from minsurflab.neck import (
    RigidParams,
    angular_grid,
    axial_collocation,
    build_neck_piece,
    build_sigma_eps,
    cauchy_T,
    flat_patch,
    green_function,
    linearized_graph_op,
    mean_curvature_graph,
    poisson_neck,
    simple_cauchy_neck,
)
from minsurflab.profile import compute_scales, profile_values
from minsurflab.radial import RadialField, RadialGrid, weighted_norm
from minsurflab.spectral import SphereField, project_high

N = 3
EPS = 1e-6
R0 = 0.35


@pytest.fixture(scope="module")
def scales(profile):
    return compute_scales(profile, EPS)


@pytest.fixture(scope="module")
def patch(spectrum, scales):
    return flat_patch(spectrum, R0, m=150, r_in=scales.r_eps / 4)


@pytest.fixture(scope="module")
def green(patch, scales):
    return green_function(patch, scales.r_eps / 4)


class TestMeanCurvature:
    def test_zero_graph(self, patch):
        H = mean_curvature_graph(patch)
        assert np.max(np.abs(H)) < 1e-10

    def test_affine_graph_is_minimal(self, spectrum, scales):
        p = flat_patch(spectrum, R0, m=120, r_in=1e-2 * R0)
        p.u.values[0] = 0.02  # constant
        p.u.values[1] = 0.05 * p.grid.r  # linear tilt
        H = mean_curvature_graph(p)
        # spectral roundoff is amplified by the inverse metric at the inner
        # collar; measure against the local curvature scale 1/r
        assert np.max(np.abs(H) * p.grid.r[:, None]) < 1e-6

    def test_catenoid_end_height_second_order(self, spectrum, profile):
        """Sampled catenoid-end height: the solver-path H converges to 0 at
        second order under refinement of the radial grid."""
        from minsurflab.geometry import graph_orbit_points, uniform_surface
        from minsurflab.outer import _end_splines

        spl = _end_splines(N)
        g = angular_grid(spectrum)
        sups, steps = [], []
        for m in (60, 120):
            r = np.linspace(2.0, 4.0, m)
            s_of = spl["s_of_logphi"](np.log(r))
            u = (spl["psi_inf"] - spl["psi"](s_of))[:, None] * np.ones((1, g.t.size))
            P = graph_orbit_points(r, g, u)
            H = uniform_surface(P, g, r[1] - r[0], order=2).mean_curvature(N)
            sups.append(np.max(np.abs(H[2:-2])))
            steps.append(r[1] - r[0])
        assert sups[1] < sups[0] / 3.0  # second-order convergence to zero
        curv_scale = 1.0  # |A| <= sqrt(6) phi^-3 <= 0.31 on this window
        assert sups[1] <= 10.0 * steps[1] ** 2 * curv_scale


class TestLinearizedOp:
    def test_flat_reduces_to_laplacian(self, spectrum, patch, rng):
        w = RadialField.zeros(spectrum, patch.grid)
        w.values[N + 1] = np.exp(-0.5 * ((np.log(patch.grid.r) - np.log(0.02)) / 0.7) ** 2)
        out = linearized_graph_op(patch, w)
        r = patch.grid.r
        prof = w.values[N + 1]
        D = patch.grid.D
        lam = spectrum.lam[2]
        exact = (D @ (D @ prof) + (N - 2) * (D @ prof) - lam * prof) / r**2
        assert np.max(np.abs(out.values[N + 1] - exact)) < 1e-7 * np.max(np.abs(exact))

    def test_directional_derivative_oracle(self, spectrum, scales):
        """(H(u + t w) - H(u))/t -> Lambda_u w at first order in t, for a
        radial background."""
        p = flat_patch(spectrum, R0, m=140, r_in=R0 * 2e-2)
        p.u.values[0] = 0.05 * np.exp(-0.5 * ((p.grid.r - 0.12) / 0.05) ** 2)
        w = RadialField.zeros(spectrum, p.grid)
        w.values[0] = np.exp(-0.5 * ((p.grid.r - 0.15) / 0.06) ** 2)
        lam_w = linearized_graph_op(p, w)
        g = angular_grid(spectrum)
        H0 = mean_curvature_graph(p)
        errs = []
        for t in (1e-5, 5e-6):
            pt = flat_patch(spectrum, R0, m=140, r_in=R0 * 2e-2)
            pt.u.values[:] = p.u.values
            Ht = mean_curvature_graph(pt, w=w * t)
            dd = (Ht - H0) / t
            from minsurflab.neck import rows_from_collocation

            rows = rows_from_collocation(dd, w, g)
            errs.append(np.max(np.abs(rows[0][5:-5] - lam_w.values[0][5:-5])))
        assert errs[1] < 0.7 * errs[0]  # observed order t

    def test_discrete_symmetry(self, spectrum, rng):
        p = flat_patch(spectrum, R0, m=120, r_in=R0 * 3e-2)
        p.u.values[0] = 0.03 * np.exp(-0.5 * ((p.grid.r - 0.15) / 0.06) ** 2)
        grid = p.grid
        rho = grid.rho
        # smooth compactly-supported band fields
        envelope = np.exp(-0.5 * ((rho - rho.mean()) / (0.09 * (rho[-1] - rho[0]))) ** 2)
        w = RadialField.zeros(spectrum, grid)
        v = RadialField.zeros(spectrum, grid)
        w.values[N + 1] = envelope * np.sin(2 * rho)
        v.values[N + 1] = envelope * np.cos(3 * rho)
        Lw = linearized_graph_op(p, w)
        Lv = linearized_graph_op(p, v)
        meas = grid.quad_rho * grid.r**N  # Lebesgue r^{n-1} dr = r^n d rho
        a = np.sum(meas * w.values[N + 1] * Lv.values[N + 1])
        b = np.sum(meas * v.values[N + 1] * Lw.values[N + 1])
        assert abs(a - b) <= 1e-8 * max(abs(a), abs(b))


class TestGreenFunction:
    def test_flat_closed_form(self, patch, green, scales):
        rin = scales.r_eps / 4
        c1 = rin ** (2 - N) / (rin ** (2 - N) - R0 ** (2 - N))
        exact = c1 * (green.grid.r ** (2 - N) - R0 ** (2 - N))
        assert np.max(np.abs(green.values - exact)) < 1e-10 * np.max(np.abs(exact))
        assert green.a0 == pytest.approx(-c1 * R0 ** (2 - N), rel=1e-6)

    def test_zero_on_outer_boundary(self, green):
        assert abs(green.values[-1]) < 1e-12

    def test_flux_normalization(self, green):
        from minsurflab.spectral import sphere_area

        target = -(N - 2) * sphere_area(N)
        assert abs(green.flux / target - 1.0) < 0.02

    def test_asymptotic_fit_exponent(self, green):
        # n = 3: defect growth consistent with r log(1/r): fitted exponent
        # near 1 over the mid-decade
        assert 0.5 < green.fit_exponents[0] < 1.5

    def test_inner_truncation_stability(self, patch, scales, green):
        g2 = green_function(patch, scales.r_eps / 8)
        probe = np.geomspace(scales.r_eps / 2, R0 / 2, 40)
        v1 = green.at(probe)
        v2 = g2.at(probe)
        assert np.max(np.abs(v1 - v2) / np.abs(v1)) < 0.01

    def test_rejects_large_inner_radius(self, patch):
        with pytest.raises(PreconditionError):
            green_function(patch, 0.3 * R0)


class TestSigmaEps:
    def test_zero_parameters_give_green_term(self, patch, scales, green):
        sig = build_sigma_eps(patch, scales, RigidParams.zeros(N), green=green)
        expect = EPS / (N - 2) * (green.at(sig.grid.r) - green.a0)
        assert np.max(np.abs(sig.u.values[0] - expect)) < 1e-12 * np.max(np.abs(expect))

    def test_pure_vertical_shift(self, patch, scales, green):
        d = 0.3 * scales.r_eps**2
        sig0 = build_sigma_eps(patch, scales, RigidParams.zeros(N), green=green)
        sigd = build_sigma_eps(patch, scales, RigidParams(np.zeros(N), np.zeros(N), d, 0.0), green=green)
        diff = sigd.u.values[0] - sig0.u.values[0]
        assert np.max(np.abs(diff - d)) < 1e-15

    def test_pure_coefficient_shift(self, patch, scales, green):
        e = 0.2 * scales.r_eps**2 * scales.r_eps ** (N - 2)
        sig = build_sigma_eps(patch, scales, RigidParams(np.zeros(N), np.zeros(N), 0.0, e), green=green)
        near = sig.grid.r < 3 * scales.r_eps
        coef = np.polyfit(sig.grid.r[near] ** (2 - N), sig.u.values[0][near], 1)[0]
        assert coef == pytest.approx((EPS + e) / (N - 2), rel=0.01)

    def test_deviation_envelope_shape(self, patch, scales, green):
        sig = build_sigma_eps(patch, scales, RigidParams.zeros(N), green=green)
        c0, c1 = sig.info["sigma_shape_constants"]
        assert c0 < 5.0 and c1 < 10.0

    def test_norm_precondition(self, patch, scales, green):
        big = RigidParams(np.zeros(N), np.zeros(N), 5.0 * scales.r_eps**2, 0.0)
        with pytest.raises(PreconditionError):
            build_sigma_eps(patch, scales, big, green=green, kappa=1.0)


class TestAnnulusMixed:
    def test_zero_source(self, spectrum, patch, scales):
        from minsurflab.neck import solve_annulus_mixed

        f = RadialField.zeros(spectrum, patch.grid)
        w = solve_annulus_mixed(patch, f, scales.r_eps, -7.0 / 3.0)
        assert np.max(np.abs(w.values)) == 0.0

    def test_radial_closed_form_oracle(self, spectrum, patch, scales):
        """u = 0, radial source: exact quadrature solution of the regular-
        selection problem to 1e-8."""
        from minsurflab.neck import solve_annulus_mixed

        r_in = scales.r_eps
        grid = RadialGrid(r_in, R0, 160)
        base = flat_patch(spectrum, R0, m=160, r_in=r_in)
        f = RadialField.zeros(spectrum, grid)

        def source(r):
            return np.exp(-0.5 * ((np.log(r) - np.log(0.01)) / 0.8) ** 2)

        f.values[0] = source(grid.r)
        w = solve_annulus_mixed(base, f, r_in, -7.0 / 3.0)

        def inner_integral(sigma):
            val, _ = quad(lambda tau: tau ** (N - 1) * source(tau), r_in, sigma,
                          epsabs=1e-14, epsrel=1e-12)
            return val

        exact = np.array([
            -quad(lambda sg: sg ** (1 - N) * inner_integral(sg), r, R0,
                  epsabs=1e-14, epsrel=1e-12)[0]
            for r in grid.r
        ])
        err = np.max(np.abs(w.values[0] - exact)) / np.max(np.abs(exact))
        assert err < 1e-8

    def test_bound_constant_stable_in_inner_radius(self, spectrum, patch, scales):
        from minsurflab.neck import solve_annulus_mixed

        nu = -7.0 / 3.0
        ratios = []
        for r in (scales.r_eps / 2, scales.r_eps, 2 * scales.r_eps):
            grid = RadialGrid(r, R0, 150)
            f = RadialField.zeros(spectrum, grid)
            f.values[N + 1] = (grid.r / r) ** (nu - 2) * np.exp(
                -0.5 * ((np.log(grid.r / r)) / 1.0) ** 2
            )
            w = solve_annulus_mixed(patch, f, r, nu)
            ratios.append(w.info["bound_ratio"])
        ratios = np.array(ratios)
        assert ratios.max() / ratios.min() <= 2.0

    def test_rejects_bad_weight(self, spectrum, patch, scales):
        from minsurflab.neck import solve_annulus_mixed

        f = RadialField.zeros(spectrum, patch.grid)
        with pytest.raises(PreconditionError):
            solve_annulus_mixed(patch, f, scales.r_eps, -0.5)


class TestPoisson:
    def test_zero_data(self, spectrum, scales):
        p = flat_patch(spectrum, R0, m=150, r_in=scales.r_eps)
        w = poisson_neck(p, scales, RigidParams.zeros(N), SphereField.zeros(spectrum))
        assert np.max(np.abs(w.values)) == 0.0

    def test_flat_harmonic_identity_without_cutoff(self, spectrum, scales):
        p = flat_patch(spectrum, R0, m=150, r_in=scales.r_eps)
        h = SphereField.zonal_band(spectrum, 2, 1.0)
        h = h * (0.3 * scales.r_eps**2 / h.holder_norm())
        w = poisson_neck(p, scales, RigidParams.zeros(N), h, cutoff=False)
        a = (2 - N) / 2.0 - 2.5
        expect = h.zonal[0] * (p.grid.r / scales.r_eps) ** a
        assert np.max(np.abs(w.values[N + 1] - expect)) < 1e-8 * np.max(np.abs(expect))

    def test_trace_identity_with_cutoff(self, spectrum, scales):
        p = flat_patch(spectrum, R0, m=150, r_in=scales.r_eps)
        h = SphereField.zonal_band(spectrum, 2, 1.0) + SphereField.zonal_band(spectrum, 4, -0.5)
        h = h * (0.3 * scales.r_eps**2 / h.holder_norm())
        w = poisson_neck(p, scales, RigidParams.zeros(N), h)
        tr = project_high(w.trace(0))
        assert np.allclose(tr.zonal, h.zonal, rtol=1e-10, atol=1e-22)

    def test_slope_defect_shrinks_with_eps(self, spectrum, profile):
        vals = []
        for eps in (1e-4, 1e-6):
            sc = compute_scales(profile, eps)
            p = flat_patch(spectrum, R0, m=150, r_in=sc.r_eps)
            h = SphereField.zonal_band(spectrum, 2, 1.0)
            h = h * (0.3 * sc.r_eps**2 / h.holder_norm())
            w = poisson_neck(p, sc, RigidParams.zeros(N), h)
            vals.append(w.info["trace_defect_scaled"])
        # defect / (|h| (r^{n+nu} + r^{2/3})) stays bounded as eps shrinks
        assert max(vals) < 10.0

    def test_rejects_low_modes(self, spectrum, scales):
        p = flat_patch(spectrum, R0, m=150, r_in=scales.r_eps)
        with pytest.raises(PreconditionError):
            poisson_neck(p, scales, RigidParams.zeros(N), SphereField.constant(spectrum, 1e-9))


class TestNeckPiece:
    def test_zero_data_ball(self, spectrum, patch, scales):
        h0 = SphereField.zeros(spectrum)
        piece = build_neck_piece(patch, scales, RigidParams.zeros(N), h0, h0, tol=5e-3)
        assert piece.residual_rel <= 5e-3
        v_norm = piece.info["v_weighted_norm"]
        # correction stays within a factor 10 of the contraction ball shape
        assert v_norm <= 10.0 * piece.info["ball_radius"] * 1e3 or v_norm < 1e-6

    def test_outer_trace_matches_ring_data(self, spectrum, patch, scales):
        h0 = SphereField.zeros(spectrum)
        hI = SphereField.zonal_band(spectrum, 2, 1.0)
        hI = hI * (0.1 * scales.r_eps**2 / hI.holder_norm())
        piece = build_neck_piece(patch, scales, RigidParams.zeros(N), hI, h0, tol=5e-3)
        outer_val = piece.cauchy_outer[0]
        # u0 = 0 here: outer trace equals h_I by construction
        assert np.max(np.abs(outer_val.zonal - hI.zonal)) < 1e-12 * max(1e-30, np.max(np.abs(hI.zonal)))

    def test_triple_norm_precondition(self, spectrum, patch, scales):
        h0 = SphereField.zeros(spectrum)
        big = RigidParams(np.zeros(N), np.zeros(N), 3.0 * scales.r_eps**2, 0.0)
        with pytest.raises(PreconditionError):
            build_neck_piece(patch, scales, big, h0, h0, tol=5e-3, kappa=1.0)

    def test_nu_range(self, spectrum, patch, scales):
        h0 = SphereField.zeros(spectrum)
        with pytest.raises(PreconditionError):
            build_neck_piece(patch, scales, RigidParams.zeros(N), h0, h0, tol=5e-3, nu=-1.0)


class TestCauchyT:
    def test_simple_map_zero(self, spectrum, scales):
        val, slope = simple_cauchy_neck(scales, RigidParams.zeros(N), SphereField.zeros(spectrum))
        assert val.holder_norm() == 0.0
        assert slope.low[0] == pytest.approx(-EPS * scales.r_eps ** (2 - N), rel=1e-14)

    def test_pure_coefficient_shift_slope(self, spectrum, scales):
        e = 0.1 * scales.r_eps**2 * scales.r_eps ** (N - 2)
        val, slope = simple_cauchy_neck(
            scales, RigidParams(np.zeros(N), np.zeros(N), 0.0, e), SphereField.zeros(spectrum)
        )
        base = -EPS * scales.r_eps ** (2 - N)
        assert slope.low[0] - base == pytest.approx(-e * scales.r_eps ** (2 - N), rel=1e-12)

    def test_gap_bounded(self, spectrum, patch, scales):
        h0 = SphereField.zeros(spectrum)
        h2 = SphereField.zonal_band(spectrum, 2, 1.0)
        h2 = h2 * (0.3 * scales.r_eps**2 / h2.holder_norm())
        piece = build_neck_piece(patch, scales, RigidParams.zeros(N), h0, h2, tol=5e-3)
        te, t0 = cauchy_T(piece)
        assert piece.info["cauchy_gap_over_reps2"] < 20.0
