"""Connection matrices of normalized curves: generic, CM, extensions."""

import mpmath as mp
import pytest
from fractions import Fraction

from gmconn.constfield import WitnessError
from gmconn.gaussmanin import (
    CMClaim, EllipticContext, ExtensionPoint, GaussManinError,
    TwoTorsionError, adjoint_connection, cm_claim, cm_elliptic_context,
    cm_gamma_sum, cm_intermediate_residuals, cm_structure,
    cm_symmetric_power_check, cm_theta, cs_differential_residual,
    eigenvalue_forms, eigenvector_matrix, elliptic_context,
    endomorphism_frame_connection, extension_class_image,
    extension_connection, extension_pairing_rows, extension_point,
    extension_structure, loop_integral, relative_kummer_model,
    second_kind_reduction_residuals, sym_power_connection,
    sym_power_vectors, theta_presentation, third_kind_image)
from gmconn.hodge import (check_connection_structure, conjugate_connection,
                          dlog_pi, omega_H)
from gmconn.hodgetate import canonical_connection, log_structure
from gmconn.weierstrass import CM_TABLE

GENERIC_TAU = mp.mpc("0.21", "1.37")
SECOND_TAU = mp.mpc("-0.11", "1.03")


@pytest.fixture(scope="module")
def gen_ec():
    return elliptic_context(GENERIC_TAU, digits=30)


@pytest.fixture(scope="module")
def cm_ecs():
    return {D: cm_elliptic_context(D, digits=35) for D in (1, 2, 3, 7)}


@pytest.fixture(scope="module")
def ext_setup():
    ec = elliptic_context(SECOND_TAU, digits=30)
    with mp.workdps(45):
        z0v = (mp.mpf("0.27") * ec.curve.omega1
               + mp.mpf("0.13") * ec.curve.omega2)
    pt = extension_point(ec, z0v)
    return ec, pt


def _strict_zero(form):
    return form.is_zero(strict=True)


class TestGenericFrames:
    def test_de_rham_shape(self, gen_ec):
        kap = gen_ec.kappa()
        m = gen_ec.de_rham_matrix().matrix
        assert m[0][0].is_exactly_zero() and m[1][1].is_exactly_zero()
        assert (m[1][0] - kap.smul(3)).is_exactly_zero()
        assert (m[0][1] - kap.smul(gen_ec.a)).is_exactly_zero()

    def test_kappa_two_presentations_agree(self, gen_ec):
        alt = gen_ec.b.d().smul(1 / (4 * gen_ec.a * gen_ec.a))
        assert (gen_ec.kappa() + alt).reduce().is_exactly_zero()

    def test_homology_entries_match_written_form(self, gen_ec):
        ec = gen_ec
        tp = ec.ctx.gen("twopii") ** -1
        kap = ec.kappa()
        o1, o2, e1, e2, a = ec.om1, ec.om2, ec.eta1, ec.eta2, ec.a
        expected = [
            [(o2.d().smul(0) + e1.d().smul(o2 * tp) - o1.d().smul(e2 * tp)
              + kap.smul((a * o1 * o2 - 3 * e1 * e2) * tp)),
             (e2.d().smul(o2 * tp) - o2.d().smul(e2 * tp)
              + kap.smul((a * o2 * o2 - 3 * e2 * e2) * tp))],
            [(o1.d().smul(e1 * tp) - e1.d().smul(o1 * tp)
              + kap.smul((3 * e1 * e1 - a * o1 * o1) * tp)),
             (o2.d().smul(e1 * tp) - e2.d().smul(o1 * tp)
              + kap.smul((3 * e1 * e2 - a * o1 * o2) * tp))],
        ]
        got = gen_ec.homology_matrix().matrix
        for i in range(2):
            for j in range(2):
                assert (got[i][j] - expected[i][j]).reduce().is_exactly_zero()

    def test_homology_trace_is_dlog_pi(self, gen_ec):
        m = gen_ec.homology_matrix().matrix
        tr = (m[0][0] + m[1][1] - dlog_pi(gen_ec.ctx)).reduce()
        assert _strict_zero(tr)

    def test_duality_residuals_vanish(self, gen_ec):
        res = gen_ec.duality_residuals()
        for row in res:
            for entry in row:
                assert _strict_zero(entry)

    def test_structures_pass_checker_and_span_bound(self, gen_ec):
        for H, conn in ((gen_ec.de_rham_structure(),
                         gen_ec.de_rham_matrix()),
                        (gen_ec.homology_structure(),
                         gen_ec.homology_matrix())):
            report = check_connection_structure(H, conn)
            assert report.ok, report.pretty()
            assert omega_H(H, conn).within_bound

    def test_period_ratio_stays_free_generically(self, gen_ec):
        ratio = gen_ec.om2 / gen_ec.om1
        assert not ratio.d().reduce().is_zero(strict=True)

    def test_de_rham_entries_wedge_to_zero(self, gen_ec):
        m = gen_ec.de_rham_matrix().matrix
        assert m[1][0].wedge(m[0][1]).is_exactly_zero()

    def test_low_pole_representatives_rederived(self, gen_ec):
        rep = second_kind_reduction_residuals(gen_ec)
        assert rep["matched"]
        for c in rep["omega"] + rep["phi"]:
            assert c.num.is_zero()


class TestLoopIntegralOracle:
    def test_frame_pairing_signs(self, gen_ec):
        nc = gen_ec.curve
        with mp.workdps(55):
            pairs = (((1, 0), nc.omega1, nc.eta1),
                     ((0, 1), nc.omega2, nc.eta2))
            for cyc, om, eta in pairs:
                assert abs(loop_integral(nc, "omega", cyc) + om) < mp.mpf(
                    "1e-30")
                assert abs(loop_integral(nc, "phi", cyc) - eta) < mp.mpf(
                    "1e-30")

    def test_third_kind_loops_are_integer_shifted(self, ext_setup):
        ec, pt = ext_setup
        nc = ec.curve
        with mp.workdps(55):
            twopii = 2 * mp.pi * mp.mpc(0, 1)
            for cyc, om, eta in (((1, 0), nc.omega1, nc.eta1),
                                 ((0, 1), nc.omega2, nc.eta2)):
                val = loop_integral(nc, "psi", cyc, point=pt)
                base = pt.z0.value() * eta - pt.zeta0.value() * om
                k = (val - base) / twopii
                assert abs(k - mp.nint(mp.re(k))) < mp.mpf("1e-25")

    def test_point_tuple_matches_extension_point(self, ext_setup):
        ec, pt = ext_setup
        nc = ec.curve
        with mp.workdps(50):
            v1 = loop_integral(nc, "psi", (1, 0), point=pt)
            v2 = loop_integral(nc, "psi", (1, 0),
                               point=(pt.alpha.value(), pt.beta.value()))
            assert abs(v1 - v2) < mp.mpf("1e-30")

    def test_unknown_kind_rejected(self, gen_ec):
        with pytest.raises(GaussManinError):
            loop_integral(gen_ec.curve, "sigma")


@pytest.mark.parametrize("D", [1, 2, 3, 7])
class TestCMContexts:
    def test_certificate_reduces_dlog_period(self, cm_ecs, D):
        assert _strict_zero(cs_differential_residual(cm_ecs[D]))

    def test_period_ratio_is_declared_algebraic(self, cm_ecs, D):
        ec = cm_ecs[D]
        ratio = ec.om2 / ec.om1
        assert (ratio - ec.cm.tau).is_zero(strict=True)
        assert ratio.d().reduce().is_zero(strict=True)

    def test_invariant_differentials_vanish(self, cm_ecs, D):
        ec = cm_ecs[D]
        assert ec.a.d().reduce().is_zero(strict=True)
        assert ec.b.d().reduce().is_zero(strict=True)
        for row in ec.de_rham_matrix().matrix:
            for entry in row:
                assert entry.reduce().is_zero(strict=True)

    def test_quasi_period_scaling_identity(self, cm_ecs, D):
        res = cm_intermediate_residuals(cm_ecs[D])
        assert _strict_zero(res["quasi_scaling"])

    def test_inverse_period_identity(self, cm_ecs, D):
        res = cm_intermediate_residuals(cm_ecs[D])
        assert res["inverse_period"].is_zero(strict=True)
        assert _strict_zero(res["inverse_period_d"])

    def test_eigenvector_identities(self, cm_ecs, D):
        res = cm_intermediate_residuals(cm_ecs[D])
        for key in ("eigen_u", "eigen_v"):
            for entry in res[key]:
                assert _strict_zero(entry)

    def test_eigenvalue_forms_are_the_expected_pair(self, cm_ecs, D):
        ec = cm_ecs[D]
        lam_u, lam_v = eigenvalue_forms(ec)
        assert _strict_zero((lam_u - ec.dlog(ec.om1)).reduce())
        assert _strict_zero(
            (lam_v - dlog_pi(ec.ctx) + ec.dlog(ec.om1)).reduce())

    def test_claim_displays(self, cm_ecs, D):
        claim = cm_claim(cm_ecs[D], 2)
        assert claim.display_consistent
        assert claim.gamma_display_consistent
        # the variant with the larger pi power is NOT the derived matrix
        variant = cm_claim(cm_ecs[D], 2, convention="radicand")
        assert not variant.gamma_display_consistent

    def test_derived_is_homology_in_power_basis(self, cm_ecs, D):
        # k = 1: changing the generic matrix to the basis
        # (b1, b2) = (2 gamma2 - t gamma1, gamma1) must give the claim
        ec = cm_ecs[D]
        t = ec.cm.point.t
        B = [[ec.ctx.const(x) for x in row] for row in ([-t, 1], [2, 0])]
        direct = conjugate_connection(ec.homology_matrix(), B)
        claimed = cm_claim(ec, 1).derived
        for i in range(2):
            for j in range(2):
                diff = (direct.matrix[i][j] - claimed.matrix[i][j]).reduce()
                assert _strict_zero(diff)

    def test_claim_k_linearity(self, cm_ecs, D):
        c1 = cm_claim(cm_ecs[D], 1).derived
        c3 = cm_claim(cm_ecs[D], 3).derived
        for i in range(2):
            for j in range(2):
                diff = (c3.matrix[i][j] - c1.matrix[i][j].smul(3)).reduce()
                assert _strict_zero(diff)

    def test_structures_pass_checker(self, cm_ecs, D):
        ec = cm_ecs[D]
        for k in (1, 2, 3):
            claim = cm_claim(ec, k)
            report = check_connection_structure(claim.structure,
                                                claim.derived)
            assert report.ok, f"k={k}: " + report.pretty()
            assert omega_H(claim.structure, claim.derived).within_bound

    def test_symmetric_power_route_matches(self, cm_ecs, D):
        ec = cm_ecs[D]
        derived = cm_claim(ec, 2).derived
        routeB = cm_symmetric_power_check(ec, 2)
        for i in range(2):
            for j in range(2):
                assert _strict_zero(
                    (routeB.matrix[i][j] - derived.matrix[i][j]).reduce())


class TestCMOddsAndEnds:
    def test_theta_equals_gamma_sum(self, cm_ecs):
        ec = cm_ecs[1]
        assert _strict_zero((cm_theta(ec) - cm_gamma_sum(ec)).reduce())

    def test_theta_presentations(self, cm_ecs):
        ec = cm_ecs[2]
        good = theta_presentation(ec, "discriminant")
        assert _strict_zero((cm_theta(ec) - good).reduce())
        bad = theta_presentation(ec, "radicand")
        assert not (cm_theta(ec) - bad).reduce().is_zero(strict=True)
        with pytest.raises(GaussManinError):
            theta_presentation(ec, "classical")

    def test_gamma_sum_needs_cm(self, gen_ec):
        with pytest.raises(GaussManinError):
            cm_gamma_sum(gen_ec)

    def test_deeper_symmetric_powers_on_gauss_point(self, cm_ecs):
        ec = cm_ecs[1]
        for k in (3, 4):
            derived = cm_claim(ec, k).derived
            routeB = cm_symmetric_power_check(ec, k)
            for i in range(2):
                for j in range(2):
                    assert _strict_zero(
                        (routeB.matrix[i][j] - derived.matrix[i][j]).reduce())

    def test_claim_rejects_k_zero(self, cm_ecs):
        with pytest.raises(GaussManinError):
            cm_claim(cm_ecs[1], 0)
        with pytest.raises(GaussManinError):
            cm_structure(cm_ecs[1], 0)

    def test_false_extra_relation_is_refused(self):
        # declaring om1 as algebraic must fail the witness check
        ec = cm_elliptic_context(1, digits=30)
        with pytest.raises(WitnessError):
            ec.ctx.relate(ec.om1 - 3)


class TestSymmetricPowerCombinatorics:
    @pytest.mark.parametrize("D", [1, 2, 3, 7])
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_vectors_match_exact_quadratic_expansion(self, D, k):
        point = CM_TABLE[D]
        rows = sym_power_vectors(point, k)
        assert all(isinstance(x, int) for row in rows for x in row)
        # redo the expansion in Q(tau) with Fraction pairs (x + y tau)
        t, n = point.t, point.n

        def mul(p, q):
            # (p0 + p1 tau)(q0 + q1 tau) with tau^2 = t tau - n
            return (p[0] * q[0] - n * p[1] * q[1],
                    p[0] * q[1] + p[1] * q[0] + t * p[1] * q[1])

        def power_coeffs(root):
            # coefficients of (gamma2 - root gamma1)^k in the monomials
            # gamma1^(k-j) gamma2^j, computed over Q(tau)
            from math import comb
            out = []
            for j in range(k + 1):
                c = (Fraction(comb(k, j)), Fraction(0))
                base = (Fraction(1), Fraction(0))
                for _ in range(k - j):
                    base = mul(base, (-root[0], -root[1]))
                out.append(mul(c, base))
            return out

        tau = (Fraction(0), Fraction(1))
        taubar = (Fraction(t), Fraction(-1))
        u = power_coeffs(taubar)
        v = power_coeffs(tau)
        for j in range(k + 1):
            b1 = (u[j][0] + v[j][0], u[j][1] + v[j][1])
            assert b1[1] == 0 and b1[0] == rows[j][0]
            # (u - v)/(tau - taubar): the difference is (2 tau - t)-divisible
            diff = (u[j][0] - v[j][0], u[j][1] - v[j][1])
            # (x + y tau) / (2 tau - t): multiply by the conjugate
            # t - 2 tau; (2 tau - t)(t - 2 tau) ... careful:
            # (-t + 2 tau)(-t + 2 taubar) = t^2 - 2t(t) + 4n = 4n - t^2
            dd = 4 * n - t * t
            num = mul(diff, (Fraction(t), Fraction(-2)))
            b2 = (num[0] / dd, num[1] / dd)
            assert b2[1] == 0 and b2[0] == rows[j][1]

    def test_rank_two_gram_values(self, cm_ecs):
        H1 = cm_structure(cm_ecs[1], 1)
        assert H1.polarizations[-1].gram == ((0, -2), (2, 0))
        H2 = cm_structure(cm_ecs[1], 2)
        assert H2.polarizations[-2].gram == ((-8, 0), (0, -2))
        assert H2.polarizations[-2].tate_power == 2

    def test_even_gram_is_rationally_equivalent_to_sum_of_squares(self,
                                                                  cm_ecs):
        # k = 2, disc -4: diag(-8, -2) = -2 * T^t I T with T = diag(2, 1),
        # an explicit rational equivalence with x^2 + y^2 up to scale
        gram = cm_structure(cm_ecs[1], 2).polarizations[-2].gram
        T = ((Fraction(2), Fraction(0)), (Fraction(0), Fraction(1)))
        scale = Fraction(-2)
        for i in range(2):
            for j in range(2):
                assert gram[i][j] == scale * sum(
                    T[k][i] * T[k][j] for k in range(2))

    def test_induced_matrix_needs_rank_two(self, ext_setup):
        ec, pt = ext_setup
        with pytest.raises(GaussManinError):
            sym_power_connection(extension_connection(ec, pt), 2)


class TestExtension:
    def test_rows_match_written_combination(self, ext_setup):
        ec, pt = ext_setup
        kap = ec.kappa()

        def written(omj, etj):
            return (pt.zeta0.d().smul(omj)
                    - pt.alpha.d().smul(etj / (2 * pt.beta))
                    - pt.alpha.d().smul(omj * pt.alpha / (2 * pt.beta))
                    - pt.z0.d().smul(etj)
                    + kap.smul(ec.a * pt.z0 * omj - 3 * pt.zeta0 * etj
                               + (2 * ec.a + 3 * pt.alpha ** 2) * etj
                               / pt.beta
                               - (ec.a * pt.alpha + 3 * ec.b) * omj
                               / pt.beta)).reduce()

        r1, r2 = extension_pairing_rows(ec, pt)
        assert (r1 - written(ec.om1, ec.eta1)).is_exactly_zero()
        assert (r2 - written(ec.om2, ec.eta2)).is_exactly_zero()

    def test_beta_differential_is_eliminated(self, ext_setup):
        ec, pt = ext_setup
        w_om, w_ph = third_kind_image(ec, pt)
        for f in (w_om, w_ph):
            assert f.reduce().coefficient("beta").num.is_zero()

    def test_matrix_blocks(self, ext_setup):
        ec, pt = ext_setup
        conn = extension_connection(ec, pt)
        hm = ec.homology_matrix().matrix
        for i in range(2):
            for j in range(2):
                assert (conn.matrix[i][j] - hm[i][j]).is_exactly_zero()
        for j in range(3):
            assert conn.matrix[2][j].is_exactly_zero()
        r1, r2 = extension_pairing_rows(ec, pt)
        assert (conn.matrix[0][2] - r2).is_exactly_zero()
        assert (conn.matrix[1][2] + r1).is_exactly_zero()

    def test_structure_passes_checker(self, ext_setup):
        ec, pt = ext_setup
        H = extension_structure(ec, pt)
        conn = extension_connection(ec, pt)
        report = check_connection_structure(H, conn)
        assert report.ok, report.pretty()
        assert omega_H(H, conn).within_bound

    def test_two_torsion_rejected(self):
        ec = elliptic_context(mp.mpc("0.05", "1.11"), digits=30)
        with pytest.raises(TwoTorsionError):
            extension_point(ec, ec.curve.omega1 / 2)
        with pytest.raises(TwoTorsionError):
            extension_point(ec, (ec.curve.omega1 + ec.curve.omega2) / 2)

    def test_class_image_corrections(self, ext_setup):
        ec, pt = ext_setup
        w_om, w_ph = third_kind_image(ec, pt)
        c_om, c_ph = extension_class_image(ec, pt)
        kap = ec.kappa()
        assert (w_om - c_om - pt.zeta0.d()
                - kap.smul(ec.a * pt.z0)).is_exactly_zero()
        assert (w_ph - c_ph - pt.z0.d()
                - kap.smul(3 * pt.zeta0)).is_exactly_zero()

    def test_needs_curve(self):
        from gmconn.hodge import standard_context
        ctx = standard_context(30)
        bare = EllipticContext(
            ctx=ctx, curve=None, a=ctx.one(), b=ctx.one(), om1=ctx.one(),
            om2=ctx.one(), eta1=ctx.one(), eta2=ctx.one())
        with pytest.raises(GaussManinError):
            extension_point(bare, mp.mpf("0.3"))


class TestRelativeKummer:
    def test_matches_canonical_route(self):
        ctx, H = log_structure(7, 30)
        canonical = canonical_connection(H)
        model = relative_kummer_model(7, ctx=ctx)
        for i in range(2):
            for j in range(2):
                diff = (model.connection.matrix[i][j]
                        - canonical.connection.matrix[i][j]).reduce()
                assert _strict_zero(diff)

    def test_uncorrected_class_image(self):
        model = relative_kummer_model(5, 30)
        da_over_a = model.parameter.d().smul(model.parameter ** -1)
        assert (model.dzz_image[0] - da_over_a).is_exactly_zero()
        assert model.dzz_image[1].is_exactly_zero()

    def test_structure_passes_checker(self):
        model = relative_kummer_model(mp.mpf("2.5"), 30)
        report = check_connection_structure(model.structure,
                                            model.connection)
        assert report.ok, report.pretty()

    def test_degenerate_parameters_rejected(self):
        for bad in (0, 1):
            with pytest.raises(ValueError):
                relative_kummer_model(bad, 30)

    def test_algebraic_parameter_drops_modulus_direction(self):
        model = relative_kummer_model(3, 30, declare_algebraic=True)
        tp = model.ctx.gen("twopii")
        expected = model.log_parameter.d().smul(-(tp ** -1))
        off = model.connection.matrix[0][1]
        assert _strict_zero((off - expected).reduce())
        assert model.parameter.d().reduce().is_zero(strict=True)


class TestAdjoint:
    def test_identity_never_mixes(self, gen_ec):
        full = endomorphism_frame_connection(gen_ec.homology_matrix())
        for idx in range(4):
            assert full.matrix[idx][0].is_exactly_zero()
            assert full.matrix[0][idx].is_exactly_zero()

    def test_bracket_formulas(self, gen_ec):
        hm = gen_ec.homology_matrix().matrix
        adj = adjoint_connection(gen_ec.homology_matrix()).matrix
        checks = [
            adj[1][0] + hm[0][1].smul(2),
            adj[2][0] - hm[1][0].smul(2),
            adj[0][1] + hm[1][0],
            adj[1][1] - (hm[0][0] - hm[1][1]),
            adj[2][1],
            adj[0][2] - hm[0][1],
            adj[1][2],
            adj[2][2] - (hm[1][1] - hm[0][0]),
            adj[0][0],
        ]
        for form in checks:
            assert _strict_zero(form.reduce())

    def test_needs_rank_two(self, ext_setup):
        ec, pt = ext_setup
        with pytest.raises(GaussManinError):
            adjoint_connection(extension_connection(ec, pt))


class TestCMTable:
    def test_unknown_discriminant_rejected(self):
        with pytest.raises(GaussManinError):
            cm_elliptic_context(5)

    def test_eigenvector_matrix_columns(self, cm_ecs):
        ec = cm_ecs[7]
        T = eigenvector_matrix(ec)
        taubar = ec.cm.point.t - ec.cm.tau
        assert (T[0][0] + taubar).is_zero(strict=True)
        assert (T[0][1] + ec.cm.tau).is_zero(strict=True)
        assert (T[1][0] - 1).is_zero() and (T[1][1] - 1).is_zero()
