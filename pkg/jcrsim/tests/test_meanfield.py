#!/usr/bin/env python3

import math
import os
import unittest
import sys
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

sys.path.append(str(Path(__file__).parent.parent))

from model_core import DomainError, ModelParams, ScaledParams, unscale_params
from meanfield import (
    MeanFieldBranch,
    Stability,
    apply_axis_values,
    boundary_eta1,
    branch_summary,
    build_sextic,
    classify_region,
    governing_polynomial,
    integrate_maxwell_bloch,
    linearize,
    maxwell_bloch_rhs,
    phase_diagram,
    reconstruct_field,
    sextic_factors,
    solve_above_critical_phase,
    solve_steady_states,
    state_equation_eta0,
    sweep_detuning,
    zero_drive_roots,
)

SLOW = os.getenv("JCRSIM_SLOW") == "1"


def random_params(rng: np.random.Generator, kappa_range: tuple[float, float] = (0.01, 1.0)) -> ModelParams:
    """Driven, lossy, detuned point drawn in scaled units with eta in [0, 0.95]."""
    eta = rng.uniform(0.0, 0.95)
    detuning = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 2.0)
    scaled = ScaledParams(eps_bar=rng.uniform(0.05, 1.5), kappa_bar=rng.uniform(*kappa_range),
                          delta_bar=detuning, delta0_bar=detuning)
    return unscale_params(scaled, 1.0, eta)


class TestMaxwellBloch(unittest.TestCase):

    def test_rhs_vanishes_on_ground_state(self):
        """Test the undriven ground state is a fixed point"""
        params = ModelParams(lam=1.0, eta=0.4, delta=0.7, delta0=0.5, kappa=0.1)
        d_alpha, d_beta, d_zeta = maxwell_bloch_rhs((0j, 0j, -1.0), params)
        self.assertEqual(abs(d_alpha), 0.0)
        self.assertEqual(abs(d_beta), 0.0)
        self.assertEqual(d_zeta, 0.0)

    def test_integration_conserves_bloch_norm(self):
        """Test zeta^2 + |beta|^2 is conserved along the flow"""
        params = ModelParams(lam=1.0, eta=0.3, delta=0.4, delta0=0.6, kappa=0.05, epsilon=0.2)
        beta0 = 0.6 * np.exp(0.3j)
        _, rows = integrate_maxwell_bloch((0.1 + 0.2j, complex(beta0), -0.8), params, t_final=30.0)
        norms = rows[:, 4] ** 2 + rows[:, 2] ** 2 + rows[:, 3] ** 2
        self.assertLess(np.max(np.abs(norms - 1.0)), 1e-8)

    def test_lower_branch_relaxes(self):
        """Test a small field kick around zeta = -1 decays at resonance"""
        params = ModelParams(lam=1.0, delta=1.0, delta0=1.0, kappa=0.1)
        _, rows = integrate_maxwell_bloch((0.01 + 0j, 0j, -1.0), params, t_final=100.0)
        final = rows[-1]
        amplitude = math.hypot(math.hypot(final[0], final[1]), 0.5 * math.hypot(final[2], final[3]))
        self.assertLess(amplitude, 1e-3)
        self.assertLess(abs(final[4] + 1.0), 1e-4)


class TestGoverningPolynomial(unittest.TestCase):

    def test_regime_selection(self):
        """Test regime tags for the special parameter lines"""
        self.assertEqual(governing_polynomial(ModelParams(lam=1.0, eta=0.5, delta=1.0, epsilon=0.3)).regime,
                         "delta0_zero")
        self.assertEqual(governing_polynomial(ModelParams(lam=1.0, eta=0.5, delta=1.0, delta0=1.0)).regime,
                         "zero_drive")
        self.assertEqual(governing_polynomial(ModelParams(lam=1.0, eta=1.0, delta=1.0, delta0=1.0,
                                                          epsilon=0.3)).regime, "eta_one")
        self.assertEqual(governing_polynomial(ModelParams(lam=1.0, delta=1.0, delta0=1.0, epsilon=0.3)).regime,
                         "eta_zero")
        self.assertEqual(governing_polynomial(ModelParams(lam=1.0, eta=0.2, delta=1.0, delta0=1.0,
                                                          epsilon=0.3)).regime, "generic")

    def test_sextic_rejects_eta_one(self):
        """Test the sextic is refused on the eta = 1 line"""
        with self.assertRaises(DomainError):
            build_sextic(ModelParams(lam=1.0, eta=1.0, delta=1.0, delta0=1.0, epsilon=0.3))

    def test_sextic_vanishes_at_steady_states(self):
        """Test every steady-state inversion is a root of the sextic"""
        params = ModelParams(lam=1.0, eta=0.2, delta=0.3, delta0=0.3, kappa=0.02, epsilon=0.12)
        coeffs = build_sextic(params)
        self.assertEqual(len(coeffs), 7)
        for zeta in solve_steady_states(params, with_stability=False).zetas:
            magnitude = np.sum(np.abs(coeffs) * np.abs(zeta) ** np.arange(len(coeffs)))
            self.assertLess(abs(P.polyval(zeta, coeffs)) / magnitude, 1e-8)

    def test_zero_drive_roots(self):
        """Test P roots for the four-branch undriven case"""
        params = ModelParams(lam=1.0, eta=0.2, delta=0.6, delta0=0.6, kappa=0.1)
        roots = [r for r, _ in zero_drive_roots(params)]
        self.assertEqual(len(roots), 2)
        self.assertAlmostEqual(roots[0], -0.549456, places=5)
        self.assertAlmostEqual(roots[1], -0.263044, places=5)


class TestSteadyStates(unittest.TestCase):

    def test_undriven_below_threshold_has_two_branches(self):
        """Test only the poles survive below the critical coupling"""
        params = ModelParams(lam=1.0, delta=1.0, delta0=1.0, kappa=0.1)
        states = solve_steady_states(params)
        self.assertEqual(states.zetas, [-1.0, 1.0])
        lower, upper = states.branches
        self.assertEqual(lower.stability, Stability.STABLE)
        self.assertEqual(upper.stability, Stability.UNSTABLE)
        self.assertEqual(lower.photon_number, 0.0)

    def test_undriven_superradiant_branch(self):
        """Test the nontrivial undriven root and its Z2 partner flag"""
        params = ModelParams(lam=1.0, eta=0.6, delta=1.0, delta0=1.0, kappa=0.1)
        states = solve_steady_states(params)
        self.assertEqual(len(states.branches), 3)
        nontrivial = [b for b in states.branches if abs(abs(b.zeta) - 1.0) > 1e-6]
        self.assertEqual(len(nontrivial), 1)
        branch = nontrivial[0]
        self.assertAlmostEqual(branch.zeta, -0.394794, places=5)
        self.assertTrue(branch.z2_partner)
        self.assertEqual(branch.multiplicity, 2)
        self.assertEqual(branch.stability, Stability.STABLE)
        self.assertLess(branch.residual_rhs, 1e-9)

    def test_four_branch_undriven_case(self):
        """Test two P roots inside the sphere plus the poles"""
        params = ModelParams(lam=1.0, eta=0.2, delta=0.6, delta0=0.6, kappa=0.1)
        zetas = solve_steady_states(params).zetas
        self.assertEqual(len(zetas), 4)
        self.assertAlmostEqual(zetas[1], -0.549456, places=5)
        self.assertAlmostEqual(zetas[2], -0.263044, places=5)

    def test_lossless_double_root(self):
        """Test the U(1) symmetric root is reported once with multiplicity two"""
        params = ModelParams(lam=1.0, delta=0.5, delta0=0.5)
        states = solve_steady_states(params, with_stability=False)
        inner = [b for b in states.branches if abs(abs(b.zeta) - 1.0) > 1e-6]
        self.assertEqual(len(inner), 1)
        self.assertAlmostEqual(inner[0].zeta, -0.25, places=9)
        self.assertEqual(inner[0].multiplicity, 2)
        self.assertAlmostEqual(inner[0].photon_number, (1.0 - 0.5 ** 4) / (4.0 * 0.25), places=9)
        self.assertTrue(states.degeneracies)
        self.assertTrue(any("multiplicity 2" in note for note in states.degeneracies))

    def test_driven_six_solutions(self):
        """Test the weak-loss driven point with six steady states, three stable"""
        params = ModelParams(lam=1.0, eta=0.2, delta=0.3, delta0=0.3, kappa=0.02, epsilon=0.12)
        states = solve_steady_states(params)
        self.assertEqual(len(states.branches), 6)
        self.assertEqual(len(states.stable_branches()), 3)
        for branch in states.branches:
            self.assertLess(branch.residual_conservation, 1e-9)
            self.assertLess(branch.residual_rhs, 1e-9)

    def test_branches_sorted_and_on_sphere(self):
        """Test branches are sorted by zeta and lie in [-1, 1]"""
        params = ModelParams(lam=1.3, eta=0.45, delta=0.5, delta0=0.8, kappa=0.07, epsilon=0.3)
        zetas = solve_steady_states(params).zetas
        self.assertEqual(zetas, sorted(zetas))
        self.assertTrue(all(-1.0 <= z <= 1.0 for z in zetas))

    def test_reconstruct_field_undriven(self):
        """Test field reconstruction on a lossless undriven root"""
        params = ModelParams(lam=math.sqrt(2.0), delta=1.0, delta0=1.0)
        alpha, beta = reconstruct_field(-0.5, params)
        self.assertAlmostEqual(abs(alpha) ** 2, 0.375, places=12)
        self.assertAlmostEqual(beta.real, -math.sqrt(0.75), places=9)
        self.assertAlmostEqual(0.25 + abs(beta) ** 2, 1.0, places=12)

    def test_branch_summary_scales_photons(self):
        """Test branch summaries report extensive photon numbers"""
        params = ModelParams(lam=1.0, eta=0.6, delta=1.0, delta0=1.0, kappa=0.1, n_systems=10)
        branch = [b for b in solve_steady_states(params).branches if abs(b.zeta) < 0.9][0]
        summary = branch_summary(branch, params)
        self.assertAlmostEqual(summary["photon_number"], 10 * branch.photon_number)
        self.assertEqual(summary["stability"], "stable")


class TestAtomicResonance(unittest.TestCase):

    def test_below_critical_drive(self):
        """Test delta0 = 0 gives zeta = +-sqrt(1 - eps_bar^2) with no field"""
        params = ModelParams(lam=1.0, delta=0.5, kappa=0.1, epsilon=0.3)
        states = solve_steady_states(params)
        self.assertEqual(states.regime, "delta0_zero")
        self.assertEqual(len(states.branches), 2)
        self.assertAlmostEqual(states.zetas[0], -0.8, places=12)
        self.assertAlmostEqual(states.zetas[1], 0.8, places=12)
        for branch in states.branches:
            self.assertEqual(branch.alpha, 0j)
            self.assertAlmostEqual(branch.beta.real, -0.6, places=12)

    def test_above_critical_resonant_phases(self):
        """Test both phase solutions on the zeta = 0 class at delta = 0"""
        params = ModelParams(lam=1.0, kappa=0.1, epsilon=0.75)
        solutions = solve_above_critical_phase(params)
        self.assertEqual(len(solutions), 2)
        phi0 = math.acos(-1.0 / 1.5)
        self.assertAlmostEqual(sorted(s.phi for s in solutions)[1], phi0, places=12)
        states = solve_steady_states(params)
        self.assertEqual(len(states.branches), 2)
        for branch in states.branches:
            self.assertEqual(branch.zeta, 0.0)
            self.assertLess(branch.residual_rhs, 1e-9)

    def test_lossless_resonant_phases(self):
        """Test kappa = delta = 0 still fixes the phases and flags the field"""
        params = ModelParams(lam=1.0, epsilon=1.0)
        solutions = solve_above_critical_phase(params)
        self.assertEqual(len(solutions), 2)
        for solution, expected in zip(sorted(solutions, key=lambda s: s.phi), (-2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)):
            self.assertAlmostEqual(solution.phi, expected, places=12)
            self.assertTrue(solution.degenerate)
        states = solve_steady_states(params, with_stability=False)
        self.assertEqual(len(states.branches), 2)
        self.assertTrue(all(b.degenerate and b.zeta == 0.0 for b in states.branches))

    def test_above_critical_detuned_phases(self):
        """Test the scanned phase roots are steady states when delta != 0"""
        params = ModelParams(lam=1.0, eta=0.3, delta=0.3, kappa=0.1, epsilon=0.65 * 1.4)
        solutions = solve_above_critical_phase(params)
        self.assertGreaterEqual(len(solutions), 2)
        for solution in solutions:
            alpha, beta = reconstruct_field(0.0, params, phase=solution.phi)
            rates = maxwell_bloch_rhs((alpha, beta, 0.0), params)
            self.assertLess(max(abs(r) for r in rates), 1e-9)

    def test_critical_drive_merges(self):
        """Test eps_bar = 1 collapses the classes into one branch"""
        params = ModelParams(lam=1.0, kappa=0.1, epsilon=0.5)
        states = solve_steady_states(params)
        self.assertEqual(len(states.branches), 1)
        self.assertEqual(states.branches[0].zeta, 0.0)

    def test_phase_class_requires_zero_delta0(self):
        """Test the phase solver refuses delta0 != 0"""
        with self.assertRaises(DomainError):
            solve_above_critical_phase(ModelParams(lam=1.0, delta0=0.5, kappa=0.1, epsilon=0.8))


class TestStateEquation(unittest.TestCase):

    def test_matches_lower_branches(self):
        """Test field magnitudes agree with the zeta < 0 steady states"""
        params = ModelParams(lam=1.0, delta=0.3, delta0=0.3, kappa=0.02, epsilon=0.3)
        magnitudes = state_equation_eta0(params, -1)
        self.assertEqual(len(magnitudes), 3)
        lower = sorted(abs(b.alpha) for b in solve_steady_states(params, with_stability=False).branches
                       if b.zeta < 0)
        for got, expected in zip(sorted(magnitudes), lower):
            self.assertAlmostEqual(got, expected, places=6)

    def test_resonant_field_above_critical(self):
        """Test the resonant equation of state above the critical drive"""
        params = ModelParams(lam=1.0, kappa=0.02, epsilon=0.6)
        magnitudes = state_equation_eta0(params, -1)
        self.assertEqual(len(magnitudes), 1)
        self.assertAlmostEqual(magnitudes[0], 0.5 * math.sqrt(0.44 / 0.0004), places=9)

    def test_resonant_field_below_critical(self):
        """Test the resonant equation of state keeps only the empty cavity below critical"""
        magnitudes = state_equation_eta0(ModelParams(lam=1.0, kappa=0.02, epsilon=0.4), 1)
        self.assertEqual(magnitudes, [0.0])

    def test_requires_eta_zero(self):
        """Test the equation of state refuses eta != 0"""
        with self.assertRaises(DomainError):
            state_equation_eta0(ModelParams(lam=1.0, eta=0.1, delta=0.3, delta0=0.3, epsilon=0.1), -1)
        with self.assertRaises(DomainError):
            state_equation_eta0(ModelParams(lam=1.0, delta=0.3, delta0=0.3, epsilon=0.1), 0)


class TestStrongCouplingBoundary(unittest.TestCase):

    def setUp(self):
        self.params = ModelParams(lam=1.0, eta=1.0, kappa=0.02)

    def test_boundary_value(self):
        """Test the four-to-two boundary at delta = 0.6"""
        self.assertAlmostEqual(boundary_eta1(self.params, [0.6])[0], 0.71423, places=4)

    def test_boundary_absent_for_large_detuning(self):
        """Test no boundary once the bracket exceeds one"""
        self.assertIsNone(boundary_eta1(self.params, [3.0])[0])

    def test_boundary_tends_to_one(self):
        """Test the lossless boundary approaches 1 at small detuning"""
        value = boundary_eta1(ModelParams(lam=1.0, eta=1.0), [1e-4])[0]
        self.assertAlmostEqual(value, 1.0, places=4)

    def test_region_counts_straddle_boundary(self):
        """Test four solutions below the boundary and two above"""
        below = self.params.with_changes(delta=0.6, delta0=0.6, epsilon=0.70)
        above = self.params.with_changes(delta=0.6, delta0=0.6, epsilon=0.73)
        self.assertEqual(classify_region(below).tag, "R4")
        self.assertEqual(classify_region(above).tag, "R2")

    def test_phase_diagram_cells(self):
        """Test a two-cell raster around the boundary"""
        diagram = phase_diagram(self.params, ("delta_bar", "eps_bar"), ([0.3], [0.70, 0.73]))
        self.assertEqual(diagram.counts().tolist(), [[4], [2]])

    def test_requires_eta_one(self):
        """Test boundary_eta1 refuses eta < 1"""
        with self.assertRaises(DomainError):
            boundary_eta1(ModelParams(lam=1.0, eta=0.5, kappa=0.02), [0.6])


class TestSweepsAndDiagrams(unittest.TestCase):

    def test_sweep_fold_bookkeeping(self):
        """Test appear/disappear folds account for every change in branch count"""
        params = ModelParams(lam=1.0, eta=0.2, kappa=0.02, epsilon=0.12)
        grid = np.linspace(0.1, 0.7, 61)
        result = sweep_detuning(params, grid)
        self.assertEqual(len(result.counts), len(grid))
        net = sum(1 if f.kind == "appear" else -1 for f in result.folds)
        self.assertEqual(net, result.counts[-1] - result.counts[0])
        for curve in result.curves:
            self.assertEqual(curve.indices, list(range(curve.indices[0], curve.indices[-1] + 1)))

    def test_sweep_rejects_non_monotone_grid(self):
        """Test sweeps need a monotone detuning grid"""
        with self.assertRaises(DomainError):
            sweep_detuning(ModelParams(lam=1.0, kappa=0.1, epsilon=0.1), [0.1, 0.3, 0.2])

    def test_apply_axis_values(self):
        """Test axis coordinates map onto raw parameters"""
        base = ModelParams(lam=2.0, eta=0.5, delta=1.0, delta0=1.0, kappa=0.1)
        params = apply_axis_values(base, {"eps_bar": 0.5, "delta_over_lambda": 0.25})
        self.assertAlmostEqual(params.epsilon, 0.75)
        self.assertAlmostEqual(params.delta, 0.5)
        self.assertAlmostEqual(params.delta0, 0.5)
        with self.assertRaises(DomainError):
            apply_axis_values(base.with_changes(delta=0.0), {"lambda_over_delta": 1.0})

    def test_phase_diagram_validates_axes(self):
        """Test identical or unknown axes are rejected"""
        base = ModelParams(lam=1.0, kappa=0.1)
        with self.assertRaises(DomainError):
            phase_diagram(base, ("eta", "eta"), ([0.1], [0.2]))
        with self.assertRaises(DomainError):
            phase_diagram(base, ("eta", "kappa"), ([0.1], [0.2]))


class TestUndrivenRandomDraws(unittest.TestCase):

    def test_photon_number_closed_form(self):
        """Test |alpha|^2 = (lam^4 - delta^4) / (4 lam^2 delta^2) on random lossless points"""
        rng = np.random.default_rng(20240611)
        for _ in range(100):
            lam = rng.uniform(0.5, 2.0)
            delta = lam * rng.uniform(0.1, 0.95)
            params = ModelParams(lam=lam, delta=delta, delta0=delta)
            inner = [b for b in solve_steady_states(params, with_stability=False).branches if abs(b.zeta) < 1.0]
            self.assertEqual(len(inner), 1)
            expected = (lam ** 4 - delta ** 4) / (4.0 * lam ** 2 * delta ** 2)
            self.assertLess(abs(inner[0].photon_number - expected) / expected, 1e-10)
            self.assertAlmostEqual(inner[0].zeta, -(delta / lam) ** 2, places=12)


class TestRootCompleteness(unittest.TestCase):

    def check_sign_changes(self, draws: int, points: int, seed: int) -> None:
        rng = np.random.default_rng(seed)
        grid = np.linspace(-1.0, 1.0, points)
        for _ in range(draws):
            params = random_params(rng)
            values = np.real(governing_polynomial(params).form.value(grid))
            branches = solve_steady_states(params, with_stability=False).branches
            zetas = np.array([b.zeta for b in branches])
            changes = np.nonzero(values[:-1] * values[1:] < 0.0)[0]
            for i in changes:
                with self.subTest(params=params, cell=(grid[i], grid[i + 1])):
                    inside = (zetas >= grid[i] - 1e-9) & (zetas <= grid[i + 1] + 1e-9)
                    self.assertTrue(inside.any())
            for branch in branches:
                self.assertLess(branch.residual_poly, 1e-9)

    def test_every_sign_change_has_a_root(self):
        """Test each sign change of the governing polynomial on [-1, 1] carries a branch"""
        self.check_sign_changes(draws=50, points=20001, seed=7)

    @unittest.skipUnless(SLOW, "set JCRSIM_SLOW=1 for the 1000-draw scan")
    def test_every_sign_change_has_a_root_dense(self):
        """Test the sign-change scan on 1000 draws and a 1e5-point grid"""
        self.check_sign_changes(draws=1000, points=100001, seed=8)


class TestSexticStructure(unittest.TestCase):

    def test_eta_zero_reduction(self):
        """Test the sextic factors into P times the quartic as eta -> 0"""
        params = ModelParams(lam=1.0, delta=0.3, delta0=0.3, kappa=0.02, epsilon=0.3)
        quartic = governing_polynomial(params).coefficients
        p, q = sextic_factors(params)
        np.testing.assert_allclose(p, q, rtol=1e-14)
        product = P.polymul(p, quartic)
        scale = np.max(np.abs(product))
        np.testing.assert_allclose(build_sextic(params), product, rtol=1e-12, atol=1e-13 * scale)
        np.testing.assert_allclose(build_sextic(params.with_changes(eta=1e-12)), product,
                                   rtol=1e-9, atol=1e-10 * scale)

    def test_q_positive_with_loss(self):
        """Test Q has no real root whenever kappa > 0"""
        rng = np.random.default_rng(11)
        grid = np.linspace(-5.0, 5.0, 2001)
        for _ in range(200):
            params = random_params(rng)
            _, q = sextic_factors(params)
            vertex = -0.5 * q[1]
            with self.subTest(params=params):
                self.assertGreater(q[0] - 0.25 * q[1] ** 2, 0.0)
                self.assertGreater(P.polyval(vertex, q), 0.0)
                self.assertTrue(np.all(P.polyval(grid, q) > 0.0))

    def test_sextic_factors_reject_eta_one(self):
        """Test the quadratic factors are refused on the eta = 1 line"""
        with self.assertRaises(DomainError):
            sextic_factors(ModelParams(lam=1.0, eta=1.0, delta=1.0, delta0=1.0, epsilon=0.3))


class TestStableBranchesRelax(unittest.TestCase):

    def relax(self, params: ModelParams, branch: MeanFieldBranch) -> None:
        eigvals = np.linalg.eigvals(linearize(branch, params))
        rest = np.delete(eigvals, int(np.argmin(np.abs(eigvals))))
        rate = -float(np.max(rest.real))
        if rate < 0.01:
            return
        alpha = branch.alpha + 1e-4 * (1.0 + 1.0j)
        beta = branch.beta + 1e-4 * (1.0 - 1.0j)
        norm = math.sqrt(branch.zeta ** 2 + abs(beta) ** 2)
        _, rows = integrate_maxwell_bloch((alpha, beta / norm, branch.zeta / norm), params,
                                          t_final=min(20.0 / rate, 2000.0))
        self.assertLess(np.max(np.abs(rows[-1] - branch.as_vector())), 1e-6)

    def check_draws(self, draws: int, seed: int) -> int:
        rng = np.random.default_rng(seed)
        checked = 0
        for _ in range(draws):
            params = random_params(rng, kappa_range=(0.05, 1.0))
            for branch in solve_steady_states(params).stable_branches():
                with self.subTest(params=params, zeta=branch.zeta):
                    self.relax(params, branch)
                checked += 1
        return checked

    def test_six_solution_point(self):
        """Test each stable branch of the weak-loss point attracts a nearby start"""
        params = ModelParams(lam=1.0, eta=0.2, delta=0.3, delta0=0.3, kappa=0.02, epsilon=0.12)
        stable = solve_steady_states(params).stable_branches()
        self.assertEqual(len(stable), 3)
        for branch in stable:
            with self.subTest(zeta=branch.zeta):
                self.relax(params, branch)

    def test_random_stable_branches(self):
        """Test stable branches on random draws pull perturbed starts back"""
        self.assertGreater(self.check_draws(8, seed=3), 0)

    @unittest.skipUnless(SLOW, "set JCRSIM_SLOW=1 for 100 random draws")
    def test_random_stable_branches_many(self):
        """Test the relaxation check on 100 random draws"""
        self.assertGreater(self.check_draws(100, seed=4), 0)


@unittest.skipUnless(SLOW, "set JCRSIM_SLOW=1 for the full raster")
class TestStrongCouplingRaster(unittest.TestCase):

    def test_raster_agrees_with_boundary(self):
        """Test a 200x200 eta = 1 raster against the closed-form boundary"""
        params = ModelParams(lam=1.0, eta=1.0, kappa=0.02)
        delta_bars = np.linspace(0.01, 1.2, 200)
        eps_bars = np.linspace(0.01, 1.2, 200)
        diagram = phase_diagram(params, ("delta_bar", "eps_bar"), (delta_bars, eps_bars),
                                with_stability=False)
        counts = diagram.counts()
        boundary = boundary_eta1(params, 2.0 * delta_bars)
        checked = 0
        for ix, edge in enumerate(boundary):
            if edge is None:
                continue
            for iy, eps_bar in enumerate(eps_bars):
                if eps_bar < edge - 0.03:
                    self.assertEqual(counts[iy, ix], 4)
                    checked += 1
                elif eps_bar > edge + 0.03:
                    self.assertEqual(counts[iy, ix], 2)
                    checked += 1
        self.assertGreater(checked, 1000)


if __name__ == '__main__':
    unittest.main()
