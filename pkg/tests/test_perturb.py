import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ampmech import (
    DimensionMismatchError,
    EnergyConservationError,
    NoClosedFormError,
    OscillatorParams,
    StructureViolationError,
    UnimplementedOrderError,
    quantum_condition_residual,
)
from ampmech.oracle import position_matrix
from ampmech.perturb import (
    CoefficientSet,
    PerturbSolution,
    assemble_motion,
    build_recursions,
    closed_form_amplitude,
    closed_form_frequency,
    energy_diagonal_series,
    energy_matrix,
    extract_structure_constants,
    quantum_condition_order_residual,
    sho_solve,
    solve_perturbative,
)

B = math.sqrt(2.0)  # beta in default units
P2 = OscillatorParams()
N_CHECK = 21  # rows 0..20


def random_tables(seed, rows=16, band_max=4, orders=2, force_exponent=2):
    rng = np.random.default_rng(seed)
    amp = rng.normal(size=(orders + 1, band_max + 1, rows))
    for a in range(1, band_max + 1):
        amp[:, a, :a] = 0.0
    pot = rng.normal(size=(orders + 1, rows))
    pot[0] = np.arange(rows, dtype=float)
    return CoefficientSet(force_exponent, amp, pot)


class TestRecursionGenerator:
    """The generated residual functionals must agree with the hand-written
    low-band balance equations on arbitrary tables, not just on solutions."""

    @given(st.integers(0, 2**31 - 1))
    def test_adjacent_band_lowest_order(self, seed):
        cs = random_tables(seed)
        res = build_recursions(P2, 1, 0)(cs)
        for n in range(1, 10):
            om = cs.omega(0, n, n - 1)
            expect = (1.0 - om**2) * cs.amplitude(0, n, n - 1)
            assert res[n] == pytest.approx(expect, rel=1e-13, abs=1e-13)

    @given(st.integers(0, 2**31 - 1))
    def test_diagonal_band_lowest_order(self, seed):
        cs = random_tables(seed)
        res = build_recursions(P2, 0, 0)(cs)
        for n in range(10):
            expect = cs.amplitude(0, n, n) + 0.25 * (
                cs.amplitude(0, n + 1, n) ** 2 + cs.amplitude(0, n, n - 1) ** 2
            )
            assert res[n] == pytest.approx(expect, rel=1e-13, abs=1e-13)

    @given(st.integers(0, 2**31 - 1))
    def test_third_band_lowest_order(self, seed):
        cs = random_tables(seed)
        res = build_recursions(P2, 3, 0)(cs)
        for n in range(3, 10):
            om = cs.omega(0, n, n - 3)
            expect = (1.0 - om**2) * cs.amplitude(0, n, n - 3) + 0.5 * (
                cs.amplitude(0, n, n - 1) * cs.amplitude(0, n - 1, n - 3)
                + cs.amplitude(0, n, n - 2) * cs.amplitude(0, n - 2, n - 3)
            )
            assert res[n] == pytest.approx(expect, rel=1e-13, abs=1e-13)

    @given(st.integers(0, 2**31 - 1))
    def test_adjacent_band_second_order_bracket(self, seed):
        cs = random_tables(seed)
        res = build_recursions(P2, 1, 2)(cs)

        def a(k, n, m):
            return cs.amplitude(k, n, m)

        for n in range(1, 9):
            o0, o1, o2 = (cs.omega(k, n, n - 1) for k in range(3))
            expect = (
                (1.0 - o0**2) * a(2, n, n - 1)
                - 2.0 * o0 * o1 * a(1, n, n - 1)
                - (o1**2 + 2.0 * o0 * o2) * a(0, n, n - 1)
            )
            expect += (
                a(0, n, n) * a(0, n, n - 1)
                + a(0, n, n - 1) * a(0, n - 1, n - 1)
                + 0.5 * a(0, n, n + 1) * a(0, n + 1, n - 1)
                + 0.5 * a(0, n, n - 2) * a(0, n - 2, n - 1)
            )
            assert res[n] == pytest.approx(expect, rel=1e-12, abs=1e-12)

    def test_rejects_even_quartic_band(self):
        with pytest.raises(ValueError):
            build_recursions(OscillatorParams(force_exponent=3), 2, 0)

    def test_rejects_deep_order(self):
        with pytest.raises(UnimplementedOrderError):
            build_recursions(P2, 1, 3)

    def test_force_exponent_must_match_tables(self):
        cs = random_tables(0, force_exponent=3)
        fn = build_recursions(P2, 1, 0)
        with pytest.raises(ValueError):
            fn(cs)


class TestSolveClosedForms:
    TABULATED_AMP = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (1, 2),
                     (2, 0), (2, 1), (2, 2)]
    TABULATED_FREQ = [(0, 1), (0, 2), (0, 3), (1, 1), (2, 1), (2, 2)]

    def test_amplitudes_match_closed_forms(self, sol_cubic):
        for k, alpha in self.TABULATED_AMP:
            got = sol_cubic.a(k, alpha)
            for n in range(N_CHECK):
                target = closed_form_amplitude(k, n, alpha, P2)
                assert abs(got[n] - target) <= 1e-12 * max(1.0, abs(target)), (
                    k, alpha, n)

    def test_frequencies_match_closed_forms(self, sol_cubic):
        for k, alpha in self.TABULATED_FREQ:
            got = sol_cubic.omega_band(k, alpha)
            for n in range(alpha, N_CHECK):
                target = closed_form_frequency(k, n, alpha, P2)
                assert abs(got[n] - target) <= 1e-12 * max(1.0, abs(target))

    def test_spot_values(self, sol_cubic):
        assert sol_cubic.a(0, 1)[1] == pytest.approx(B, rel=1e-14)
        assert sol_cubic.a(0, 0)[0] == pytest.approx(-0.5, rel=1e-14)
        assert sol_cubic.a(0, 2)[2] == pytest.approx(B**2 / 6 * B, rel=1e-14)
        assert sol_cubic.a(2, 1)[1] == pytest.approx(11 * B**3 / 72, rel=1e-13)
        assert sol_cubic.a(2, 0)[0] == pytest.approx(-44.0 / 72.0, rel=1e-13)
        assert sol_cubic.a(2, 2)[2] == pytest.approx(
            3 * B**4 / 32 * 3 * B, rel=1e-13
        )
        assert sol_cubic.omega_band(2, 1)[1] == pytest.approx(-5.0 / 6.0, rel=1e-13)
        assert np.all(sol_cubic.omega_band(1, 1) == 0.0)
        assert np.all(sol_cubic.a(1, 1) == 0.0)

    def test_closed_form_floor(self):
        assert closed_form_amplitude(0, 1, 2, P2) == 0.0
        assert closed_form_amplitude(2, 0, 1, P2) == 0.0

    def test_no_closed_form_lookup(self):
        with pytest.raises(NoClosedFormError):
            closed_form_amplitude(1, 5, 3, P2)
        with pytest.raises(NoClosedFormError):
            closed_form_amplitude(0, 5, 1, OscillatorParams(force_exponent=3))
        with pytest.raises(NoClosedFormError):
            closed_form_frequency(2, 5, 3, P2)

    def test_unit_independence(self):
        # closed forms and solver agree away from the default unit system
        params = OscillatorParams(mass=1.7, omega0=0.6, lam=0.02, hbar=2.3)
        sol = solve_perturbative(params, 2, 10)
        for k, alpha in self.TABULATED_AMP:
            got = sol.a(k, alpha)
            for n in range(0, 11, 3):
                target = closed_form_amplitude(k, n, alpha, params)
                assert abs(got[n] - target) <= 1e-12 * max(1.0, abs(target))
        got = sol.omega_band(2, 1)
        for n in range(1, 11):
            target = closed_form_frequency(2, n, 1, params)
            assert abs(got[n] - target) <= 1e-12 * max(1.0, abs(target))


class TestSolveInvariants:
    def test_recursion_residuals_vanish(self, sol_cubic):
        for alpha in range(0, 4):
            for k in range(3):
                res = build_recursions(P2, alpha, k)(sol_cubic.coeffs)
                assert np.max(np.abs(res[:N_CHECK])) <= 1e-12

    def test_quantum_condition_residuals_vanish(self, sol_cubic):
        for k in range(3):
            res = quantum_condition_order_residual(sol_cubic, k)
            assert np.max(np.abs(res[:N_CHECK])) <= 1e-12

    def test_quartic_residuals_vanish(self, sol_quartic):
        # quartic band amplitudes grow fast with n, so compare the residual
        # against the magnitude of the equation's own bracket term
        p3 = OscillatorParams(force_exponent=3)
        for alpha in (1, 3, 5):
            for k in range(3):
                res = build_recursions(p3, alpha, k)(sol_quartic.coeffs)
                if alpha == 1:
                    # bracket vanishes on the adjacent band; the equation's
                    # terms are then products of two amplitudes
                    scale = float(
                        np.max(np.abs(sol_quartic.coeffs.amp[: k + 1, 1, :N_CHECK]))
                        ** 2
                    )
                else:
                    scale = float(
                        np.max(
                            np.abs(
                                (1 - alpha**2)
                                * sol_quartic.coeffs.amp[: k + 1, alpha, :N_CHECK]
                            )
                        )
                    )
                assert np.max(np.abs(res[:N_CHECK])) <= 1e-12 * max(1.0, scale)
        for k in range(3):
            # order-2 summands reach ~1e5 by n = 20, so this is ~1e-15 relative
            res = quantum_condition_order_residual(sol_quartic, k)
            assert np.max(np.abs(res[:N_CHECK])) <= 1e-10

    def test_frequency_additivity(self, sol_cubic):
        for k in range(3):
            om1 = sol_cubic.omega_band(k, 1)
            om2 = sol_cubic.omega_band(k, 2)
            for n in range(2, N_CHECK):
                assert om2[n] == pytest.approx(om1[n] + om1[n - 1], abs=1e-12)

    def test_solver_errors(self):
        with pytest.raises(UnimplementedOrderError):
            solve_perturbative(P2, 3, 20)
        with pytest.raises(DimensionMismatchError):
            solve_perturbative(P2, 2, 4)

    def test_quartic_parity(self, sol_quartic):
        # even bands carry no amplitude at any order
        assert set(sol_quartic.solved_orders) <= {1, 3, 5, 7, 9}
        motion = assemble_motion(sol_quartic, 0.3)
        x = motion.amplitudes
        for alpha in range(0, x.band_max + 1, 2):
            assert np.max(np.abs(x.band(alpha))) == 0.0
            assert np.max(np.abs(x.band(-alpha))) == 0.0

    def test_quartic_first_order_frequency(self, sol_quartic):
        # independent route: first-order level shifts of the quartic term
        # from ladder matrix elements, differenced into a frequency
        params = sol_quartic.params
        x = position_matrix(params, 30)
        x4 = np.linalg.matrix_power(x, 4)
        e1 = params.mass / 4.0 * np.diag(x4)
        got = sol_quartic.omega_band(1, 1)
        for n in range(1, 20):
            assert got[n] == pytest.approx(
                (e1[n] - e1[n - 1]) / params.hbar, rel=1e-12
            )


class TestStructureConstants:
    def test_known_values(self, sol_cubic):
        const = extract_structure_constants(sol_cubic)
        assert const[1] == pytest.approx(1.0, abs=1e-12)
        assert const[2] == pytest.approx(1.0 / 6.0, abs=1e-12)
        assert const[3] == pytest.approx(1.0 / 48.0, abs=1e-12)

    def test_cached_on_solution(self, sol_cubic):
        assert sol_cubic.structure_constants[1] == pytest.approx(1.0, abs=1e-12)

    def test_quartic_pattern_is_n_independent(self, sol_quartic):
        const = extract_structure_constants(sol_quartic)
        assert const[1] == pytest.approx(1.0, abs=1e-12)
        assert const[3] == pytest.approx(1.0 / 32.0, abs=1e-12)

    def test_violation_detected(self, sol_cubic):
        amp = np.array(sol_cubic.coeffs.amp, copy=True)
        amp[0, 2, 7] *= 1.001  # break the factorized n-dependence
        corrupted = PerturbSolution(
            params=sol_cubic.params,
            order=sol_cubic.order,
            n_max=sol_cubic.n_max,
            coeffs=CoefficientSet(2, amp, np.array(sol_cubic.coeffs.freq_potential)),
            solved_orders=sol_cubic.solved_orders,
        )
        with pytest.raises(StructureViolationError):
            extract_structure_constants(corrupted)


class TestAssembleMotion:
    def test_zero_coupling_collapses_to_sho(self, sol_cubic):
        m = assemble_motion(sol_cubic, 0.0)
        x = m.amplitudes
        n = np.arange(8)
        assert np.allclose(x.band(1)[:8], B / 2 * np.sqrt(n), rtol=1e-14)
        for alpha in (0, 2, 3):
            assert np.max(np.abs(x.band(alpha)[:8])) == 0.0

    def test_diagonal_entry_series(self, sol_cubic):
        lam = 0.1
        m = assemble_motion(sol_cubic, lam)
        a00 = closed_form_amplitude(0, 1, 0, P2)
        a20 = closed_form_amplitude(2, 1, 0, P2)
        assert a00 == pytest.approx(-1.5, rel=1e-15)
        assert m.amplitudes.get(1, 1) == pytest.approx(
            lam * a00 + lam**3 * a20, rel=1e-13
        )

    def test_assembled_array_symmetric(self, sol_cubic):
        m = assemble_motion(sol_cubic, 0.17, n_max=16)
        assert m.amplitudes.symmetry_defect() <= 1e-15

    def test_respects_solved_range(self, sol_cubic):
        with pytest.raises(DimensionMismatchError):
            assemble_motion(sol_cubic, 0.1, n_max=sol_cubic.n_max + 1)


class TestShoRoute:
    def test_adjacent_amplitude_and_energy(self):
        params = OscillatorParams(lam=0.0)
        sol = sho_solve(params, 20)
        assert sol.a(0, 1)[1] == pytest.approx(B, rel=1e-15)
        m = assemble_motion(sol, 0.0)
        assert m.amplitudes.get(1, 0) == pytest.approx(
            math.sqrt(params.hbar / (2 * params.mass * params.omega0)), rel=1e-15
        )
        em = energy_matrix(sol, 0)
        assert em.diagonal(0)[0] == pytest.approx(0.5, rel=1e-15)
        n = np.arange(21)
        assert np.allclose(em.diagonal(0), n + 0.5, rtol=1e-14)

    def test_quantum_condition_exact(self):
        sol = sho_solve(OscillatorParams(lam=0.0), 30)
        res = quantum_condition_residual(assemble_motion(sol, 0.0))
        assert np.max(np.abs(res[:29])) <= 1e-12

    def test_rejects_nonzero_coupling(self):
        with pytest.raises(ValueError):
            sho_solve(OscillatorParams(lam=0.1), 10)


class TestEnergyMatrix:
    def test_diagonal_orders(self, sol_cubic):
        em = energy_matrix(sol_cubic, 2)
        n = np.arange(N_CHECK)
        assert np.allclose(em.diagonal(0)[:N_CHECK], n + 0.5, rtol=1e-13)
        assert np.max(np.abs(em.diagonal(1))) == 0.0
        target = -5.0 / 12.0 * (n**2 + n + 11.0 / 30.0)
        got = em.diagonal(2)[:N_CHECK]
        assert np.max(np.abs(got - target) / np.maximum(1.0, np.abs(target))) <= 1e-12

    def test_second_order_diagonal_pieces(self, sol_cubic):
        em = energy_matrix(sol_cubic, 2)
        n = np.arange(N_CHECK)
        poly = n**2 + n + 11.0 / 30.0
        harm = 0.5 * (5.0 * B**4 / 12.0) * poly
        kin = -0.5 * (5.0 * B**4 / 24.0) * poly
        anh = -(5.0 * B**4 / 24.0) * poly
        assert np.allclose(em.harmonic[2, 0, :N_CHECK], harm, rtol=1e-12)
        assert np.allclose(em.kinetic[2, 0, :N_CHECK], kin, rtol=1e-12)
        assert np.allclose(em.anharmonic[2, 0, :N_CHECK], anh, rtol=1e-12)

    def test_first_order_adjacent_band_contributions(self, sol_cubic):
        em = energy_matrix(sol_cubic, 2)
        n = np.arange(N_CHECK, dtype=float)
        nsr = n * np.sqrt(n)
        assert np.allclose(em.harmonic[1, 1, :N_CHECK], -5.0 / 24.0 * B**3 * nsr,
                           atol=1e-13)
        assert np.allclose(em.kinetic[1, 1, :N_CHECK], B**3 / 12.0 * nsr,
                           atol=1e-13)
        assert np.allclose(em.anharmonic[1, 1, :N_CHECK], B**3 / 8.0 * nsr,
                           atol=1e-13)
        assert np.max(np.abs(em.total(1, 1))) <= 1e-12

    def test_second_band_static_cancellation(self, sol_cubic):
        em = energy_matrix(sol_cubic, 2)
        n = np.arange(N_CHECK, dtype=float)
        expect = np.zeros(N_CHECK)
        expect[2:] = 0.125 * 2.0 * np.sqrt(n[2:] * (n[2:] - 1))  # beta^2 = 2
        assert np.allclose(em.harmonic[0, 2, :N_CHECK], expect, atol=1e-13)
        assert np.allclose(em.kinetic[0, 2, :N_CHECK], -expect, atol=1e-13)
        assert np.max(np.abs(em.anharmonic[0, 2])) == 0.0

    def test_third_band_contributions(self, sol_cubic):
        em = energy_matrix(sol_cubic, 2)
        n = np.arange(N_CHECK, dtype=float)
        root = np.sqrt(np.clip(n * (n - 1) * (n - 2), 0.0, None))
        assert np.allclose(em.harmonic[1, 3, :N_CHECK], B**3 / 24.0 * root,
                           atol=1e-13)
        assert np.allclose(em.kinetic[1, 3, :N_CHECK], -(B**3) / 12.0 * root,
                           atol=1e-13)
        assert np.allclose(em.anharmonic[1, 3, :N_CHECK], B**3 / 24.0 * root,
                           atol=1e-13)
        assert np.max(np.abs(em.total(1, 3))) <= 1e-12

    def test_off_diagonals_vanish_every_order(self, sol_cubic):
        em = energy_matrix(sol_cubic, 2)
        for k in range(3):
            for alpha in range(1, em.band_max + 1):
                assert np.max(np.abs(em.total(k, alpha))) <= 1e-12

    def test_conservation_failure_detected(self, sol_cubic):
        amp = np.array(sol_cubic.coeffs.amp, copy=True)
        amp[0, 1, 5] *= 1.01
        broken = PerturbSolution(
            params=sol_cubic.params,
            order=sol_cubic.order,
            n_max=sol_cubic.n_max,
            coeffs=CoefficientSet(2, amp, np.array(sol_cubic.coeffs.freq_potential)),
            solved_orders=sol_cubic.solved_orders,
        )
        with pytest.raises(EnergyConservationError):
            energy_matrix(broken, 2)

    def test_order_cap_enforced(self):
        sol = solve_perturbative(P2, 1, 10)
        with pytest.raises(UnimplementedOrderError):
            energy_matrix(sol, 2)


class TestEnergyDiagonalSeries:
    def test_reference_value(self, sol_cubic):
        eds = energy_diagonal_series(sol_cubic)
        got = eds.evaluate(0.05)[0]
        assert got == pytest.approx(0.5 - (5 * 0.0025 / 12) * (11 / 30), rel=1e-12)

    def test_matches_closed_form_series(self, sol_cubic):
        eds = energy_diagonal_series(sol_cubic)
        n = np.arange(N_CHECK)
        assert np.allclose(eds.total[0][:N_CHECK], n + 0.5, rtol=1e-13)
        assert np.max(np.abs(eds.total[1])) == 0.0
        target = -5.0 / 12.0 * (n**2 + n + 11.0 / 30.0)
        assert np.allclose(eds.total[2][:N_CHECK], target, rtol=1e-12)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_sum_rule_fixes_adjacent_amplitude(mass, omega0, hbar):
    # beta*sqrt(n) with the solver's positive sign convention, any units
    params = OscillatorParams(mass=mass, omega0=omega0, lam=0.0, hbar=hbar)
    sol = sho_solve(params, 12)
    got = sol.a(0, 1)
    n = np.arange(13, dtype=float)
    assert np.allclose(got, params.beta * np.sqrt(n), rtol=1e-12)
    assert np.all(got[1:] > 0.0)
