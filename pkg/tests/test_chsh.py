import math

import numpy as np
import pytest

from obsim.chsh import (BipartiteScenario, CorrelationTable, HVModel,
                        all_instruction_sets, charlie_play, chsh_grid_max,
                        chsh_value, count_reference_exceptions, hv_oracle,
                        product_zero_state, recompute_table, run_epr,
                        singlet_state, verdict_joint_identification)

STANDARD_ANGLES = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)
TWO_SQRT_TWO = 2 * math.sqrt(2)


def standard_scenario(state=None, trials=100_000):
    a, ap, b, bp = STANDARD_ANGLES
    return BipartiteScenario(shared_state=state or singlet_state(),
                             alice_angles=(a, ap), bob_angles=(b, bp),
                             trials=trials)


class TestChshValue:
    def test_zero_table(self):
        assert chsh_value(CorrelationTable((0.0, 0.0, 0.0, 0.0))) == 0.0

    def test_pr_box(self):
        # algebraic maximum: deterministic table with one sign flipped
        table = CorrelationTable((1.0, 1.0, 1.0, -1.0))
        assert chsh_value(table) == 4.0

    def test_singlet_standard_angles(self):
        table, _ = run_epr(standard_scenario(), mode="exact")
        assert abs(chsh_value(table) - TWO_SQRT_TWO) <= 1e-9


class TestInstructionSets:
    def test_sixteen_sets(self):
        assert len(all_instruction_sets()) == 16
        assert len({s.correlators() for s in all_instruction_sets()}) == 8

    def test_every_set_reaches_exactly_two(self):
        for s in all_instruction_sets():
            assert chsh_value(CorrelationTable(s.correlators())) == 2.0

    def test_convex_mixtures_bounded(self):
        rng = np.random.default_rng(3)
        vertex = np.array([s.correlators() for s in all_instruction_sets()])
        for _ in range(1000):
            w = rng.dirichlet(np.ones(16))
            table = CorrelationTable(tuple(w @ vertex))
            assert chsh_value(table) <= 2.0 + 1e-12


class TestRunEpr:
    def test_exact_singlet_values(self):
        table, transcript = run_epr(standard_scenario(), mode="exact")
        assert transcript is None
        expected = (-1, 1, -1, -1)
        for v, sign in zip(table.values, expected):
            assert np.isclose(v, sign / math.sqrt(2), atol=1e-12)

    def test_singlet_equal_angles_anticorrelated(self):
        sc = BipartiteScenario(singlet_state(), (0.7, 1.2), (0.7, 2.0), trials=10)
        table, _ = run_epr(sc, mode="exact")
        assert abs(table.values[0] + 1.0) <= 1e-12

    def test_product_state_grid_bounded(self):
        assert chsh_grid_max(product_zero_state(), n_angles=20) <= 2.0 + 1e-9

    def test_tsirelson_grid(self):
        assert chsh_grid_max(singlet_state(), n_angles=12) <= TWO_SQRT_TWO + 1e-9

    def test_sampled_matches_exact(self):
        exact_table, _ = run_epr(standard_scenario(), mode="exact")
        table, transcript = run_epr(standard_scenario(trials=50_000),
                                    mode="sampled", seed=2026)
        assert transcript is not None
        for est, se, exact in zip(table.values, table.stderr, exact_table.values):
            assert abs(est - exact) <= 4 * se
        s = chsh_value(table)
        assert abs(s - TWO_SQRT_TWO) <= 3 * table.combined_stderr()

    def test_joint_probabilities_against_raw_enumeration(self):
        # independent oracle: joint outcome probabilities from raw numpy
        # projector algebra on a random two-qubit state
        from obsim.chsh import _joint_outcome_probs
        rng = np.random.default_rng(99)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = a @ a.conj().T
        rho = rho / np.trace(rho).real
        from obsim.operators import QuantumState
        state = QuantumState(rho)
        angles_a = (0.3, 1.9)
        angles_b = (0.8, 2.4)
        scenario = BipartiteScenario(state, angles_a, angles_b, trials=10)
        probs = _joint_outcome_probs(scenario)
        pauli_x = np.array([[0, 1], [1, 0]], dtype=complex)
        pauli_z = np.diag([1.0, -1.0]).astype(complex)
        for sa, xa in enumerate(angles_a):
            na = math.sin(xa) * pauli_x + math.cos(xa) * pauli_z
            for sb, xb in enumerate(angles_b):
                nb = math.sin(xb) * pauli_x + math.cos(xb) * pauli_z
                for a_out in (0, 1):
                    pa = (np.eye(2) + (2 * a_out - 1) * na) / 2
                    for b_out in (0, 1):
                        pb = (np.eye(2) + (2 * b_out - 1) * nb) / 2
                        want = np.trace(rho @ np.kron(pa, pb)).real
                        got = probs[2 * sa + sb, 2 * a_out + b_out]
                        assert np.isclose(got, want, atol=1e-12)
                # sequential local collapse reproduces the joint distribution:
                # Alice's marginal then Bob's conditional on her post state
                pa0 = (np.eye(2) + (2 * 0 - 1) * na) / 2
                ka = np.kron(pa0, np.eye(2))
                p_a0 = np.trace(rho @ ka).real
                post = ka @ rho @ ka.conj().T / p_a0
                pb0 = np.kron(np.eye(2), (np.eye(2) - nb) / 2)
                p_b0_given = np.trace(post @ pb0).real
                assert np.isclose(probs[2 * sa + sb, 0],
                                  p_a0 * p_b0_given, atol=1e-12)

    def test_sampled_matches_exact_many_seeds(self):
        # every correlator within 4 stderr of exact across seeded runs
        exact_table, _ = run_epr(standard_scenario(), mode="exact")
        scenario = standard_scenario(trials=100_000)
        for seed in range(20):
            table, _ = run_epr(scenario, mode="sampled", seed=seed)
            for est, se, exact in zip(table.values, table.stderr,
                                      exact_table.values):
                assert abs(est - exact) <= 4 * se

    def test_sampled_determinism(self):
        t1, tr1 = run_epr(standard_scenario(trials=5000), mode="sampled", seed=7)
        t2, tr2 = run_epr(standard_scenario(trials=5000), mode="sampled", seed=7)
        assert t1.values == t2.values
        assert tr1.party_csv("alice") == tr2.party_csv("alice")

    def test_transcript_recomputation_bit_exact(self):
        table, transcript = run_epr(standard_scenario(trials=20_000),
                                    mode="sampled", seed=11)
        redone = recompute_table(transcript)
        assert redone.values == table.values
        assert redone.stderr == table.stderr
        assert redone.counts == table.counts

    def test_reference_constancy(self):
        _, transcript = run_epr(standard_scenario(trials=2000), mode="sampled",
                                seed=3)
        assert count_reference_exceptions(transcript) == 0
        for line in transcript.party_csv("alice").splitlines()[1:]:
            assert line.endswith(",10")


class TestCharliePlay:
    def test_zero_table_feasible(self):
        model = charlie_play(CorrelationTable((0.0, 0.0, 0.0, 0.0)))
        assert model is not None
        assert np.allclose(model.correlators(), 0.0, atol=1e-9)

    def test_all_ones_single_vertex(self):
        model = charlie_play(CorrelationTable((1.0, 1.0, 1.0, 1.0)))
        assert model is not None
        weights = model.weights
        assert np.isclose(weights.max(), 1.0)
        support = model.support()
        assert len(support) == 1
        assert support[0][0].correlators() == (1.0, 1.0, 1.0, 1.0)

    def test_singlet_impossible(self):
        table, _ = run_epr(standard_scenario(), mode="exact")
        assert charlie_play(table) is None
        assert chsh_value(table) > 2.0

    def test_model_reproduces_target(self):
        rng = np.random.default_rng(8)
        vertex = np.array([s.correlators() for s in all_instruction_sets()])
        for _ in range(50):
            w = rng.dirichlet(np.ones(16))
            target = tuple(w @ vertex)
            model = charlie_play(CorrelationTable(target))
            assert model is not None
            assert np.max(np.abs(np.array(model.correlators())
                                 - np.array(target))) <= 1e-8


class TestHvOracle:
    def test_matches_chsh_criterion(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            table = CorrelationTable(tuple(rng.uniform(-1, 1, size=4)))
            assert hv_oracle(table) == (chsh_value(table) <= 2.0 + 1e-9)

    def test_matches_linear_program(self):
        rng = np.random.default_rng(18)
        for _ in range(200):
            table = CorrelationTable(tuple(rng.uniform(-1, 1, size=4)))
            assert hv_oracle(table) == (charlie_play(table) is not None)

    def test_malformed_rejected(self):
        table = CorrelationTable((1.0, 1.0, 1.0, 1.0))
        object.__setattr__(table, "values", (1.5, 0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            hv_oracle(table)

    def test_vertex_tables_feasible(self):
        for s in all_instruction_sets():
            assert hv_oracle(CorrelationTable(s.correlators()))


class TestVerdict:
    def test_classical_table_indistinguishable(self):
        verdict = verdict_joint_identification(
            CorrelationTable((1.0, 1.0, 1.0, 1.0)))
        assert verdict.verdict == "indistinguishable-from-Charlie"
        assert verdict.hv_model is not None
        assert verdict.model_deviation == 0.0

    def test_singlet_witnessed(self):
        table, _ = run_epr(standard_scenario(), mode="exact")
        verdict = verdict_joint_identification(table)
        assert verdict.verdict == "joint-system-witnessed"
        assert verdict.hv_model is None

    def test_borderline_sampled_fails_three_sigma(self):
        # S = 2.01 with combined stderr 0.05: not significant
        e = 2.01 / 4
        table = CorrelationTable((e, e, e, -e), stderr=(0.025,) * 4,
                                 counts=(1000,) * 4)
        verdict = verdict_joint_identification(table)
        assert np.isclose(verdict.s_value, 2.01)
        assert np.isclose(table.combined_stderr(), 0.05)
        assert verdict.verdict == "indistinguishable-from-Charlie"
        assert verdict.hv_model is not None
        assert verdict.model_deviation > 0  # slightly outside the polytope

    def test_sampled_singlet_witnessed(self):
        table, _ = run_epr(standard_scenario(trials=100_000), mode="sampled",
                           seed=5)
        assert verdict_joint_identification(table).joint_system_witnessed


class TestHVModel:
    def test_weight_validation(self):
        with pytest.raises(ValueError):
            HVModel(np.ones(16))  # sums to 16
        with pytest.raises(ValueError):
            HVModel(np.concatenate([[-0.1, 1.1], np.zeros(14)]))

    def test_uniform_model_zero_correlators(self):
        model = HVModel(np.ones(16) / 16)
        assert np.allclose(model.correlators(), 0.0)
