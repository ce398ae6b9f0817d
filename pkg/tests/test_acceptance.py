"""Acceptance suite: every exit criterion at its stated tolerance.

Run with ``pytest -s tests/test_acceptance.py`` to see one line per
criterion.  Each test also enforces its runtime budget.
"""

import math
import time

import numpy as np

from obsim.chsh import (BipartiteScenario, CorrelationTable,
                        all_instruction_sets, chsh_grid_max, chsh_value,
                        hv_oracle, recompute_table, run_epr, singlet_state,
                        verdict_joint_identification)
from obsim.cli import main
from obsim.leggett_garg import (HystereticPointer, eight_path_k, lg_test,
                                precession_scenario, precession_step,
                                scan_precession_k, z_pointer_povm, LGScenario)
from obsim.measurement import BinaryPOVM, apply_measurement, born_probabilities
from obsim.operators import Operator, QuantumState, basis_state, identity
from obsim.rng import SplitMix64
from obsim.schedule import (GeneralSchedule, K_B, PulseSchedule, ThermoLedger,
                            per_step_dissipation_check, pi_pulse,
                            refinement_cost, total_action)
from obsim.systems import (DiscoveryFailure, ObservableSystem,
                           canonical_discovery_povms, check_sieve,
                           discover_system, noncommuting_povms, qubit_world,
                           refinement_scan)

LN2 = math.log(2.0)
_trapezoid = getattr(np, "trapezoid", np.trapz)
STANDARD_ANGLES = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)


class _Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert elapsed < self.seconds, (
                f"{self.name} took {elapsed:.1f}s, budget {self.seconds}s")
            print(f"ACCEPTANCE {self.name}: PASS ({elapsed:.2f}s)")
        else:
            print(f"ACCEPTANCE {self.name}: FAIL")
        return False


def test_01_pulse_algebra():
    with _Budget("1 pulse-algebra", 1.0):
        # piecewise values, boundaries included
        assert pi_pulse(0, 1, 3, 1.0, 0.5) == 1.0
        assert pi_pulse(0, 1, 3, 1.0, 0.0) == 0.5
        assert pi_pulse(0, 1, 3, 1.0, 1.0) == 0.5
        assert pi_pulse(0, 1, 3, 1.0, 1.7) == 0.0
        assert pi_pulse(1, 2, 3, 1.0, 1.5) == 1.0
        assert pi_pulse(1, 2, 3, 1.0, 4.5) == 1.0
        assert pi_pulse(1, 2, 3, 1.0, 3.5) == 0.0
        n, m = 4, 3
        grid = np.arange(0, n * m * 8 + 1) / 8.0
        for t in grid:
            values = [pi_pulse(i, m, n, 1.0, float(t)) for i in range(n)]
            assert all(v in (0.0, 0.5, 1.0) for v in values)
            assert sum(v == 1.0 for v in values) <= 1
        for dt in (1.0, 0.5):
            ts = np.arange(-1000, (n * m + 1) * 1000 + 1) * (dt / 1000)
            for i in range(n):
                vals = [pi_pulse(i, m, n, dt, float(t)) for t in ts]
                integral = _trapezoid(vals, ts)
                assert abs(integral - m * dt) <= 1e-6 * (m * dt)


def test_02_thermo_accounting():
    with _Budget("2 thermo-accounting", 1.0):
        n, m, dt, c, temp = 4, 3, 1.0, LN2, 300.0
        ledger = ThermoLedger(c_obs=c, temperature=temp, dt_obs=dt)
        assert total_action(PulseSchedule(n, m, dt), ledger) == \
            n * m * dt * (c * K_B * temp)
        big_n = 10
        assert ledger.charge(big_n).heat() == big_n * (c * K_B * temp)
        # per-step dissipation invariant under reweighting
        ops = [identity(1) for _ in range(3)]
        for weights in (lambda t, i: (1.0, 0.0, 0.0)[i],
                        lambda t, i: (0.2, 0.3, 0.5)[i],
                        lambda t, i: 1.0 / 3):
            sched = GeneralSchedule(n=3, total_steps=6, weights=weights)
            assert per_step_dissipation_check(sched, ops, ledger)


def test_03_measurement_core():
    with _Budget("3 measurement-core", 5.0):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            d = int(rng.integers(2, 5))
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            rho = a @ a.conj().T
            state = QuantumState(rho / np.trace(rho).real)
            h = (a + a.conj().T) / 2
            w, v = np.linalg.eigh(h)
            w = (w - w.min()) / (w.max() - w.min())
            e1 = Operator((v * w) @ v.conj().T)
            povm = BinaryPOVM("r", identity(d) - e1, e1)
            p0, p1 = born_probabilities(state, povm)
            assert abs(p0 + p1 - 1.0) <= 1e-9
        mismatches = 0
        for trial in range(1000):
            srng = SplitMix64(trial)
            angle = float(rng.uniform(0, math.pi))
            direction = math.sin(angle) * np.array([[0, 1], [1, 0]]) \
                + math.cos(angle) * np.diag([1.0, -1.0])
            povm = BinaryPOVM.projective("p", Operator((np.eye(2) + direction) / 2))
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            rho = a @ a.conj().T
            state = QuantumState(rho / np.trace(rho).real)
            o1, state = apply_measurement(state, povm, srng)
            o2, _ = apply_measurement(state, povm, srng)
            mismatches += o1 != o2
        assert mismatches == 0


def test_04_sieve_and_discovery():
    with _Budget("4 sieve-discovery", 5.0):
        delta = 1e-6
        world = qubit_world(4)
        povms = canonical_discovery_povms(4)
        system = discover_system(povms, world, trials=16, delta=delta, seed=123)
        assert isinstance(system, ObservableSystem)
        assert system.k == 3 and system.l == 2
        h_ow = Operator(sum(p.effect1.matrix for p in povms) / len(povms))
        assert check_sieve(system, world, h_ow, delta).passed
        bad = discover_system(noncommuting_povms(4), qubit_world(1),
                              trials=16, delta=delta, seed=5)
        assert isinstance(bad, DiscoveryFailure)


def test_05_refinement_mechanism():
    with _Budget("5 refinement-mechanism", 60.0):
        ledger = ThermoLedger()
        probe_counts = [1, 2, 3, 4]
        scan = refinement_scan(qubit_world(4, backaction_strength=1.6),
                               probe_counts, ledger, trials=100, seed=20260810)
        rates = [r.ref_error_rate for r in scan.rows]
        for a, b in zip(rates, rates[1:]):
            assert b >= a - 0.01  # <= 1 percentage point adjacent violation
        for row in scan.rows:
            assert row.heat_kbt == refinement_cost(row.n_probes, ledger).heat_kbt
            assert row.heat_kbt == row.n_probes * ledger.c_obs
        clean = refinement_scan(qubit_world(4), probe_counts, ledger,
                                trials=100, seed=20260810)
        assert all(r.ref_error_rate == 0.0 for r in clean.rows)


def test_06_leggett_garg():
    with _Budget("6 leggett-garg", 60.0):
        frozen = LGScenario(dynamics=precession_step(0.0), times=(0, 1, 2),
                            trials=2, pointer_povm=z_pointer_povm(),
                            initial_state=basis_state(2, 0))
        assert lg_test(frozen, mode="exact").correlators.k_value == 1.0
        # classical memoryless pointer: exact bound under 8-path enumeration
        for p_stay in (0.0, 0.25, 0.5, 0.75, 1.0):
            for flip in (0.0, 0.2, 0.5, 0.8, 1.0):
                pointer = HystereticPointer(p_stay, p_stay, flip)
                assert eight_path_k(pointer, (0, 1, 2)) <= 1.0
                assert eight_path_k(pointer, (0, 2, 5)) <= 1.0
        best_theta, best_k, grid = scan_precession_k(300)
        assert abs(best_k - 1.5) <= 1e-9
        assert all(k <= 1.5 + 1e-9 for _, k in grid)
        calibrated = precession_scenario(math.pi / 3, trials=100_000,
                                         calibrate_between=True)
        result = lg_test(calibrated, seed=606, mode="sampled")
        c = result.correlators
        assert c.k_value <= 1.0 + 3 * c.k_stderr


def test_07_chsh_fine():
    with _Budget("7 chsh-fine", 120.0):
        for s in all_instruction_sets():
            assert chsh_value(CorrelationTable(s.correlators())) == 2.0
        a, ap, b, bp = STANDARD_ANGLES
        scenario = BipartiteScenario(singlet_state(), (a, ap), (b, bp),
                                     trials=100_000)
        exact_table, _ = run_epr(scenario, mode="exact")
        assert abs(chsh_value(exact_table) - 2 * math.sqrt(2)) <= 1e-9
        sampled, _ = run_epr(scenario, mode="sampled", seed=707)
        s_val = chsh_value(sampled)
        assert abs(s_val - 2 * math.sqrt(2)) <= 3 * sampled.combined_stderr()
        rng = np.random.default_rng(20260810)
        disagreements = 0
        for _ in range(10_000):
            table = CorrelationTable(tuple(rng.uniform(-1, 1, size=4)))
            if hv_oracle(table) != (chsh_value(table) <= 2.0 + 1e-9):
                disagreements += 1
        assert disagreements == 0
        assert chsh_grid_max(singlet_state(), 12) <= 2 * math.sqrt(2) + 1e-9


def test_08_joint_verdicts():
    with _Budget("8 joint-verdicts", 10.0):
        classical = verdict_joint_identification(
            CorrelationTable((1.0, 1.0, 1.0, 1.0)))
        assert classical.verdict == "indistinguishable-from-Charlie"
        assert classical.hv_model is not None
        reproduced = classical.hv_model.correlators()
        assert np.allclose(reproduced, (1.0, 1.0, 1.0, 1.0), atol=1e-9)
        a, ap, b, bp = STANDARD_ANGLES
        scenario = BipartiteScenario(singlet_state(), (a, ap), (b, bp),
                                     trials=30_000)
        exact_table, _ = run_epr(scenario, mode="exact")
        assert verdict_joint_identification(exact_table).joint_system_witnessed
        table, transcript = run_epr(scenario, mode="sampled", seed=808)
        redone = recompute_table(transcript)
        assert redone.values == table.values
        assert redone.stderr == table.stderr
        assert redone.counts == table.counts


def test_09_reproducibility(tmp_path):
    with _Budget("9 reproducibility", 120.0):
        configs = {
            "schedule": "[run]\nexperiment = schedule\nseed = 9\n",
            "identify": "[run]\nexperiment = identify\nseed = 9\n",
            "refine": ("[run]\nexperiment = refine\nseed = 9\n"
                       "[refine]\ntrials = 20\n"),
            "lg": "[run]\nexperiment = lg\nseed = 9\n[lg]\ntrials = 10000\n",
            "chsh": ("[run]\nexperiment = chsh\nseed = 9\n"
                     "[chsh]\nmode = sampled\ntrials = 10000\n"),
        }
        for name, text in configs.items():
            cfg_path = tmp_path / f"{name}.ini"
            cfg_path.write_text(text)
            out_a = tmp_path / f"{name}_a"
            out_b = tmp_path / f"{name}_b"
            assert main(["--config", str(cfg_path), "--out", str(out_a),
                         "--quiet"]) == 0
            assert main(["--config", str(cfg_path), "--out", str(out_b),
                         "--quiet"]) == 0
            files_a = sorted(p.name for p in out_a.iterdir())
            files_b = sorted(p.name for p in out_b.iterdir())
            assert files_a == files_b and files_a
            for fname in files_a:
                assert ((out_a / fname).read_bytes()
                        == (out_b / fname).read_bytes()), (name, fname)
