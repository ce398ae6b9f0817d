"""Two-time correlators and the three-time Leggett-Garg test.

Protocol: each correlator C_jk comes from its own runs that measure only at
t_j and t_k; the earlier measurement is invasive (minimal-disturbance
update).  K = C21 + C32 - C31 <= 1 for any system whose three-time statistics
admit a single joint distribution; a violation witnesses that the runs
tracked one and the same system through time.

Two evaluation backends: exact outcome-path enumeration (tolerance-free) and
seeded Monte Carlo through the kernel layer.  Both consume the same
outcome-probability tables, so they agree by construction up to sampling
error.

Dynamics can be a per-step qubit unitary (pointer read in the computational
basis) or a classical two-state hysteretic pointer whose measurement kick
depends on the outcome: that outcome dependence is the "memory" that makes a
classical violation possible, and calibration erases it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .measurement import BinaryPOVM, born_probabilities, collapse
from .operators import (Operator, PAULI_X, QuantumState, TOL_NUM, basis_state,
                        maximally_mixed)
from .rng import derive_seed

PAIRS = ((2, 1), (3, 2), (3, 1))

#: Placeholder conditional for a zero-probability first outcome (never drawn).
_UNUSED_BRANCH = 0.5


@dataclass(frozen=True)
class HystereticPointer:
    """Classical two-state pointer with outcome-dependent measurement kick.

    Between measurements the state flips with probability base_flip per time
    step.  Reading the pointer returns its state exactly, then leaves the
    state unchanged with probability p_stay_after_<outcome> (else flips).
    """

    p_stay_after_1: float
    p_stay_after_0: float
    base_flip: float = 0.0

    def __post_init__(self):
        for name in ("p_stay_after_1", "p_stay_after_0", "base_flip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")


def memory_condition_check(pointer: HystereticPointer) -> bool:
    """True iff the measurement kick depends on the outcome (pointer memory)."""
    return pointer.p_stay_after_1 != pointer.p_stay_after_0


def calibrate(pointer_state, standard: int):
    """Re-prepare a pointer to the standard value, erasing measurement memory.

    Accepts a classical state (0/1) or a QuantumState; quantum pointers are
    reset to the computational-basis state of ``standard``.
    """
    if standard not in (0, 1):
        raise ValueError("calibration standard must be 0 or 1")
    if isinstance(pointer_state, QuantumState):
        return basis_state(pointer_state.dim, standard)
    return standard


@dataclass(frozen=True)
class LGScenario:
    """Three-time correlation experiment.

    dynamics: per-step unitary Operator (quantum) or HystereticPointer
    (classical).  times must be strictly increasing nonnegative integers.
    """

    dynamics: Operator | HystereticPointer
    times: tuple[int, int, int]
    trials: int
    pointer_povm: BinaryPOVM | None = None
    initial_state: QuantumState | None = None
    initial_p1: float = 0.5
    calibrate_between: bool = False
    calibration_standard: int = 0

    def __post_init__(self):
        t1, t2, t3 = self.times
        if not (0 <= t1 < t2 < t3):
            raise ValueError(f"times must satisfy 0 <= t1 < t2 < t3, got {self.times}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if isinstance(self.dynamics, Operator):
            if not self.dynamics.is_unitary():
                raise ValueError("quantum dynamics operator must be unitary")
            if self.pointer_povm is None:
                raise ValueError("quantum scenario needs a pointer_povm")
            if self.pointer_povm.dim != self.dynamics.dim:
                raise ValueError("pointer POVM and dynamics dimensions differ")
        elif not isinstance(self.dynamics, HystereticPointer):
            raise TypeError("dynamics must be an Operator or a HystereticPointer")
        if not 0.0 <= self.initial_p1 <= 1.0:
            raise ValueError("initial_p1 must lie in [0, 1]")

    @property
    def is_quantum(self) -> bool:
        return isinstance(self.dynamics, Operator)


@dataclass(frozen=True)
class CorrelatorMatrix:
    """The three two-time correlators and K = C21 + C32 - C31."""

    c21: float
    c32: float
    c31: float
    stderr21: float = 0.0
    stderr32: float = 0.0
    stderr31: float = 0.0

    def __post_init__(self):
        for c, se in ((self.c21, self.stderr21), (self.c32, self.stderr32),
                      (self.c31, self.stderr31)):
            if abs(c) > 1.0 + 3.0 * se + 1e-12:
                raise ValueError(f"correlator {c} outside [-1, 1] (stderr {se})")

    @property
    def k_value(self) -> float:
        return self.c21 + self.c32 - self.c31

    @property
    def k_stderr(self) -> float:
        return math.sqrt(self.stderr21 ** 2 + self.stderr32 ** 2
                         + self.stderr31 ** 2)


@dataclass(frozen=True)
class LGResult:
    correlators: CorrelatorMatrix
    verdict: str  # "violated" | "not-violated"
    mode: str  # "exact" | "sampled"

    @property
    def single_system_evidence(self) -> bool:
        return self.verdict == "violated"


def _evolve(rho: np.ndarray, u: np.ndarray, steps: int) -> np.ndarray:
    for _ in range(steps):
        rho = u @ rho @ u.conj().T
    return rho


def _quantum_tables(scenario: LGScenario, t_early: int, t_late: int
                    ) -> tuple[float, float, float]:
    u = scenario.dynamics.matrix
    povm = scenario.pointer_povm
    init = scenario.initial_state or maximally_mixed(povm.dim)
    state_early = QuantumState(_evolve(init.rho, u, t_early))
    p_first0, _ = born_probabilities(state_early, povm)
    conds = [_UNUSED_BRANCH, _UNUSED_BRANCH]
    for x, px in ((0, p_first0), (1, 1.0 - p_first0)):
        if px <= TOL_NUM:
            continue
        post = collapse(state_early, povm, x)
        if scenario.calibrate_between:
            post = calibrate(post, scenario.calibration_standard)
        rho_late = _evolve(post.rho, u, t_late - t_early)
        conds[x] = born_probabilities(QuantumState(rho_late), povm)[0]
    return p_first0, conds[0], conds[1]


def _chain_step(p1: float, flip: float) -> float:
    return p1 * (1.0 - flip) + (1.0 - p1) * flip


def _chain_evolve(p1: float, flip: float, steps: int) -> float:
    for _ in range(steps):
        p1 = _chain_step(p1, flip)
    return p1


def _classical_tables(scenario: LGScenario, t_early: int, t_late: int
                      ) -> tuple[float, float, float]:
    ptr = scenario.dynamics
    p1 = _chain_evolve(scenario.initial_p1, ptr.base_flip, t_early)
    p_first0 = 1.0 - p1
    conds = []
    for x in (0, 1):
        if scenario.calibrate_between:
            post_p1 = float(scenario.calibration_standard)
        elif x == 1:
            post_p1 = ptr.p_stay_after_1
        else:
            post_p1 = 1.0 - ptr.p_stay_after_0
        conds.append(1.0 - _chain_evolve(post_p1, ptr.base_flip, t_late - t_early))
    return p_first0, conds[0], conds[1]


def _pair_tables(scenario: LGScenario, pair: tuple[int, int]
                 ) -> tuple[float, float, float]:
    if pair not in PAIRS:
        raise ValueError(f"pair must be one of {PAIRS}, got {pair}")
    later, earlier = pair  # C_jk pairs are written (later, earlier)
    t_early = scenario.times[earlier - 1]
    t_late = scenario.times[later - 1]
    if scenario.is_quantum:
        return _quantum_tables(scenario, t_early, t_late)
    return _classical_tables(scenario, t_early, t_late)


def exact_two_time_correlator(scenario: LGScenario, pair: tuple[int, int]) -> float:
    """Tolerance-free correlator by enumerating the four outcome paths."""
    p_first0, pc00, pc10 = _pair_tables(scenario, pair)
    total = 0.0
    for x, px in ((0, p_first0), (1, 1.0 - p_first0)):
        if px == 0.0:
            continue
        pc0 = pc00 if x == 0 else pc10
        for y, py in ((0, pc0), (1, 1.0 - pc0)):
            total += px * py * (2 * x - 1) * (2 * y - 1)
    return total


def two_time_correlator(scenario: LGScenario, pair: tuple[int, int],
                        seed: int) -> tuple[float, float]:
    """Monte Carlo correlator estimate and its standard error."""
    p_first0, pc00, pc10 = _pair_tables(scenario, pair)
    n = scenario.trials
    total = _kernels.lg_pair_trials(p_first0, pc00, pc10, n, seed)
    est = total / n
    var = max(1.0 - est * est, 0.0)
    se = math.sqrt(var / (n - 1)) if n > 1 else 1.0
    return est, se


def lg_test(scenario: LGScenario, seed: int = 0, mode: str = "sampled") -> LGResult:
    """Evaluate all three correlators and the Leggett-Garg verdict.

    Sampled mode: violated iff K > 1 + 3 * combined stderr.  Exact mode:
    violated iff K > 1 beyond numerical tolerance.
    """
    if mode not in ("exact", "sampled"):
        raise ValueError("mode must be 'exact' or 'sampled'")
    if mode == "exact":
        c21, c32, c31 = (exact_two_time_correlator(scenario, p) for p in PAIRS)
        matrix = CorrelatorMatrix(c21, c32, c31)
        violated = matrix.k_value > 1.0 + 1e-12
    else:
        estimates = []
        for idx, pair in enumerate(PAIRS):
            estimates.append(two_time_correlator(scenario, pair,
                                                 derive_seed(seed, idx)))
        (c21, s21), (c32, s32), (c31, s31) = estimates
        matrix = CorrelatorMatrix(c21, c32, c31, s21, s32, s31)
        violated = matrix.k_value > 1.0 + 3.0 * matrix.k_stderr
    return LGResult(matrix, "violated" if violated else "not-violated", mode)


def eight_path_joint(pointer: HystereticPointer, times: tuple[int, int, int],
                     initial_p1: float = 0.5) -> dict[tuple[int, int, int], float]:
    """Joint distribution over the 8 outcome paths of a non-disturbing read.

    The chain evolves by base_flip only; measurement kicks are ignored.  This
    is the macrorealist reference: all three correlators derive from this one
    distribution, so K <= 1 is an arithmetic identity.
    """
    t1, t2, t3 = times
    f = pointer.base_flip
    p1_t1 = _chain_evolve(initial_p1, f, t1)
    joint = {}
    for x1 in (0, 1):
        p_x1 = p1_t1 if x1 == 1 else 1.0 - p1_t1
        p1_t2 = _chain_evolve(float(x1), f, t2 - t1)
        for x2 in (0, 1):
            p_x2 = p1_t2 if x2 == 1 else 1.0 - p1_t2
            p1_t3 = _chain_evolve(float(x2), f, t3 - t2)
            for x3 in (0, 1):
                p_x3 = p1_t3 if x3 == 1 else 1.0 - p1_t3
                joint[(x1, x2, x3)] = p_x1 * p_x2 * p_x3
    return joint


def eight_path_k(pointer: HystereticPointer, times: tuple[int, int, int],
                 initial_p1: float = 0.5) -> float:
    """K computed from the single 8-path joint distribution (always <= 1)."""
    joint = eight_path_joint(pointer, times, initial_p1)
    c21 = c32 = c31 = 0.0
    for (x1, x2, x3), p in joint.items():
        s1, s2, s3 = 2 * x1 - 1, 2 * x2 - 1, 2 * x3 - 1
        c21 += p * s2 * s1
        c32 += p * s3 * s2
        c31 += p * s3 * s1
    return c21 + c32 - c31


def precession_step(theta: float) -> Operator:
    """Qubit rotation by angle theta per step about the x axis."""
    return Operator(math.cos(theta / 2) * np.eye(2)
                    - 1j * math.sin(theta / 2) * PAULI_X.matrix)


def z_pointer_povm() -> BinaryPOVM:
    """Projective computational-basis readout (outcome 1 selects |1>)."""
    return BinaryPOVM.projective("pointer-z", Operator([[0, 0], [0, 1]]))


def precession_scenario(theta: float, times: tuple[int, int, int] = (0, 1, 2),
                        trials: int = 100_000,
                        calibrate_between: bool = False) -> LGScenario:
    """Canonical qubit scenario: x-precession, z readout, maximally mixed start."""
    return LGScenario(
        dynamics=precession_step(theta),
        times=times,
        trials=trials,
        pointer_povm=z_pointer_povm(),
        initial_state=maximally_mixed(2),
        calibrate_between=calibrate_between,
    )


def scan_precession_k(steps_per_half_turn: int = 300,
                      spacing: int = 1) -> tuple[float, float, list[tuple[float, float]]]:
    """Exact K over a grid of precession angles; returns (best_theta, best_k, grid).

    The grid is theta = pi * k / steps_per_half_turn for k = 1 .. N-1, which
    contains the analytic optimum pi/3 whenever steps_per_half_turn is a
    multiple of 3.
    """
    times = (0, spacing, 2 * spacing)
    grid = []
    best_theta, best_k = 0.0, -math.inf
    for k in range(1, steps_per_half_turn):
        theta = math.pi * k / steps_per_half_turn
        scenario = precession_scenario(theta, times=times, trials=1)
        kv = lg_test(scenario, mode="exact").correlators.k_value
        grid.append((theta, kv))
        if kv > best_k:
            best_theta, best_k = theta, kv
    return best_theta, best_k, grid
