"""Measurement scheduling and the thermodynamic cost ledger.

A ledger charges ``c_obs * k_B * T`` joules per irreversibly recorded bit
(Landauer cost, ``c_obs >= ln 2``).  Schedules describe *when* each
measurement operator acts: a pulse train deploys operators one at a time in a
fixed cyclic order, while a general schedule assigns per-step weights
``alpha_i(t)`` that must sum to one at every time.  Heat accounting is pure
bookkeeping: every operator carries unit dissipation weight, so the charge
per recorded bit never depends on which operators were deployed or how the
weights were split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .operators import Operator

K_B = 1.380649e-23  # Boltzmann constant, J/K (exact SI)

LN2 = math.log(2.0)

#: Sub-edge sample offsets used when checking weight normalization per step.
_STEP_SAMPLES = 16


@dataclass(frozen=True)
class ThermoLedger:
    """Running account of recorded bits and the heat they dissipated.

    c_obs: information-acquisition efficiency (dimensionless, >= ln 2).
    temperature: bath temperature in kelvin.
    dt_obs: seconds needed to record one bit.
    charged_bits: number of bits recorded so far.
    """

    c_obs: float = LN2
    temperature: float = 300.0
    dt_obs: float = 1.0
    charged_bits: int = 0

    def __post_init__(self):
        if self.c_obs < LN2 - 1e-12:
            raise ValueError(f"c_obs = {self.c_obs} below the Landauer floor ln 2")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.dt_obs <= 0:
            raise ValueError("dt_obs must be positive")
        if self.charged_bits < 0:
            raise ValueError("charged_bits must be nonnegative")

    @property
    def per_bit_heat(self) -> float:
        """Joules dissipated per recorded bit: c_obs * k_B * T."""
        return self.c_obs * K_B * self.temperature

    def heat(self) -> float:
        """Total dissipated heat in joules."""
        return self.charged_bits * self.per_bit_heat

    def heat_kbt(self) -> float:
        """Total dissipated heat in units of k_B T."""
        return self.charged_bits * self.c_obs

    def charge(self, bits: int) -> "ThermoLedger":
        """New ledger with ``bits`` additional recorded bits."""
        if bits < 0:
            raise ValueError("cannot charge a negative number of bits")
        return replace(self, charged_bits=self.charged_bits + bits)


@dataclass(frozen=True)
class PulseSchedule:
    """Cyclic pulse train: n operators deployed in fixed order for m cycles."""

    n: int
    m: int
    dt_obs: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("pulse schedule needs n >= 1 and m >= 1")
        if self.dt_obs <= 0:
            raise ValueError("dt_obs must be positive")

    @property
    def total_steps(self) -> int:
        return self.n * self.m

    def deployment_sequence(self) -> list[int]:
        """1-based operator indices in deployment order: 1..n repeated m times."""
        return [i + 1 for _ in range(self.m) for i in range(self.n)]


@dataclass(frozen=True)
class GeneralSchedule:
    """Stochastic schedule: weights(t, i) -> alpha_i(t), summing to 1 at all t."""

    n: int
    total_steps: int
    weights: Callable[[float, int], float]
    dt_obs: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.total_steps < 0:
            raise ValueError("general schedule needs n >= 1 and total_steps >= 0")

    def weights_at(self, t: float, tol: float = 1e-12) -> np.ndarray:
        w = np.array([self.weights(t, i) for i in range(self.n)], dtype=float)
        if np.any(w < -tol) or np.any(w > 1 + tol):
            raise ValueError(f"weights at t={t} outside [0, 1]: {w}")
        if abs(w.sum() - 1.0) > tol:
            raise ValueError(f"weights at t={t} sum to {w.sum()}, expected 1")
        return w


def unit_pulse(t: float) -> float:
    """Unit rectangle: 1 inside |t| < 1/2, 1/2 on the edges, 0 outside."""
    a = abs(t)
    if a < 0.5:
        return 1.0
    if a == 0.5:
        return 0.5
    return 0.0


def pi_pulse(i: int, m: int, n: int, dt: float, t: float) -> float:
    """Value of the offset-i pulse train at time t.

    The train is m unit-height pulses of width dt and period n*dt, the first
    covering (i*dt, (i+1)*dt).  Takes only the values {0, 1/2, 1}; trains of
    distinct offsets never overlap at value 1.
    """
    if not 0 <= i <= n - 1:
        raise ValueError(f"offset i={i} out of range [0, {n - 1}]")
    total = 0.0
    for j in range(m):
        total += unit_pulse((t - (n * j + i + 0.5) * dt) / dt)
    return total


def schedule_hamiltonian(schedule: PulseSchedule | GeneralSchedule,
                         operators: Sequence[Operator], t: float) -> Operator:
    """Weighted operator sum H(t) = sum_i w_i(t) M_i for the given schedule."""
    if len(operators) != schedule.n:
        raise ValueError(f"expected {schedule.n} operators, got {len(operators)}")
    dims = {op.dim for op in operators}
    if len(dims) != 1:
        raise ValueError(f"operators have mixed dimensions {sorted(dims)}")
    if isinstance(schedule, PulseSchedule):
        w = [pi_pulse(i, schedule.m, schedule.n, schedule.dt_obs, t)
             for i in range(schedule.n)]
    else:
        w = schedule.weights_at(t)
    d = operators[0].dim
    out = np.zeros((d, d), dtype=complex)
    for wi, op in zip(w, operators):
        if wi != 0.0:
            out = out + wi * op.matrix
    return Operator(out)


def dissipation_after(k: int, j: int, ledger: ThermoLedger) -> float:
    """Heat (J) dissipated by the k-th operator over its first j cycles: j*c*k_B*T.

    Independent of k: every deployment records one bit.
    """
    if j < 0:
        raise ValueError("cycle count j must be nonnegative")
    return j * ledger.per_bit_heat


def total_action(schedule: PulseSchedule, ledger: ThermoLedger) -> float:
    """Integrated interaction over the full run: n * m * dt * c * k_B * T.

    Factored as (n*m) * dt * per_bit_heat so it is bit-for-bit consistent
    with a ledger charged n*m bits.
    """
    return schedule.n * schedule.m * schedule.dt_obs * ledger.per_bit_heat


def per_step_dissipation_check(schedule: GeneralSchedule,
                               operators: Sequence[Operator],
                               ledger: ThermoLedger,
                               rel_tol: float = 1e-12) -> bool:
    """True iff every step dissipates exactly c*k_B*T under unit operator weights.

    With each operator carrying unit dissipation weight, the heat charged in
    step k is (1/dt) * integral of sum_i alpha_i(t) dt * c*k_B*T, so the check
    reduces to the weights summing to 1 throughout each step.  Weights are
    sampled on a fixed sub-grid per step, avoiding the step edges.
    """
    if len(operators) != schedule.n:
        raise ValueError(f"expected {schedule.n} operators, got {len(operators)}")
    per_bit = ledger.per_bit_heat
    dt = schedule.dt_obs
    for k in range(schedule.total_steps):
        acc = 0.0
        for s in range(_STEP_SAMPLES):
            t = (k + (s + 0.5) / _STEP_SAMPLES) * dt
            try:
                w = schedule.weights_at(t)
            except ValueError:
                return False
            acc += float(w.sum()) / _STEP_SAMPLES
        step_heat = acc * per_bit
        if abs(step_heat - per_bit) > rel_tol * per_bit:
            return False
    return True


class RefinementCost(NamedTuple):
    """Cost of identifying a system over d binary degrees of freedom."""

    heat_joules: float
    heat_kbt: float
    time_seconds: float


def refinement_cost(d: int, ledger: ThermoLedger) -> RefinementCost:
    """Heat d*c*k_B*T and time d*dt needed to probe d binary degrees of freedom."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return RefinementCost(
        heat_joules=d * ledger.per_bit_heat,
        heat_kbt=d * ledger.c_obs,
        time_seconds=d * ledger.dt_obs,
    )
