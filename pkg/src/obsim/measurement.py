"""Binary POVM measurements: Born-rule sampling, state update, record keeping.

A measurement is a two-effect POVM (E0, E1) with E0 + E1 = I.  Sampling uses
the Born rule p_x = tr(E_x rho); the post-measurement state is the minimal
disturbance update rho' = M_x rho M_x / p_x with M_x the Hermitian square
root of E_x.  A run of scheduled measurements produces a record table
(step, povm_index, outcome) and charges one bit per row to the ledger.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import (Operator, QuantumState, TOL_NUM, TOL_PSD, identity,
                        psd_sqrt)
from .rng import SplitMix64
from .schedule import ThermoLedger

#: Sampled branches with probability below this cannot be normalized.
TOL_PROB = 1e-12


class ImpossibleBranchError(RuntimeError):
    """A branch with (near-)zero Born probability was sampled."""


class BinaryPOVM:
    """Two-outcome POVM: PSD effects (effect0, effect1) summing to identity."""

    __slots__ = ("label", "effect0", "effect1", "_kraus")

    def __init__(self, label: str, effect0: Operator, effect1: Operator,
                 tol_num: float = TOL_NUM, tol_psd: float = TOL_PSD):
        if effect0.dim != effect1.dim:
            raise ValueError("effects have mismatched dimensions")
        if not effect0.is_psd(tol_psd) or not effect1.is_psd(tol_psd):
            raise ValueError(f"POVM {label!r}: effects must be PSD")
        total = effect0.matrix + effect1.matrix
        if float(np.max(np.abs(total - np.eye(effect0.dim)))) > tol_num:
            raise ValueError(f"POVM {label!r}: effects do not sum to identity")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "effect0", effect0)
        object.__setattr__(self, "effect1", effect1)
        object.__setattr__(self, "_kraus", [None, None])

    def __setattr__(self, name, value):
        raise AttributeError("BinaryPOVM is immutable")

    @property
    def dim(self) -> int:
        return self.effect0.dim

    def effect(self, outcome: int) -> Operator:
        return self.effect0 if outcome == 0 else self.effect1

    def kraus(self, outcome: int) -> Operator:
        """Hermitian Kraus operator sqrt(E_outcome), cached."""
        if self._kraus[outcome] is None:
            self._kraus[outcome] = psd_sqrt(self.effect(outcome))
        return self._kraus[outcome]

    def is_projective(self, tol: float = TOL_NUM) -> bool:
        e = self.effect1.matrix
        return bool(np.allclose(e @ e, e, atol=tol))

    @classmethod
    def projective(cls, label: str, projector: Operator) -> "BinaryPOVM":
        """POVM whose outcome-1 effect is the given projector."""
        return cls(label, identity(projector.dim) - projector, projector)

    def __repr__(self):
        return f"BinaryPOVM({self.label!r}, dim={self.dim})"


@dataclass(frozen=True)
class RecordRow:
    step: int
    povm_index: int  # 1-based
    outcome: int

    def __post_init__(self):
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if self.povm_index < 1:
            raise ValueError("povm_index is 1-based and must be >= 1")
        if self.outcome not in (0, 1):
            raise ValueError("outcome must be 0 or 1")


class MeasurementRecord:
    """Ordered outcome table; steps run 1..N without gaps."""

    __slots__ = ("rows", "seed")

    def __init__(self, rows: Sequence[RecordRow], seed: int):
        rows = tuple(rows)
        for k, row in enumerate(rows):
            if row.step != k + 1:
                raise ValueError(f"row {k}: step {row.step}, expected {k + 1}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "seed", seed)

    def __setattr__(self, name, value):
        raise AttributeError("MeasurementRecord is immutable")

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("step,povm_index,outcome\n")
        for row in self.rows:
            buf.write(f"{row.step},{row.povm_index},{row.outcome}\n")
        return buf.getvalue()


def born_probabilities(state: QuantumState, povm: BinaryPOVM) -> tuple[float, float]:
    """Born-rule outcome probabilities (p0, p1), clamped to [0, 1]."""
    if state.dim != povm.dim:
        raise ValueError(f"dimension mismatch: state {state.dim}, POVM {povm.dim}")
    p0 = float(np.trace(povm.effect0.matrix @ state.rho).real)
    p1 = float(np.trace(povm.effect1.matrix @ state.rho).real)
    if p0 < -TOL_NUM or p1 < -TOL_NUM or abs(p0 + p1 - 1.0) > TOL_NUM:
        raise ValueError(f"invalid Born probabilities ({p0}, {p1})")
    return min(max(p0, 0.0), 1.0), min(max(p1, 0.0), 1.0)


def apply_measurement(state: QuantumState, povm: BinaryPOVM,
                      rng: SplitMix64) -> tuple[int, QuantumState]:
    """Sample an outcome and return it with the updated state."""
    p0, _ = born_probabilities(state, povm)
    outcome = 0 if rng.uniform() < p0 else 1
    return outcome, collapse(state, povm, outcome)


def collapse(state: QuantumState, povm: BinaryPOVM, outcome: int) -> QuantumState:
    """Post-measurement state for a given outcome: M_x rho M_x / p_x."""
    p = born_probabilities(state, povm)[outcome]
    if p < TOL_PROB:
        raise ImpossibleBranchError(
            f"POVM {povm.label!r} outcome {outcome} has probability {p:g}")
    m = povm.kraus(outcome).matrix
    post = m @ state.rho @ m.conj().T
    post = (post + post.conj().T) / 2
    post = post / float(np.trace(post).real)
    return QuantumState(post)


def run_record(state: QuantumState, povms: Sequence[BinaryPOVM],
               deployment_sequence: Sequence[int], ledger: ThermoLedger,
               rng: SplitMix64,
               ) -> tuple[MeasurementRecord, QuantumState, ThermoLedger]:
    """Deploy POVMs in the given order (1-based indices), threading the state.

    Each deployment appends one record row and charges one bit to the ledger.
    """
    seed = rng.state
    rows = []
    for step, idx in enumerate(deployment_sequence, start=1):
        if not 1 <= idx <= len(povms):
            raise ValueError(f"deployment index {idx} out of range 1..{len(povms)}")
        outcome, state = apply_measurement(state, povms[idx - 1], rng)
        rows.append(RecordRow(step=step, povm_index=idx, outcome=outcome))
    record = MeasurementRecord(rows, seed=seed)
    return record, state, ledger.charge(len(rows))
