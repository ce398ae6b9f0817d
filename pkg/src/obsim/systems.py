"""Observable-system discovery, sieve checks, and the refinement scan.

An observable system is a partition of the deployed POVMs into a mutually
commuting "reference" subset whose outcomes stay fixed (they identify the
system) and a "pointer" subset whose outcomes vary (they are the system's
state).  Discovery repeats preparation + deployment cycles and grows the
largest commuting outcome-stable subset greedily.

The refinement scan probes ever more binary degrees of freedom of the world.
Each recorded bit dissipates c*k_B*T into the world, modeled as a random
single-qubit unitary kick whose angle grows with the cumulative heat per
degree of freedom (coupling ``backaction_strength``).  At zero coupling
re-identification is perfect; at positive coupling the reference outcomes
decay as refinement increases, which is the mechanism that caps refinement.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .measurement import BinaryPOVM, MeasurementRecord, apply_measurement
from .operators import Operator, QuantumState, commutator_norm
from .rng import SplitMix64, derive_seed
from .schedule import ThermoLedger


@dataclass(frozen=True)
class WorldModel:
    """World of n_dof binary degrees of freedom (Hilbert dimension 2**n_dof).

    backaction_strength couples dissipated heat to state disturbance: each
    recorded bit kicks a random qubit by angle
    backaction_strength * cumulative_heat_kbt / n_dof.
    """

    n_dof: int
    self_hamiltonian: Operator
    initial_state: QuantumState
    backaction_strength: float = 0.0
    dt_step: float = 1.0

    def __post_init__(self):
        if self.n_dof < 1:
            raise ValueError("n_dof must be >= 1")
        d = 2 ** self.n_dof
        if self.self_hamiltonian.dim != d or self.initial_state.dim != d:
            raise ValueError(f"expected dimension {d} operators for {self.n_dof} dof")
        if not self.self_hamiltonian.is_hermitian():
            raise ValueError("self-Hamiltonian must be Hermitian")
        if self.backaction_strength < 0:
            raise ValueError("backaction_strength must be nonnegative")

    @property
    def hilbert_dim(self) -> int:
        return 2 ** self.n_dof

    def step_unitary(self) -> np.ndarray:
        return expm(-1j * self.self_hamiltonian.matrix * self.dt_step)


@dataclass(frozen=True)
class ApparentSpace:
    """Outcome space spanned by the POVMs actually deployed (dim <= n)."""

    basis_labels: tuple[int, ...]  # 1-based POVM indices, first-use order
    n_available: int
    orthogonal_projectors: bool | None = None

    @property
    def dim(self) -> int:
        return len(self.basis_labels)


def build_apparent_space(record: MeasurementRecord, n: int,
                         povms: Sequence[BinaryPOVM] | None = None) -> ApparentSpace:
    """Distinct POVMs used in a record, in first-use order.

    When the POVM list is supplied, also flags whether the deployed effects
    are mutually orthogonal projectors (the case where the apparent dimension
    can saturate its bound).
    """
    seen: list[int] = []
    for row in record:
        if row.povm_index > n:
            raise ValueError(f"record references POVM {row.povm_index} > n = {n}")
        if row.povm_index not in seen:
            seen.append(row.povm_index)
    flag = None
    if povms is not None:
        used = [povms[i - 1] for i in seen]
        flag = all(p.is_projective() for p in used) and all(
            float(np.max(np.abs(a.effect1.matrix @ b.effect1.matrix))) <= 1e-12
            for i, a in enumerate(used) for b in used[i + 1:])
    return ApparentSpace(tuple(seen), n, flag)


@dataclass(frozen=True)
class ObservableSystem:
    """Reference (POVM, required outcome) pairs plus pointer POVMs."""

    reference: tuple[tuple[BinaryPOVM, int], ...]
    pointer: tuple[BinaryPOVM, ...]
    sieve_delta: float
    reference_indices: tuple[int, ...] = ()  # 1-based deployment indices
    pointer_indices: tuple[int, ...] = ()

    def __post_init__(self):
        labels = [p.label for p, _ in self.reference] + [p.label for p in self.pointer]
        if len(set(labels)) != len(labels):
            raise ValueError("reference and pointer POVMs must be disjoint")
        refs = [p for p, _ in self.reference]
        for i, a in enumerate(refs):
            for b in refs[i + 1:]:
                norm = commutator_norm(a.effect1, b.effect1)
                if norm > self.sieve_delta:
                    raise ValueError(
                        f"reference POVMs {a.label!r}, {b.label!r} do not commute "
                        f"(norm {norm:g} > delta {self.sieve_delta:g})")
        for p in self.pointer:
            for r in refs:
                norm = commutator_norm(p.effect1, r.effect1)
                if norm > self.sieve_delta:
                    raise ValueError(
                        f"pointer POVM {p.label!r} disturbs reference {r.label!r} "
                        f"(norm {norm:g} > delta {self.sieve_delta:g})")

    @property
    def k(self) -> int:
        return len(self.reference)

    @property
    def l(self) -> int:
        return len(self.pointer)

    def reference_state(self) -> str:
        return "".join(str(x) for _, x in self.reference)


@dataclass(frozen=True)
class DiscoveryFailure:
    """Search completed without a valid system; names the failing bound."""

    failing_bound: str  # "k" | "l"
    k_found: int
    l_found: int
    message: str


@dataclass(frozen=True)
class SieveCheck:
    kind: str  # "dynamics" | "reference-reference" | "reference-pointer"
    op_a: str
    op_b: str
    norm: float
    passed: bool


@dataclass(frozen=True)
class SieveReport:
    checks: tuple[SieveCheck, ...]
    delta: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def max_norm(self) -> float:
        return max((c.norm for c in self.checks), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("check,op_a,op_b,norm,passed\n")
        for c in self.checks:
            buf.write(f"{c.kind},{c.op_a},{c.op_b},{c.norm:.17g},{int(c.passed)}\n")
        return buf.getvalue()


def check_sieve(system: ObservableSystem, world: WorldModel, h_ow: Operator,
                delta: float) -> SieveReport:
    """Commutator checks that keep the reference state predictable.

    Per reference POVM: its effect must commute with the total Hamiltonian
    H_W + H_OW.  Pairwise: reference effects must mutually commute, and every
    pointer effect must commute with every reference effect.
    """
    h_total = world.self_hamiltonian + h_ow
    checks = []
    refs = [p for p, _ in system.reference]
    for r in refs:
        norm = commutator_norm(h_total, r.effect1)
        checks.append(SieveCheck("dynamics", r.label, "hamiltonian", norm,
                                 norm <= delta))
    for i, a in enumerate(refs):
        for b in refs[i + 1:]:
            norm = commutator_norm(a.effect1, b.effect1)
            checks.append(SieveCheck("reference-reference", a.label, b.label,
                                     norm, norm <= delta))
    for p in system.pointer:
        for r in refs:
            norm = commutator_norm(r.effect1, p.effect1)
            checks.append(SieveCheck("reference-pointer", r.label, p.label,
                                     norm, norm <= delta))
    return SieveReport(tuple(checks), delta)


def _cycle_outcomes(povms: Sequence[BinaryPOVM], world: WorldModel,
                    trials: int, rng: SplitMix64) -> np.ndarray:
    """Outcome matrix [cycle, povm]; each cycle re-prepares the world."""
    u = world.step_unitary()
    outcomes = np.zeros((trials, len(povms)), dtype=np.uint8)
    for cycle in range(trials):
        state = world.initial_state
        for j, povm in enumerate(povms):
            evolved = u @ state.rho @ u.conj().T
            state = QuantumState((evolved + evolved.conj().T) / 2)
            outcomes[cycle, j], state = apply_measurement(state, povm, rng)
    return outcomes


def discover_system(povms: Sequence[BinaryPOVM], world: WorldModel,
                    trials: int, delta: float, seed: int,
                    ) -> ObservableSystem | DiscoveryFailure:
    """Search the POVM set for an observable system.

    Runs ``trials`` preparation + deployment cycles; outcome-stable POVMs are
    reference candidates.  Grows the largest mutually commuting stable subset
    greedily (ascending commutator norm, ties by list order), then collects
    pointer POVMs that commute with every reference member but have varying
    outcomes.  Bounds: 1 < k < n and 1 < l <= n - k.
    """
    n = len(povms)
    if n < 4:
        raise ValueError("need at least 4 POVMs (k >= 2 and l >= 2)")
    if trials < 2:
        raise ValueError("need at least 2 cycles to test outcome stability")
    outcomes = _cycle_outcomes(povms, world, trials, SplitMix64(seed))
    stable = [j for j in range(n) if np.all(outcomes[:, j] == outcomes[0, j])]

    norms = {}
    for i in stable:
        for j in stable:
            if i < j:
                norms[(i, j)] = commutator_norm(povms[i].effect1, povms[j].effect1)

    commuting_pairs = sorted(
        (pair for pair, norm in norms.items() if norm <= delta),
        key=lambda pair: (norms[pair], pair))
    if not commuting_pairs:
        return DiscoveryFailure(
            "k", int(bool(stable)), 0,
            f"no commuting outcome-stable pair among {len(stable)} stable POVMs")

    ref_set = list(commuting_pairs[0])
    while True:
        eligible = []
        for cand in stable:
            if cand in ref_set:
                continue
            pair_norms = [norms[tuple(sorted((cand, r)))] for r in ref_set]
            if max(pair_norms) <= delta:
                eligible.append((max(pair_norms), cand))
        if not eligible:
            break
        eligible.sort()
        ref_set.append(eligible[0][1])
    ref_set.sort()
    k = len(ref_set)

    pointer_set = []
    for j in range(n):
        if j in ref_set or j in stable:
            continue
        if all(commutator_norm(povms[j].effect1, povms[r].effect1) <= delta
               for r in ref_set):
            pointer_set.append(j)
    l = len(pointer_set)

    if not 1 < k < n:
        return DiscoveryFailure("k", k, l,
                                f"reference size k = {k} violates 1 < k < {n}")
    if not 1 < l <= n - k:
        return DiscoveryFailure("l", k, l,
                                f"pointer size l = {l} violates 1 < l <= {n - k}")
    return ObservableSystem(
        reference=tuple((povms[j], int(outcomes[0, j])) for j in ref_set),
        pointer=tuple(povms[j] for j in pointer_set),
        sieve_delta=delta,
        reference_indices=tuple(j + 1 for j in ref_set),
        pointer_indices=tuple(j + 1 for j in pointer_set),
    )


@dataclass(frozen=True)
class PropagatorResult:
    """Empirical successor map over observed pointer-outcome strings."""

    transitions: tuple[tuple[str, str, int], ...]  # (state, successor, count)
    deterministic: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("state,next_state,count\n")
        for state, nxt, count in self.transitions:
            buf.write(f"{state},{nxt},{count}\n")
        return buf.getvalue()


def observed_propagator(record: MeasurementRecord,
                        system: ObservableSystem) -> PropagatorResult:
    """Successor statistics of the pointer state along a record.

    Record rows for the system's pointer POVMs are grouped into consecutive
    complete sweeps (one outcome per pointer POVM); each sweep is one
    observed pointer state |x_1 ... x_l>.
    """
    if not system.pointer_indices:
        raise ValueError("system has no pointer deployment indices")
    wanted = set(system.pointer_indices)
    states: list[str] = []
    partial: dict[int, int] = {}
    for row in record:
        if row.povm_index not in wanted:
            continue
        if row.povm_index in partial:
            partial = {}
        partial[row.povm_index] = row.outcome
        if len(partial) == len(wanted):
            states.append("".join(str(partial[i]) for i in system.pointer_indices))
            partial = {}
    counts: dict[tuple[str, str], int] = {}
    for prev, nxt in zip(states, states[1:]):
        counts[(prev, nxt)] = counts.get((prev, nxt), 0) + 1
    successors: dict[str, set[str]] = {}
    for (prev, nxt) in counts:
        successors.setdefault(prev, set()).add(nxt)
    deterministic = all(len(s) == 1 for s in successors.values())
    transitions = tuple((prev, nxt, counts[(prev, nxt)])
                        for prev, nxt in sorted(counts))
    return PropagatorResult(transitions, deterministic)


# Refinement scan


@dataclass(frozen=True)
class RefinementRow:
    n_probes: int
    heat_kbt: float
    ref_error_rate: float
    max_comm_norm: float


@dataclass(frozen=True)
class RefinementScanResult:
    rows: tuple[RefinementRow, ...]

    def __post_init__(self):
        counts = [r.n_probes for r in self.rows]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValueError("probe counts must be strictly increasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n_probes,heat_kBT,ref_error_rate,max_comm_norm\n")
        for r in self.rows:
            buf.write(f"{r.n_probes},{r.heat_kbt:.17g},{r.ref_error_rate:.17g},"
                      f"{r.max_comm_norm:.17g}\n")
        return buf.getvalue()


def _embed_qubit(op: np.ndarray, qubit: int, n_dof: int) -> np.ndarray:
    left = np.eye(2 ** qubit)
    right = np.eye(2 ** (n_dof - qubit - 1))
    return np.kron(np.kron(left, op), right)


_SIGMA = (np.array([[0, 1], [1, 0]], dtype=complex),
          np.array([[0, -1j], [1j, 0]], dtype=complex),
          np.array([[1, 0], [0, -1]], dtype=complex))


def _heat_kick(state: QuantumState, generator: np.ndarray, world: WorldModel,
               heat_kbt: float, rng: SplitMix64
               ) -> tuple[QuantumState, np.ndarray]:
    """Kick a random qubit by an angle set by the cumulative heat density.

    Axis is uniform on the sphere; returns the new state and the generator
    sum accumulated so far (the heat-dressed addition to the Hamiltonian).
    """
    qubit = min(int(rng.uniform() * world.n_dof), world.n_dof - 1)
    z = 2.0 * rng.uniform() - 1.0
    phi = 2.0 * math.pi * rng.uniform()
    r = math.sqrt(max(1.0 - z * z, 0.0))
    axis = (r * math.cos(phi), r * math.sin(phi), z)
    theta = world.backaction_strength * heat_kbt / world.n_dof
    if theta == 0.0:
        return state, generator
    n_sigma = sum(c * s for c, s in zip(axis, _SIGMA))
    local = (math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * n_sigma)
    u = _embed_qubit(local, qubit, world.n_dof)
    rho = u @ state.rho @ u.conj().T
    generator = generator + (theta / 2) * _embed_qubit(n_sigma, qubit, world.n_dof)
    return QuantumState((rho + rho.conj().T) / 2), generator


def z_probe(n_dof: int, qubit: int) -> BinaryPOVM:
    """Computational-basis readout of one qubit (outcome 1 selects |1>)."""
    p1 = _embed_qubit(np.diag([0.0, 1.0]).astype(complex), qubit, n_dof)
    return BinaryPOVM.projective(f"z{qubit}", Operator(p1))


def x_probe(n_dof: int, qubit: int) -> BinaryPOVM:
    p1 = _embed_qubit((np.eye(2) + _SIGMA[0]) / 2, qubit, n_dof)
    return BinaryPOVM.projective(f"x{qubit}", Operator(p1))


def y_probe(n_dof: int, qubit: int) -> BinaryPOVM:
    p1 = _embed_qubit((np.eye(2) + _SIGMA[1]) / 2, qubit, n_dof)
    return BinaryPOVM.projective(f"y{qubit}", Operator(p1))


def refinement_scan(world: WorldModel, probe_counts: Sequence[int],
                    ledger: ThermoLedger, trials: int, seed: int,
                    ) -> RefinementScanResult:
    """Re-identification error versus refinement depth.

    For each probe count p: one trial records the computational-basis
    outcomes of qubits 0..p-1 (the reference identification), then re-reads
    them; the error rate is the fraction of re-reads that disagree.  Every
    recorded bit charges c*k_B*T and triggers a heat kick.  The heat column
    reports the identification cost p * c (k_B T units); the commutator
    column is the largest reference commutator against the heat-dressed
    Hamiltonian H_W + accumulated kick generators.

    Trial seeds are shared across probe counts (common random numbers), so
    the error-rate column is a smooth function of p at fixed seed.
    """
    counts = list(probe_counts)
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise ValueError("probe_counts must be strictly increasing")
    if counts and counts[-1] > world.n_dof:
        raise ValueError(f"probe count {counts[-1]} exceeds {world.n_dof} degrees of freedom")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    probes = [z_probe(world.n_dof, q) for q in range(world.n_dof)]
    dim = world.hilbert_dim
    rows = []
    for p in counts:
        error_sum = 0.0
        max_norm = 0.0
        for trial in range(trials):
            rng = SplitMix64(derive_seed(seed, trial))
            state = world.initial_state
            generator = np.zeros((dim, dim), dtype=complex)
            bits = 0
            required = []
            for q in range(p):
                outcome, state = apply_measurement(state, probes[q], rng)
                required.append(outcome)
                bits += 1
                state, generator = _heat_kick(state, generator, world,
                                              bits * ledger.c_obs, rng)
            mismatches = 0
            for q in range(p):
                outcome, state = apply_measurement(state, probes[q], rng)
                if outcome != required[q]:
                    mismatches += 1
                bits += 1
                state, generator = _heat_kick(state, generator, world,
                                              bits * ledger.c_obs, rng)
            error_sum += mismatches / p
            h_eff = Operator(world.self_hamiltonian.matrix + generator)
            for q in range(p):
                norm = commutator_norm(h_eff, probes[q].effect1)
                if norm > max_norm:
                    max_norm = norm
        rows.append(RefinementRow(
            n_probes=p,
            heat_kbt=p * ledger.c_obs,
            ref_error_rate=error_sum / trials,
            max_comm_norm=max_norm,
        ))
    return RefinementScanResult(tuple(rows))


def qubit_world(n_dof: int, hamiltonian: Operator | None = None,
                initial_bits: Sequence[int] | None = None,
                backaction_strength: float = 0.0) -> WorldModel:
    """World of n_dof qubits; defaults: zero Hamiltonian, |0...0> start."""
    dim = 2 ** n_dof
    if hamiltonian is None:
        hamiltonian = Operator(np.zeros((dim, dim)))
    if initial_bits is None:
        initial_bits = [0] * n_dof
    index = 0
    for b in initial_bits:
        index = 2 * index + int(b)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return WorldModel(n_dof, hamiltonian, QuantumState(rho),
                      backaction_strength=backaction_strength)


def canonical_discovery_povms(n_dof: int) -> list[BinaryPOVM]:
    """Reference z-probes on all but the last qubit; x and y probes on it.

    The two pointer probes share a qubit and do not commute with each other,
    so under repeated fresh preparations their outcomes keep varying while
    the z-probe outcomes stay pinned.
    """
    if n_dof < 2:
        raise ValueError("need at least 2 degrees of freedom")
    povms = [z_probe(n_dof, q) for q in range(n_dof - 1)]
    povms.append(x_probe(n_dof, n_dof - 1))
    povms.append(y_probe(n_dof, n_dof - 1))
    return povms


def noncommuting_povms(n: int, dim_qubits: int = 1) -> list[BinaryPOVM]:
    """n single-qubit projective POVMs along pairwise non-commuting directions."""
    povms = []
    for k in range(n):
        angle = 0.4 + 0.5 * k
        direction = math.sin(angle) * _SIGMA[0] + math.cos(angle) * _SIGMA[2]
        p1 = _embed_qubit((np.eye(2) + direction) / 2, 0, dim_qubits)
        povms.append(BinaryPOVM.projective(f"dir{k}", Operator(p1)))
    return povms
