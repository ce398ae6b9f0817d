"""Finite-resource observation simulator.

Scheduled binary POVM measurements on a small synthetic world with an
explicit thermodynamic ledger; discovery of observable systems via commuting
reference/pointer POVM sets; Leggett-Garg and Bell/CHSH inequality
evaluation as witnesses of system identification over time and across
separated observers.
"""

from ._kernels import BACKEND as kernel_backend
from .chsh import (BipartiteScenario, CorrelationTable, HVModel,
                   InstructionSet, JointVerdict, LOCCTranscript,
                   all_instruction_sets, charlie_play, chsh_value, hv_oracle,
                   run_epr, singlet_state, verdict_joint_identification)
from .config import ConfigError, ScenarioConfig, parse_config
from .leggett_garg import (CorrelatorMatrix, HystereticPointer, LGResult,
                           LGScenario, calibrate, eight_path_k, lg_test,
                           memory_condition_check, precession_scenario,
                           scan_precession_k, two_time_correlator)
from .measurement import (BinaryPOVM, ImpossibleBranchError,
                          MeasurementRecord, RecordRow, apply_measurement,
                          born_probabilities, run_record)
from .operators import (Operator, QuantumState, commutator, commutator_norm,
                        partial_trace, psd_sqrt, tensor_product)
from .rng import SplitMix64, derive_seed
from .schedule import (GeneralSchedule, PulseSchedule, RefinementCost,
                       ThermoLedger, dissipation_after,
                       per_step_dissipation_check, pi_pulse, refinement_cost,
                       schedule_hamiltonian, total_action)
from .systems import (ApparentSpace, DiscoveryFailure, ObservableSystem,
                      RefinementScanResult, WorldModel, build_apparent_space,
                      check_sieve, discover_system, observed_propagator,
                      refinement_scan)

__version__ = "0.1.0"
