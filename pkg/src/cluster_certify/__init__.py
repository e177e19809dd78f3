"""Stability certificates for prototype clustering.

Computes the geometric quantities of a benchmarked clustering instance
(effective radius, separation, margin, balance), turns exact or proxied
optimality gaps into misclassification certificates, reproduces two-ball
exact-recovery phase transitions, and verifies every shipped inequality
against brute-force enumeration at desk scale.
"""

from .certificates import (Certificate, ConditionNumber, DiagnosticReport,
                           EnvelopeSummary, cluster_size_functional,
                           condition_number, condition_number_bound, diagnose,
                           downstream_check, eta_bound_kmeans,
                           eta_zero_medoids, global_bound, hamming_tube_bound,
                           heterogeneous_bound, local_core_bound,
                           tracking_bound, tree_bound)
from .geometry import (Benchmark, CoreBelt, GeometrySummary, Instance,
                       benchmark_margin_check, core_belt,
                       enhanced_margin_check, summarize_geometry)
from .losses import LossSpec, eval_loss, increment, lipschitz_bound
from .partitions import (Matching, Partition, align, hamming_distance,
                         misclassification_rate)
from .phase import (PhaseCell, TwoBallConfig, exact_recovery_check,
                    generate_two_ball, merge_penalty_oracle,
                    mixing_coefficient_check, phase_sweep, threshold_kmeans,
                    threshold_kmedian_1d)
from .solvers import (GapReport, LloydConfig, SolveResult, best_response_partition,
                      best_response_prototypes, brute_force_opt,
                      derive_benchmark, displacement, exact_1d_dp, gaps,
                      hausdorff_drift, kmedoids_swap, lloyd, objective)
from .tracking import (DriftScenario, StepLog, load_scenario, run_tracking,
                       save_scenario, slow_drift_scenario)

__version__ = "0.1.0"
