"""Joint Kalman tracking and group-testing identification of faulty sensors.

A simulation library plus CLI: a linear-Gaussian tracker runs on pooled
sensor groups whose cumulative innovation-whiteness statistics expose
time-varying faults; the binary test outcomes are decoded into a sparse
per-(sensor, time) fault vector by LP relaxation.
"""

from .chi2 import chi2_band, chi2_cdf, chi2_pdf, chi2_quantile
from .decoder import DecoderConfig, LpSolution, brute_force_decode, decode, decode_fractional, solve_lp
from .detector import (
    DetectorConfig,
    TestChannel,
    WindowResult,
    band_exit_counts,
    one_by_one_nominal_cost,
    one_by_one_window,
    step_window,
)
from .dynamics import (
    GaussianState,
    SensorModel,
    StackedObservation,
    SystemModel,
    innovate,
    nis,
    predict,
    stack_group,
    update,
)
from .errors import BudgetExceededError, ConfigurationError, EmptyGroupError, NumericError
from .grouptest import (
    FaultVector,
    OutcomeVector,
    SamplingMatrix,
    apply_noise,
    boolean_encode,
    expected_chi2_upper_bound,
    generate_matrix,
    group_at,
    is_d_disjunct,
    load_matrix,
    load_outcome,
    nonempty_group_count,
    one_by_one_matrix,
    save_matrix,
    save_outcome,
)
from .harness import (
    ExperimentConfig,
    MetricsReport,
    error_counts,
    error_rates,
    fault_estimate_from_trips,
    rmse,
    run_experiment,
)
from .simulate import (
    AttackModel,
    ScenarioConfig,
    dump_measurements_csv,
    dump_truth_csv,
    sample_fault_pattern,
    simulate_truth,
    synthesize_measurements,
)

__version__ = "0.1.0"
