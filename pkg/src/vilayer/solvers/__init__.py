from .baselines import batch_gradient, run_adam, run_sgd, sample_gradient
from .forward_backward import (Alg1State, Alg2State, ConfigurationError, Stop, check_partition,
                               contiguous_partition, forward_step, run_alg1, run_alg2, wall_clock)
from .schedules import (CoverageError, CoverageMonitor, Schedule, make_schedule,
                        verify_coverage)
from .trace import CSV_HEADER, Record, Trace, read_trace_csv

__all__ = [
    "Alg1State", "Alg2State", "CSV_HEADER", "ConfigurationError", "CoverageError",
    "CoverageMonitor", "Record", "Schedule", "Stop", "Trace", "batch_gradient",
    "check_partition", "contiguous_partition", "forward_step", "make_schedule",
    "read_trace_csv", "run_adam", "run_alg1", "run_alg2", "run_sgd", "sample_gradient",
    "verify_coverage", "wall_clock",
]
