"""Wrapper algorithms that make supervised learners monotone, plus the
learning-curve experiment harness used to verify them empirically."""

from .models import (LabeledDataset, LinearModel, RunningLeastSquares,
                     concat_datasets, empirical_error, fit_least_squares,
                     predict)
from .stats import (PairedOutcomeCounts, TestDecision, alpha_for_run_budget,
                    mcnemar_exact_one_tailed, monotone_run_probability_bound,
                    paired_counts, update_ht, update_simple)
from .datasets import (BatchPlan, GeneratorSpec, RandomFourierMap,
                       dipping_spec, draw_batches, generate, generate_dipping,
                       generate_peaking, load_mnist, mnist_spec, peaking_spec,
                       random_fourier_features)
from .wrappers import (MonotoneCrossVal, MonotoneHoldout, RidgeSelect,
                       RoundDecision, StandardLearner)
from .config import (LEARNERS, PRESETS, ConfigError, ExperimentConfig,
                     apply_overrides, build_config, load_config_file)
from .harness import (CurveStats, ExperimentResult, RoundRecord, RunResult,
                      aulc, consistency_smoke, derive_rng,
                      nonmonotone_fraction, run_experiment, sweep,
                      verify_theorem1, write_results, write_sweep)
from .reporting import emit_report

__version__ = "0.1.0"
