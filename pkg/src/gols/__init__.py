"""Gradient-only line-search training toolkit.

Determines learning rates for stochastic training algorithms by locating
directional-derivative sign changes along each search direction, which
stay bounded under dynamic mini-batch sub-sampling even when function
values turn discontinuous.
"""

from .analysis import (PdfEstimate, ScanResult, detect_local_min,
                       detect_snngpp, estimate_pdf, scan_line)
from .core import SeededRng, dot, elementwise_multiply, elementwise_pow, uniform_init
from .data import (BatchSampler, Dataset, DatasetSchema, Sample, Split,
                   load_csv_dataset, load_dataset, read_manifest, split_2_1_1,
                   standardize)
from .harness import (ExperimentConfig, RunLog, ScanConfig, emit_outputs,
                      emit_scan_outputs, run_repeated, run_scan_experiment,
                      run_training)
from .linesearch import (DeterministicLineFunction, GolsiParams, LineFunction,
                         MbssEvaluator, StepResult, fixed_step, golsi)
from .model import (BatchEval, MlpSpec, backprop_gradient, forward_loss,
                    hidden_units_heuristic, param_count)
from .optim import (FixedStep, GolsiStep, IterationRecord, IterationState,
                    iterate, make_rule)

__version__ = "0.1.0"

__all__ = [
    "BatchEval", "BatchSampler", "Dataset", "DatasetSchema",
    "DeterministicLineFunction", "ExperimentConfig", "FixedStep",
    "GolsiParams", "GolsiStep", "IterationRecord", "IterationState",
    "LineFunction", "MbssEvaluator", "MlpSpec", "PdfEstimate", "RunLog",
    "Sample", "ScanConfig", "ScanResult", "SeededRng", "Split", "StepResult",
    "backprop_gradient", "detect_local_min", "detect_snngpp", "dot",
    "elementwise_multiply", "elementwise_pow", "emit_outputs",
    "emit_scan_outputs", "estimate_pdf", "fixed_step", "forward_loss",
    "golsi", "hidden_units_heuristic", "iterate", "load_csv_dataset",
    "load_dataset", "make_rule", "param_count", "read_manifest",
    "run_repeated", "run_scan_experiment", "run_training", "scan_line",
    "split_2_1_1", "standardize", "uniform_init",
]
