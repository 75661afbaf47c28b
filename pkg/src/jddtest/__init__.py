"""Kernel two-sample testing for joint distributions.

Measures the distance between two joint distributions by embedding each as
the mean of a tensor-product feature map and taking the norm of the
difference (the joint distribution discrepancy, JDD), then compares the
biased empirical estimate against a distribution-free critical value to
decide whether a dataset shift has occurred, without assuming the shift is
confined to the inputs, the targets, or the conditional.
"""

from .discrepancy import (
    JddValue,
    PairedSample,
    RademacherDraw,
    RademacherEstimate,
    jdd_biased,
    jdd_embedding_oracle,
    jdd_naive_oracle,
    mmd_biased,
    rademacher_draw,
    rademacher_draw_value,
    rademacher_jensen_bound,
    rademacher_mc_estimate,
)
from .errors import BoundViolationError, IdxFormatError, InputError
from .kernels import (
    ExplicitLinearKernel,
    FunctionBoundReport,
    GramPair,
    KernelSpec,
    RbfKernel,
    check_function_bound,
    gram,
    gram_pair,
    kernel_eval,
)
from .mnist import ImageSet, ProjectionPair, load_idx, project, rotate, sample_class, save_idx
from .rng import pack_stream, rng_from
from .sampleio import read_sample_csv, write_sample_csv
from .shift_test import (
    CalibrationResult,
    TestConfig,
    TestReport,
    calibrate_null,
    critical_value,
    gaussian_null_sampler,
    run_test,
    threshold_grid,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BoundViolationError",
    "CalibrationResult",
    "ExplicitLinearKernel",
    "FunctionBoundReport",
    "GramPair",
    "IdxFormatError",
    "ImageSet",
    "InputError",
    "JddValue",
    "KernelSpec",
    "PairedSample",
    "ProjectionPair",
    "RademacherDraw",
    "RademacherEstimate",
    "RbfKernel",
    "TestConfig",
    "TestReport",
    "calibrate_null",
    "check_function_bound",
    "critical_value",
    "gaussian_null_sampler",
    "gram",
    "gram_pair",
    "jdd_biased",
    "jdd_embedding_oracle",
    "jdd_naive_oracle",
    "kernel_eval",
    "load_idx",
    "mmd_biased",
    "pack_stream",
    "project",
    "rademacher_draw",
    "rademacher_draw_value",
    "rademacher_jensen_bound",
    "rademacher_mc_estimate",
    "read_sample_csv",
    "rng_from",
    "rotate",
    "run_test",
    "sample_class",
    "save_idx",
    "threshold_grid",
    "write_sample_csv",
]
