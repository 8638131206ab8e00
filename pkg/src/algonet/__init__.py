"""Explicitly constructed ReLU networks: exact sorting and recursive fold/unfold approximation."""

from .branch import (
    Branch,
    BranchSpec,
    CrossingConstants,
    check_crossing,
    compile_branches,
    compile_crossing,
    compile_minmax,
    compile_sign_reversal,
)
from .fold import (
    InitMode,
    build_exp_pair,
    build_hat,
    build_monomials,
    build_mul,
    build_mul_x_only,
    build_periodic_cos,
    build_sawtooth,
    build_sincos_pair,
    build_square_folding,
    build_square_telgarsky,
    scaled_hat,
)
from .netfile import deserialize, load, save, serialize
from .network import (
    ParamCount,
    ReluNetwork,
    chain,
    compose,
    count_params,
    describe,
    forward,
    lift_identity,
    parallel,
    selection,
)
from .sorter import bitonic_schedule, build_sorter, verify_sorter
from .sparse import DimensionError, SparseAffineMap, SparseMatrix
from .sweep import ErrorSweepReport, error_sweep

__version__ = "0.1.0"
