"""Low-tubal-rank tensor completion by restarted Riemannian conjugate gradient."""

from .algebra import (
    condition_number,
    fro_norm,
    from_slices,
    identity,
    inf_norm,
    inner,
    spectral_norm,
    to_slices,
    tprod,
    ttranspose,
)
from .estimator import TensorCompleter
from .manifold import (
    TangentPoint,
    manifold_dim,
    retract,
    riemannian_gradient,
    tangent_project,
    vector_transport,
)
from .perturbation import perturbation_bounds
from .sampling import (
    SamplingSet,
    apply_r_omega,
    make_rng,
    max_multiplicity,
    partition_omega,
    sample_omega,
)
from .solver import (
    HardThreshold,
    ResampleTrim,
    SolverConfig,
    SolverReport,
    incoherence_mu0,
    init_hard_threshold,
    init_resample_trim,
    joint_mu1,
    rcg_complete,
    trim,
)
from .transform import dct3, dct_matrix, idct3
from .tsvd import MultiRank, SkinnyTcSvd, multi_rank_of, tcsvd, truncate_h_r

__version__ = "0.1.0"
