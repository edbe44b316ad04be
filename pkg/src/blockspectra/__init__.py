"""Blockwise spectral analysis of symmetric operators and optimizer benchmarks.

The package has five functional layers:

- ``operators``: symmetric linear operators (dense, diagonal, block diagonal)
  plus the exact eigendecomposition used as the small-scale testing oracle.
- ``slq``: stochastic Lanczos quadrature estimates of eigenvalue densities,
  accessed only through matrix-vector products.
- ``heterogeneity``: Jensen-Shannon distances between blockwise densities and
  the scalar heterogeneity score derived from them.
- ``quadlab``: block-diagonal quadratic benchmark problems, gradient descent
  and diagonally preconditioned (Adam-style) iterations, learning-rate search,
  and contraction-bound verification.
- ``toynet``: small dense networks with exact and finite-difference Hessians
  for studying near-block-diagonal structure and layer-scale heterogeneity.

The ``cli`` module ties these together into reproducible experiment runs.
"""

from blockspectra.operators import (
    BlockPartition,
    DenseSymmetric,
    DiagonalOperator,
    SymmetricOperator,
    block_diagonal,
    condition_number,
    exact_eigenvalues,
    principal_block,
)
from blockspectra.slq import (
    LanczosFactorization,
    RitzQuadrature,
    SLQParams,
    SpectralDensity,
    blockwise_densities,
    lanczos,
    ritz_quadrature,
    slq_density,
    smoothed_densities,
    smoothed_density,
)
from blockspectra.toynet import (
    Dataset,
    HessianSnapshot,
    ScaledMLP,
    ToyNet,
    cross_neuron_hessian_block,
    hessian_fd,
    make_blobs,
    offdiag_mass_ratio,
    random_toynet,
    scaled_mlp,
    train,
)
from blockspectra.heterogeneity import (
    HeterogeneityReport,
    js_distance,
    js_metric,
    normalize_spectrum,
    pairwise_heatmap,
)
from blockspectra.quadlab import (
    OptimizerConfig,
    QuadraticProblem,
    TheoryReport,
    Trajectory,
    adam_ema_run,
    adam_fixed_run,
    detect_limit_cycle,
    gd_run,
    grid_search,
    make_case,
    make_hard_instance,
    theory_report,
    verify_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "DenseSymmetric",
    "DiagonalOperator",
    "SymmetricOperator",
    "block_diagonal",
    "condition_number",
    "exact_eigenvalues",
    "principal_block",
    "LanczosFactorization",
    "RitzQuadrature",
    "SLQParams",
    "SpectralDensity",
    "blockwise_densities",
    "lanczos",
    "ritz_quadrature",
    "slq_density",
    "smoothed_densities",
    "smoothed_density",
    "Dataset",
    "HessianSnapshot",
    "ScaledMLP",
    "ToyNet",
    "cross_neuron_hessian_block",
    "hessian_fd",
    "make_blobs",
    "offdiag_mass_ratio",
    "random_toynet",
    "scaled_mlp",
    "train",
    "HeterogeneityReport",
    "js_distance",
    "js_metric",
    "normalize_spectrum",
    "pairwise_heatmap",
    "OptimizerConfig",
    "QuadraticProblem",
    "TheoryReport",
    "Trajectory",
    "adam_ema_run",
    "adam_fixed_run",
    "detect_limit_cycle",
    "gd_run",
    "grid_search",
    "make_case",
    "make_hard_instance",
    "theory_report",
    "verify_bounds",
]
