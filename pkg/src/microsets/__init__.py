"""Microsets: uniformly branching fractals, their magnified views, and
the dimension/measure toolkit around them.

Subpackage map:

* ``seqgen``     binary branching sequences with guaranteed zero runs
* ``symtree``    generic packed-code symbolic trees and tree dimension
* ``moran``      uniformly branching cube constructions and covering checks
* ``clouds``     point-cloud generators for the partition machinery
* ``cubes``      nested partitions of finite metric point sets
* ``pigeonhole`` cylinder selection with large relative branching
* ``measures``   discrete measures, packing estimates, tangent pipeline
* ``cli``        the ``microsets`` command line
"""

from .errors import (
    ConstructionFailure,
    InfeasibleTarget,
    InsufficientDepth,
    InternalConsistencyError,
    PreconditionError,
    WitnessNotFound,
)
from .seqgen import (
    BranchingSeq,
    build_sequence,
    cesaro_slack,
    lower_cesaro,
    verify_zero_windows,
    window_schedule,
    window_sup_mean,
)
from .symtree import SymbolTree, branch_count, lower_dim_estimate, subtree
from .moran import (
    CubeTree,
    MoranSpec,
    UniformCubeTree,
    assouad_dyadic_estimator,
    assouad_from_formula,
    build_moran,
    calibrate_rho,
    check_small_microset,
    dyadic_microset_prefix,
    hausdorff_distance,
)
from .clouds import PointCloud, cantor_cloud, grid_cloud, random_cloud, single_point
from .cubes import (
    InnerPartition,
    build_partition,
    cloud_lower_dim_estimate,
    partition_to_tree,
    validate_partition,
)
from .pigeonhole import good_cylinder, reverse_furstenberg, verify_antifrostman
from .measures import (
    DiscreteMeasure,
    Homothety,
    counting_measure,
    frostman_lower_check,
    greedy_packing_sum,
    max_packing_sum_exhaustive,
    packing_upper_bound,
    pushforward,
    tangent_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "BranchingSeq",
    "build_sequence",
    "cesaro_slack",
    "lower_cesaro",
    "verify_zero_windows",
    "window_schedule",
    "window_sup_mean",
    "SymbolTree",
    "branch_count",
    "lower_dim_estimate",
    "subtree",
    "CubeTree",
    "MoranSpec",
    "UniformCubeTree",
    "assouad_dyadic_estimator",
    "assouad_from_formula",
    "build_moran",
    "calibrate_rho",
    "check_small_microset",
    "dyadic_microset_prefix",
    "hausdorff_distance",
    "PointCloud",
    "cantor_cloud",
    "grid_cloud",
    "random_cloud",
    "single_point",
    "InnerPartition",
    "build_partition",
    "cloud_lower_dim_estimate",
    "partition_to_tree",
    "validate_partition",
    "good_cylinder",
    "reverse_furstenberg",
    "verify_antifrostman",
    "DiscreteMeasure",
    "Homothety",
    "counting_measure",
    "frostman_lower_check",
    "greedy_packing_sum",
    "max_packing_sum_exhaustive",
    "packing_upper_bound",
    "pushforward",
    "tangent_pipeline",
    "ConstructionFailure",
    "InfeasibleTarget",
    "InsufficientDepth",
    "InternalConsistencyError",
    "PreconditionError",
    "WitnessNotFound",
    "__version__",
]
