"""Consolidation of structural causal models.

Partition a model into sub-models, compose each cluster's equations into
compositional variables that stay correct under every allowed intervention,
shrink them with verified rewrite passes, and check the result against the
base model by exhaustive or sampled equivalence.
"""

from .expr import (
    BoolDomain,
    CaseList,
    Const,
    ExistsIntervention,
    Expr,
    IfThenElse,
    IntDomain,
    InterventionValue,
    IsIntervened,
    MaxIntervenedIndex,
    RandomBernoulli,
    RealDomain,
    Ref,
    SymDomain,
    Unary,
    Binary,
    VarRef,
    VBool,
    VInt,
    VReal,
    VSym,
    eval_expr,
    node_count,
    substitute,
)
from .scm import (
    BernoulliDist,
    EndoVar,
    ExoVar,
    InterventionSet,
    InterventionSpace,
    NormalDist,
    PointMass,
    Scm,
    UniformFinite,
    UniformReal,
    derive_graph,
    relatives,
    reparameterize,
    validate,
)
from .partition import Partition, SubScm, check_partition, extract_sub_scm, order_clusters, psi_restrict
from .evaluation import eval_partitioned, eval_scm, make_rng, sample_exogenous
from .consolidation import (
    Ccv,
    CompressionReport,
    ConsolidatedScm,
    PassConfig,
    build_rho,
    compute_required_set,
    consolidate,
    eval_consolidated,
    prune_childless,
    register_closed_form,
    run_passes,
)
from .verification import (
    EquivalenceReport,
    EquivalenceStrategy,
    verify_equivalence,
    verify_pass,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
