"""Building causal compositional variables and consolidated models.

The pipeline follows one recipe per cluster: work out which cluster
variables must survive (user targets plus anything a later cluster reads),
inline everything else into those survivors while attaching intervention
branches to every variable that can actually be intervened, then shrink the
resulting trees with the rewrite passes.  Clusters that are not selected for
consolidation ride along unchanged, so partial consolidation falls out of
the same machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from . import expr as E
from . import images as I
from . import passes as P
from . import scm as S
from .errors import (
    DomainError,
    InterventionNotAllowedError,
    InvalidPartitionError,
    InvalidTargetError,
    PassBudgetExceededError,
    UnboundRefError,
)
from .evaluation import Assignment, eval_sub_scm
from .expr import Expr, VarRef, node_count, ref_sort_key
from .partition import (
    Partition,
    SubScm,
    check_partition,
    extract_sub_scm,
    order_clusters,
    psi_restrict,
)
from .scm import InterventionSet, InterventionSpace, Scm


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ccv:
    """A causal compositional variable: one equation per surviving target.

    Equations reference only local exogenous variables, earlier targets of
    the same Ccv, and intervention primitives on cluster variables; the
    cluster's internal variables have been inlined away.
    """

    targets: tuple[VarRef, ...]  # in evaluation order
    rho: dict[VarRef, Expr]
    interventions: InterventionSpace  # the cluster-restricted space
    provenance: int  # source cluster index

    def total_nodes(self) -> int:
        return sum(node_count(self.rho[t]) for t in self.targets)


@dataclass
class PassLogEntry:
    cluster: int
    target: Optional[VarRef]  # None when one application swept every target
    pass_name: str
    nodes_removed: int
    verdict: str
    guards_dropped: int = 0


@dataclass
class ClusterReport:
    cluster: int
    members: tuple[VarRef, ...]
    consolidated: bool
    nodes_before: int = 0
    nodes_after: int = 0
    source_equation_nodes: int = 0
    inlined_images: dict[VarRef, int] = field(default_factory=dict)


@dataclass
class CompressionReport:
    clusters: list[ClusterReport] = field(default_factory=list)
    passes: list[PassLogEntry] = field(default_factory=list)
    rejected: list[PassLogEntry] = field(default_factory=list)
    variables_marginalized: list[VarRef] = field(default_factory=list)
    atoms_dropped: list[VarRef] = field(default_factory=list)

    def cluster_report(self, idx: int) -> ClusterReport:
        for c in self.clusters:
            if c.cluster == idx:
                return c
        raise KeyError(idx)


@dataclass(frozen=True)
class PassthroughCluster:
    index: int
    sub: SubScm


@dataclass(frozen=True)
class CcvCluster:
    index: int
    sub: SubScm
    ccv: Ccv


@dataclass(frozen=True)
class ConsolidatedScm:
    """The merge of per-cluster results, evaluable like a partitioned model."""

    name: str
    base_name: str
    exogenous: tuple[S.ExoVar, ...]
    clusters: tuple[CcvCluster | PassthroughCluster, ...]  # evaluation order
    targets: tuple[VarRef, ...]
    interventions: InterventionSpace  # post-pruning space
    dropped_atom_vars: frozenset[VarRef]
    domains: dict[VarRef, E.Domain]  # every computed variable
    report: CompressionReport

    def computed_vars(self) -> list[VarRef]:
        out: list[VarRef] = []
        for c in self.clusters:
            if isinstance(c, CcvCluster):
                out.extend(c.ccv.targets)
            else:
                out.extend(c.sub.order)
        return out

    def ccvs(self) -> list[Ccv]:
        return [c.ccv for c in self.clusters if isinstance(c, CcvCluster)]


@dataclass
class PassConfig:
    """Knobs for the rewrite pipeline.

    The gate budget bounds the exhaustive case count per check; larger local
    spaces fall back to seeded sampling.  Speculative rewrites are only
    attempted where the gate can enumerate the local space completely.
    """

    passes: tuple[str, ...] = tuple(P.ALL_PASSES)
    max_rounds: int = 100
    tolerance: float = E.EPS_VAL
    gate_case_budget: int = 4096
    gate_sample_count: int = 256
    seed: int = 0
    gate: bool = True


# ---------------------------------------------------------------------------
# Required sets and childless pruning
# ---------------------------------------------------------------------------


def compute_required_set(cluster: Iterable[VarRef], targets: Iterable[VarRef], scm: Scm) -> set[VarRef]:
    """Targets inside the cluster plus cluster variables read by outsiders."""
    cset = set(cluster)
    tset = set(targets)
    graph = S.derive_graph_unchecked(scm)
    outside = [v for v in scm.endo_vars() if v not in cset]
    needed_outside = S.relatives(graph, outside, "parents") & cset
    return (cset & tset) | needed_outside


def prune_childless(scm: Scm, targets: Iterable[VarRef]) -> tuple[Scm, list[VarRef], list[VarRef]]:
    """Repeatedly drop non-target sinks, then every atom on a removed variable.

    Returns the pruned model, the removed variables, and the variables whose
    intervention atoms were dropped.  Surviving variables are exactly the
    targets and their ancestors, values of which are untouched under any
    surviving intervention set.
    """
    tset = set(targets)
    for t in tset:
        if not any(r.var == t for r in scm.endogenous):
            raise InvalidTargetError(f"{t} is not an endogenous variable")
    alive = dict.fromkeys(scm.endo_vars())
    removed: list[VarRef] = []
    while True:
        graph = S.derive_graph_unchecked(_restrict(scm, alive))
        dropped_now = []
        for v in list(alive):
            if v in tset:
                continue
            if not graph.children.get(v):
                dropped_now.append(v)
        if not dropped_now:
            break
        for v in dropped_now:
            del alive[v]
            removed.append(v)
    had_atoms = [v for v in removed if scm.interventions.atom_values(v)]
    pruned = _restrict(scm, alive)
    pruned = replace(pruned, interventions=scm.interventions.drop_atoms(removed))
    return pruned, removed, had_atoms


def _restrict(scm: Scm, keep: Iterable[VarRef]) -> Scm:
    ks = set(keep)
    return replace(scm, endogenous=tuple(r for r in scm.endogenous if r.var in ks))


def prune_childless_consolidated(
    cons: ConsolidatedScm, targets: Iterable[VarRef]
) -> tuple[ConsolidatedScm, list[VarRef], list[VarRef]]:
    """Childless pruning over an already consolidated model.

    Only passthrough clusters can shed variables (a compositional cluster's
    targets are all required by construction); consumers are equations within
    the same cluster and later clusters' local inputs.
    """
    tset = set(targets)
    computed = set(cons.computed_vars())
    for t in tset:
        if t not in computed:
            raise InvalidTargetError(f"{t} is not computed by the model")
    removed: list[VarRef] = []
    clusters = list(cons.clusters)
    while True:
        needed = set(tset)
        for c in clusters:
            needed.update(c.sub.local_exogenous)
            if isinstance(c, CcvCluster):
                needed.update(c.ccv.targets)
                for tree in c.ccv.rho.values():
                    needed.update(E.free_refs(tree))
            else:
                for tree in c.sub.equations.values():
                    needed.update(E.free_refs(tree))
        dropped_now = []
        for ci, c in enumerate(clusters):
            if isinstance(c, CcvCluster):
                continue
            for v in c.sub.order:
                if v not in needed:
                    dropped_now.append((ci, v))
        if not dropped_now:
            break
        for ci, v in dropped_now:
            c = clusters[ci]
            sub = c.sub
            clusters[ci] = PassthroughCluster(
                c.index,
                replace(
                    sub,
                    cluster=sub.cluster - {v},
                    order=tuple(x for x in sub.order if x != v),
                    equations={k: e for k, e in sub.equations.items() if k != v},
                ),
            )
            removed.append(v)
        clusters = [c for c in clusters if c.sub.order]
    had_atoms = [v for v in removed if cons.interventions.atom_values(v)]
    pruned = replace(
        cons,
        clusters=tuple(clusters),
        interventions=cons.interventions.drop_atoms(removed),
        dropped_atom_vars=cons.dropped_atom_vars | frozenset(removed),
    )
    return pruned, removed, had_atoms


# ---------------------------------------------------------------------------
# Building the compositional equations
# ---------------------------------------------------------------------------


def wrap_intervention(var: VarRef, body: Expr) -> Expr:
    """The conditional-branching form: forced value when intervened, else body."""
    return E.IfThenElse(E.IsIntervened(var), E.InterventionValue(var), body)


def build_rho(sub: SubScm, targets: Iterable[VarRef]) -> tuple[Ccv, dict[VarRef, int]]:
    """Inline a cluster's equations into its targets.

    Walks the cluster in topological order.  Non-target variables are
    substituted into their consumers (so they are never computed at
    evaluation time); target variables stay referencable, which keeps shared
    prefixes shared.  Any variable with an atom in the cluster's intervention
    space gets the conditional branch attached before it is consumed.

    Also returns the effective image size of every inlined variable, when
    finite: the raw material for the composition-bound bookkeeping.
    """
    tset = set(targets)
    for t in tset:
        if t not in sub.cluster:
            raise InvalidTargetError(f"{t} is not in the cluster")

    env_images = _local_env_images(sub)
    ictx = I.ImageContext(env_images, sub.interventions, {})

    defs: dict[VarRef, Expr] = {}
    rho: dict[VarRef, Expr] = {}
    inlined_images: dict[VarRef, int] = {}
    order: list[VarRef] = []
    for var in sub.order:
        eq = sub.equations[var]
        bindings = {w: defs[w] for w in E.free_refs(eq) if w in defs}
        core = E.substitute(eq, bindings)
        if sub.interventions.atom_values(var):
            core = wrap_intervention(var, core)
        if var in tset:
            rho[var] = core
            order.append(var)
        else:
            defs[var] = core
            size = I.finite_size(I.image_of(core, ictx))
            if size is not None:
                inlined_images[var] = size
    ccv = Ccv(tuple(order), rho, sub.interventions, provenance=-1)
    return ccv, inlined_images


def _local_env_images(sub: SubScm) -> dict[VarRef, I.Image]:
    out: dict[VarRef, I.Image] = {}
    for v in sub.local_exogenous:
        dist = sub.local_dists.get(v)
        img = I.dist_image(dist) if dist is not None else I.TOP
        if isinstance(img, I.TopImage):
            img = I.domain_image(sub.domains[v])
        out[v] = img
    return out


# ---------------------------------------------------------------------------
# The pass pipeline
# ---------------------------------------------------------------------------


def _inverse_rules(sub: SubScm) -> list[tuple[Expr, Expr]]:
    rules: list[tuple[Expr, Expr]] = []
    for a, b in sub.inverse_pairs:
        if a not in sub.equations or b not in sub.equations:
            continue
        f_a, f_b = sub.equations[a], sub.equations[b]
        a_reads = E.free_refs(f_a)
        if len(a_reads) != 1 or E.free_refs(f_b) != {a}:
            continue
        (x,) = a_reads
        rules.append((E.substitute(f_b, {a: f_a}), E.Ref(x)))
        atom_vals = sub.interventions.atom_values(a)
        if atom_vals:
            wrapped = E.substitute(f_b, {a: wrap_intervention(a, f_a)})
            forced = E.substitute(f_b, {a: E.InterventionValue(a)})
            rules.append((wrapped, E.IfThenElse(E.IsIntervened(a), forced, E.Ref(x))))
            # variants with the forced value already specialized by earlier passes
            for v in atom_vals:
                w2 = E.substitute(f_b, {a: E.IfThenElse(E.IsIntervened(a), E.Const(v), f_a)})
                f2 = E.substitute(f_b, {a: E.Const(v)})
                rules.append((w2, E.IfThenElse(E.IsIntervened(a), f2, E.Ref(x))))
    return rules


def run_passes(
    ccv: Ccv,
    sub: SubScm,
    config: PassConfig = None,
    log: list[PassLogEntry] = None,
    rejected: list[PassLogEntry] = None,
) -> Ccv:
    """Iterate the enabled passes to a fixpoint, gating every acceptance.

    A candidate is accepted only when it does not grow the tree and the
    equivalence gate answers Equal over the cluster's local spaces.  Raises
    when the round cap is hit while rewrites are still firing.
    """
    from .verification import gate_strategy_for, verify_pass

    config = config or PassConfig()
    log = log if log is not None else []
    rejected = rejected if rejected is not None else []
    nondet = any(E.contains_draw(t) for t in ccv.rho.values())
    if nondet:
        return ccv  # draws make the gate meaningless; leave the tree alone

    env_images = _local_env_images(sub)
    var_kinds = sub.var_kinds()
    inverse_rules = _inverse_rules(sub)
    strategy = gate_strategy_for(sub, config) if config.gate else None
    exhaustive_gate = strategy is not None and strategy.mode == "exhaustive"

    current = ccv
    enabled = [p for p in config.passes if p in P.PURE_PASSES or p == P.ABSORB]

    def gated(trial: Ccv, pass_name: str, target, removed: int, guards: int) -> bool:
        nonlocal current
        verdict = "ungated"
        if strategy is not None:
            report = verify_pass(current, trial, sub, strategy)
            verdict = report.verdict
            if report.verdict != "equal":
                rejected.append(
                    PassLogEntry(current.provenance, target, pass_name, removed, verdict, guards)
                )
                return False
        current = trial
        log.append(PassLogEntry(current.provenance, target, pass_name, removed, verdict, guards))
        return True

    for _round in range(config.max_rounds):
        changed = False
        for pass_name in enabled:
            if pass_name == P.ABSORB:
                if not exhaustive_gate:
                    continue  # speculative rewrites need a complete gate
                for target in current.targets:
                    accepted = True
                    while accepted:
                        accepted = False
                        for candidate in P.absorb_candidates(current.rho[target]):
                            before_tree = current.rho[target]
                            removed = node_count(before_tree) - node_count(candidate)
                            if candidate == before_tree or removed < 0:
                                continue
                            trial = replace(current, rho={**current.rho, target: candidate})
                            if gated(trial, P.ABSORB, target, removed, 0):
                                accepted = True
                                changed = True
                                break
                continue
            # one application sweeps every target, then the gate runs once
            fn = P.PURE_PASSES[pass_name]
            new_rho: dict[VarRef, Expr] = {}
            removed_total = 0
            guards_total = 0
            for pos, target in enumerate(current.targets):
                ctx = P.PassContext(
                    env_images=env_images,
                    space=current.interventions,
                    var_kinds=var_kinds,
                    inverse_rules=inverse_rules,
                    earlier_targets={t: new_rho[t] for t in current.targets[:pos]},
                )
                before_tree = current.rho[target]
                candidate = fn(before_tree, ctx)
                removed = node_count(before_tree) - node_count(candidate)
                if candidate == before_tree or removed < 0:
                    new_rho[target] = before_tree
                    continue
                new_rho[target] = candidate
                removed_total += removed
                guards_total += ctx.stats.guards_dropped
            if all(new_rho[t] == current.rho[t] for t in current.targets):
                continue
            trial = replace(current, rho=new_rho)
            if gated(trial, pass_name, None, removed_total, guards_total):
                changed = True
        if not changed:
            return current
    raise PassBudgetExceededError(f"no fixpoint after {config.max_rounds} rounds")


# ---------------------------------------------------------------------------
# Evaluation of compositional variables and consolidated models
# ---------------------------------------------------------------------------


def eval_ccv(ccv: Ccv, local_u: Assignment, local_iv: InterventionSet, rng=None) -> Assignment:
    """Evaluate the targets in order; earlier targets are visible to later ones."""
    env: Assignment = dict(local_u)
    out: Assignment = {}
    for t in ccv.targets:
        val = E.eval_expr(ccv.rho[t], env, local_iv, rng=rng)
        env[t] = val
        out[t] = val
    return out


def eval_consolidated(
    cons: ConsolidatedScm,
    u: Assignment,
    interventions: InterventionSet = None,
    rng=None,
    check_membership: bool = True,
) -> Assignment:
    """Evaluate a consolidated model.

    Atoms on marginalized variables are projected away first (they cannot
    influence any surviving target), then clusters run in order exactly like
    partitioned evaluation, with compositional equations standing in for the
    consolidated clusters.
    """
    iv = interventions if interventions is not None else InterventionSet.empty()
    iv = iv.drop(cons.dropped_atom_vars)
    if check_membership and not cons.interventions.contains(iv):
        raise InterventionNotAllowedError(f"{iv} is not in the allowed intervention space")
    acc: Assignment = {}
    for row in cons.exogenous:
        if row.var not in u:
            raise UnboundRefError(row.var)
        if not E.value_in_domain(u[row.var], row.domain):
            raise DomainError(f"input {row.var}={u[row.var]} is outside its domain")
        acc[row.var] = u[row.var]
    for cluster in cons.clusters:
        if isinstance(cluster, PassthroughCluster):
            local_u = {v: acc[v] for v in cluster.sub.local_exogenous}
            acc.update(eval_sub_scm(cluster.sub, local_u, psi_restrict(iv, cluster.sub.cluster), rng=rng))
        else:
            local_u = {v: acc[v] for v in cluster.sub.local_exogenous}
            local_iv = psi_restrict(iv, cluster.sub.cluster)
            acc.update(eval_ccv(cluster.ccv, local_u, local_iv, rng=rng))
    return {v: acc[v] for v in cons.computed_vars()}


# ---------------------------------------------------------------------------
# The end-to-end consolidation
# ---------------------------------------------------------------------------


def consolidate(
    scm: Scm,
    partition: Partition,
    targets: Iterable[VarRef],
    clusters_to_consolidate: Optional[Iterable[int]] = None,
    config: PassConfig = None,
) -> ConsolidatedScm:
    """Partition, prune, inline, and compress a model around the given targets.

    `clusters_to_consolidate` selects cluster indices of the *original*
    partition; everything else is kept as an ordinary sub-model.  Passing an
    empty set yields the partitioned model unchanged (no compositional
    equations at all).
    """
    config = config or PassConfig()
    tlist = sorted(set(targets), key=ref_sort_key)
    endo = set(scm.endo_vars())
    for t in tlist:
        if t not in endo:
            raise InvalidTargetError(f"target {t} is not endogenous")
    pre_report = check_partition(scm, partition)
    if not pre_report.valid:
        raise InvalidPartitionError(str(pre_report))

    pruned, removed, atom_vars = prune_childless(scm, tlist)
    survivor_partition = partition.restrict_to(pruned.endo_vars())
    index_map = [i for i, c in enumerate(partition.clusters) if c & set(pruned.endo_vars())]

    order = order_clusters(pruned, survivor_partition)
    if clusters_to_consolidate is None:
        selected = set(range(len(partition.clusters)))
    else:
        selected = set(clusters_to_consolidate)

    report = CompressionReport(
        variables_marginalized=removed,
        atoms_dropped=atom_vars,
    )
    built: list[CcvCluster | PassthroughCluster] = []
    for pos in order:
        original_index = index_map[pos]
        cluster = survivor_partition.clusters[pos]
        sub = extract_sub_scm(pruned, cluster)
        creport = ClusterReport(
            cluster=original_index,
            members=tuple(sorted(cluster, key=ref_sort_key)),
            consolidated=original_index in selected,
            source_equation_nodes=sum(node_count(sub.equations[v]) for v in sub.order),
        )
        if original_index in selected:
            required = compute_required_set(cluster, tlist, pruned)
            ccv, inlined = build_rho(sub, required)
            ccv = replace(ccv, provenance=original_index)
            creport.nodes_before = ccv.total_nodes()
            creport.inlined_images = inlined
            ccv = run_passes(ccv, sub, config, log=report.passes, rejected=report.rejected)
            creport.nodes_after = ccv.total_nodes()
            built.append(CcvCluster(original_index, sub, ccv))
        else:
            creport.nodes_before = creport.source_equation_nodes
            creport.nodes_after = creport.source_equation_nodes
            built.append(PassthroughCluster(original_index, sub))
        report.clusters.append(creport)

    domains = {v: pruned.domain_of(v) for v in pruned.endo_vars()}
    cons = ConsolidatedScm(
        name=f"{scm.name}.consolidated",
        base_name=scm.name,
        exogenous=pruned.exogenous,
        clusters=tuple(built),
        targets=tuple(tlist),
        interventions=pruned.interventions,
        dropped_atom_vars=frozenset(removed),
        domains=domains,
        report=report,
    )
    for t in tlist:
        if t not in set(cons.computed_vars()):
            raise InvalidTargetError(f"target {t} was lost during consolidation")
    return cons


def attach_ccvs(cons: ConsolidatedScm, ccvs: dict[int, Ccv]) -> ConsolidatedScm:
    """Swap hand-written compositional equations into selected clusters."""
    new_clusters: list[CcvCluster | PassthroughCluster] = []
    seen = set()
    for cluster in cons.clusters:
        if cluster.index in ccvs:
            ccv = replace(ccvs[cluster.index], provenance=cluster.index)
            need = set(ccv.targets)
            if not need <= set(cluster.sub.cluster):
                raise InvalidTargetError("closed form targets variables outside the cluster")
            new_clusters.append(CcvCluster(cluster.index, cluster.sub, ccv))
            seen.add(cluster.index)
        else:
            new_clusters.append(cluster)
    missing = set(ccvs) - seen
    if missing:
        raise InvalidPartitionError(f"no cluster with index {sorted(missing)}")
    return replace(cons, clusters=tuple(new_clusters))


@dataclass(frozen=True)
class VerifiedCcv:
    ccv: Ccv
    node_count: int
    consolidated: ConsolidatedScm
    report: object  # EquivalenceReport


def register_closed_form(
    scm: Scm,
    partition: Partition,
    targets: Iterable[VarRef],
    cluster_index: int,
    ccv: Ccv,
    strategy=None,
) -> VerifiedCcv:
    """Adopt a hand-written compositional form after it survives verification.

    The candidate replaces the pipeline's output for one cluster; every other
    cluster stays a plain sub-model.  Equivalence against the base model is
    mandatory; a mismatch raises with the counterexample attached.
    """
    from .verification import EquivalenceStrategy, verify_equivalence
    from .errors import EquivalenceFailedError

    cons = consolidate(
        scm,
        partition,
        targets,
        clusters_to_consolidate=set(),
        config=PassConfig(gate=False),
    )
    candidate = attach_ccvs(cons, {cluster_index: ccv})
    for cluster in candidate.clusters:
        if cluster.index != cluster_index:
            continue
        pruned_view = _as_scm_view(cons, scm)
        required = compute_required_set(cluster.sub.cluster, cons.targets, pruned_view)
        if set(required) - set(ccv.targets):
            missing = ", ".join(
                str(v) for v in sorted(set(required) - set(ccv.targets), key=ref_sort_key)
            )
            raise InvalidTargetError(f"closed form misses required variables: {missing}")
    strategy = strategy or EquivalenceStrategy.exhaustive()
    report = verify_equivalence(scm, candidate, candidate.targets, strategy)
    if report.verdict != "equal":
        raise EquivalenceFailedError(report)
    return VerifiedCcv(ccv, ccv.total_nodes(), candidate, report)


def _as_scm_view(cons: ConsolidatedScm, base: Scm) -> Scm:
    keep = set(cons.computed_vars())
    return replace(base, endogenous=tuple(r for r in base.endogenous if r.var in keep))
