"""Partitioning a model into sub-models with restricted intervention spaces.

A partition groups the endogenous variables into disjoint exhaustive
clusters.  It is usable only when the quotient graph over clusters is
acyclic: otherwise evaluating one cluster would require values that are
computed later, inside another cluster that itself waits on the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import expr as E
from . import scm as S
from .errors import InvalidPartitionError, UnknownVariableError
from .expr import Domain, Expr, VarRef, ref_sort_key
from .scm import InterventionSet, InterventionSpace, Scm


@dataclass(frozen=True)
class Partition:
    clusters: tuple[frozenset[VarRef], ...]

    @staticmethod
    def of(clusters: Iterable[Iterable[VarRef]]) -> "Partition":
        return Partition(tuple(frozenset(c) for c in clusters))

    def cluster_of(self, var: VarRef) -> Optional[int]:
        for i, c in enumerate(self.clusters):
            if var in c:
                return i
        return None

    def restrict_to(self, keep: Iterable[VarRef]) -> "Partition":
        """Drop variables outside `keep`; empty clusters disappear."""
        ks = set(keep)
        return Partition(tuple(c & ks for c in self.clusters if c & ks))


@dataclass
class PartitionReport:
    findings: list[str] = field(default_factory=list)
    cycle_witness: Optional[list[int]] = None

    @property
    def valid(self) -> bool:
        return not self.findings

    def __str__(self):
        return "valid" if self.valid else "; ".join(self.findings)


def _quotient_edges(scm: Scm, partition: Partition) -> dict[int, set[int]]:
    graph = S.derive_graph_unchecked(scm)
    owner: dict[VarRef, int] = {}
    for i, cluster in enumerate(partition.clusters):
        for v in cluster:
            owner[v] = i
    edges: dict[int, set[int]] = {i: set() for i in range(len(partition.clusters))}
    for child in scm.endo_vars():
        ci = owner.get(child)
        if ci is None:
            continue
        for parent in graph.parents[child]:
            pi = owner.get(parent)
            if pi is not None and pi != ci:
                edges[pi].add(ci)
    return edges


def check_partition(scm: Scm, partition: Partition) -> PartitionReport:
    """Exclusivity, exhaustiveness, and acyclicity of the cluster quotient.

    Quotient acyclicity is equivalent to the evaluation-order relation over
    clusters being a strict partial order, and it produces a witness cycle
    when violated.
    """
    report = PartitionReport()
    endo = set(scm.endo_vars())

    seen: set[VarRef] = set()
    for i, cluster in enumerate(partition.clusters):
        if not cluster:
            report.findings.append(f"cluster {i} is empty")
        for v in cluster:
            if v not in endo:
                report.findings.append(f"cluster {i} contains non-endogenous {v}")
            if v in seen:
                report.findings.append(f"{v} appears in more than one cluster")
            seen.add(v)
    missing = endo - seen
    if missing:
        names = ", ".join(str(v) for v in sorted(missing, key=ref_sort_key))
        report.findings.append(f"not exhaustive, missing: {names}")
    if report.findings:
        return report

    edges = _quotient_edges(scm, partition)
    cycle = _find_cluster_cycle(edges)
    if cycle is not None:
        report.cycle_witness = cycle
        pretty = " -> ".join(_cluster_label(partition.clusters[i]) for i in cycle)
        report.findings.append(f"cluster quotient has a cycle: {pretty}")
    return report


def _cluster_label(cluster: frozenset[VarRef]) -> str:
    return "{" + ",".join(str(v) for v in sorted(cluster, key=ref_sort_key)) + "}"


def _find_cluster_cycle(edges: dict[int, set[int]]) -> Optional[list[int]]:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v: WHITE for v in edges}
    parent: dict[int, int] = {}
    for start in edges:
        if color[start] != WHITE:
            continue
        stack = [start]
        color[start] = GREY
        iters = {start: iter(sorted(edges[start]))}
        while stack:
            node = stack[-1]
            advanced = False
            for nxt in iters[node]:
                if color[nxt] == GREY:
                    path = [nxt]
                    cur = node
                    while cur != nxt:
                        path.append(cur)
                        cur = parent[cur]
                    path.append(nxt)
                    path.reverse()
                    return path
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    parent[nxt] = node
                    iters[nxt] = iter(sorted(edges[nxt]))
                    stack.append(nxt)
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return None


def order_clusters(scm: Scm, partition: Partition) -> list[int]:
    """A linear extension of the cluster quotient, as cluster indices.

    Deterministic: among ready clusters the one with the smallest original
    index goes first.
    """
    report = check_partition(scm, partition)
    if not report.valid:
        raise InvalidPartitionError(str(report))
    edges = _quotient_edges(scm, partition)
    indeg = {i: 0 for i in edges}
    for src, dsts in edges.items():
        for d in dsts:
            indeg[d] += 1
    ready = sorted(i for i, d in indeg.items() if d == 0)
    out: list[int] = []
    while ready:
        node = ready.pop(0)
        out.append(node)
        for d in sorted(edges[node]):
            indeg[d] -= 1
            if indeg[d] == 0:
                ready.append(d)
        ready.sort()
    if len(out) != len(partition.clusters):
        raise InvalidPartitionError("cluster quotient has a cycle")
    return out


def psi_restrict(iset: InterventionSet, cluster: Iterable[VarRef]) -> InterventionSet:
    """Keep exactly the atoms whose variable lies in the cluster."""
    return iset.restrict(cluster)


@dataclass(frozen=True)
class SubScm:
    """One cluster packaged as a model of its own.

    Local exogenous variables are the cluster's parents outside it; their
    distributions are whatever the enclosing model induces, so only the ones
    that are truly exogenous in the base model carry a sampling distribution
    here.
    """

    cluster: frozenset[VarRef]
    local_exogenous: tuple[VarRef, ...]
    order: tuple[VarRef, ...]  # cluster members, base topological order
    equations: dict[VarRef, Expr]
    domains: dict[VarRef, Domain]  # cluster plus local exogenous
    local_dists: dict[VarRef, S.ExoDistribution]  # truly exogenous locals only
    interventions: InterventionSpace
    inverse_pairs: tuple[tuple[VarRef, VarRef], ...] = ()

    def var_kinds(self) -> dict[VarRef, str]:
        return {v: E.domain_kind(d) for v, d in self.domains.items()}


def extract_sub_scm(scm: Scm, cluster: Iterable[VarRef]) -> SubScm:
    """Restrict the model to one cluster, with the projected intervention space."""
    cset = frozenset(cluster)
    endo = set(scm.endo_vars())
    for v in cset:
        if v not in endo:
            raise UnknownVariableError(v)
    graph = S.derive_graph_unchecked(scm)
    local_exo = sorted(S.relatives(graph, cset, "parents") - cset, key=ref_sort_key)
    order = tuple(v for v in scm.endo_vars() if v in cset)
    equations = {v: scm.equation_of(v) for v in order}
    domains = {v: scm.domain_of(v) for v in order}
    for v in local_exo:
        domains[v] = scm.domain_of(v)
    exo_set = set(scm.exo_vars())
    local_dists = {v: scm.dist_of(v) for v in local_exo if v in exo_set}
    pairs = tuple(p for p in scm.inverse_pairs if p[0] in cset and p[1] in cset)
    return SubScm(
        cluster=cset,
        local_exogenous=tuple(local_exo),
        order=order,
        equations=equations,
        domains=domains,
        local_dists=local_dists,
        interventions=scm.interventions.restrict(cset),
        inverse_pairs=pairs,
    )


def sub_scm_as_scm(sub: SubScm, name: str = "sub") -> Scm:
    """View a sub-model as a standalone model so it can be validated.

    Local exogenous variables without an induced distribution are given a
    placeholder point mass; evaluation always supplies their values anyway.
    """
    exo_rows = []
    for v in sub.local_exogenous:
        dom = sub.domains[v]
        dist = sub.local_dists.get(v)
        if dist is None:
            dist = S.PointMass(_placeholder_value(dom))
        exo_rows.append(S.ExoVar(v, dom, dist))
    endo_rows = [S.EndoVar(v, sub.domains[v], sub.equations[v]) for v in sub.order]
    return Scm(
        name=name,
        endogenous=tuple(endo_rows),
        exogenous=tuple(exo_rows),
        interventions=sub.interventions,
        inverse_pairs=sub.inverse_pairs,
    )


def _placeholder_value(dom: Domain):
    match dom:
        case E.BoolDomain():
            return E.VBool(False)
        case E.IntDomain(lo, _):
            return E.VInt(lo)
        case E.SymDomain(symbols):
            return E.VSym(symbols[0])
        case E.RealDomain(lo, _):
            return E.VReal(lo if lo is not None else 0.0)
    raise TypeError(f"not a Domain: {dom!r}")
