"""Equivalence checking between a base model and a consolidated one.

All checks share exogenous draws between the two sides and compare target
values pointwise: with deterministic equations this implies the equality of
the intervened distributions, and it is far cheaper than comparing
distributions.  Exhaustive mode enumerates both the joint exogenous support
and the intervention family and therefore certifies; sampled mode is an
explicitly probabilistic verdict for continuous inputs or huge spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from . import expr as E
from . import scm as S
from .consolidation import Ccv, ConsolidatedScm, PassConfig, eval_ccv, eval_consolidated
from .errors import DomainError, EnumerationTooLargeError
from .evaluation import Assignment, enumerate_exogenous, eval_scm, make_rng, sample_exogenous
from .expr import Value, VarRef, ref_sort_key
from .partition import SubScm
from .scm import InterventionSet, Scm

EXHAUSTIVE = "exhaustive"
SAMPLED = "sampled"


@dataclass(frozen=True)
class EquivalenceStrategy:
    mode: str = EXHAUSTIVE
    sample_count: int = 1000
    seed: int = 0
    tolerance: float = E.EPS_VAL
    intervention_budget: int = 4096
    exogenous_budget: int = 10**6
    #: explicit intervention sets override enumeration when given
    intervention_sets: Optional[tuple[InterventionSet, ...]] = None

    @staticmethod
    def exhaustive(**kw) -> "EquivalenceStrategy":
        return EquivalenceStrategy(mode=EXHAUSTIVE, **kw)

    @staticmethod
    def sampled(count: int = 1000, seed: int = 0, **kw) -> "EquivalenceStrategy":
        return EquivalenceStrategy(mode=SAMPLED, sample_count=count, seed=seed, **kw)


@dataclass(frozen=True)
class CounterExample:
    u: tuple[tuple[VarRef, Value], ...]
    interventions: InterventionSet
    var: VarRef
    base_value: Value
    ccv_value: Value

    def env(self) -> Assignment:
        return dict(self.u)

    def __str__(self):
        us = ", ".join(f"{v}={val}" for v, val in self.u)
        return (
            f"u=({us}), I={self.interventions}: {self.var} "
            f"base={self.base_value} consolidated={self.ccv_value}"
        )


@dataclass
class EquivalenceReport:
    verdict: str  # "equal" | "counterexample" | "inconclusive"
    cases_checked: int = 0
    max_abs_deviation: float = 0.0
    counterexample: Optional[CounterExample] = None
    probabilistic: bool = False
    message: str = ""

    @property
    def equal(self) -> bool:
        return self.verdict == "equal"


def _first_mismatch(
    targets: list[VarRef],
    base_out: Assignment,
    cons_out: Assignment,
    tolerance: float,
) -> tuple[Optional[VarRef], float]:
    worst = 0.0
    bad: Optional[VarRef] = None
    for t in targets:
        a, b = base_out[t], cons_out[t]
        if isinstance(a, E.VReal) or isinstance(b, E.VReal):
            try:
                av = a.r if isinstance(a, E.VReal) else float(a.i)
                bv = b.r if isinstance(b, E.VReal) else float(b.i)
            except AttributeError:
                if bad is None:
                    bad = t
                continue
            dev = abs(av - bv)
            worst = max(worst, dev)
            if dev > tolerance and bad is None:
                bad = t
        elif a != b:
            if bad is None:
                bad = t
    return bad, worst


def _canonical_u_order(scm: Scm, assignments: list[Assignment]) -> list[Assignment]:
    order = [row.var for row in scm.exogenous]

    def key(u: Assignment):
        return [repr(u[v]) for v in order]

    return sorted(assignments, key=key)


def _intervention_cases(space, strategy: EquivalenceStrategy) -> list[InterventionSet]:
    if strategy.intervention_sets is not None:
        return list(strategy.intervention_sets)
    return space.enumerate(strategy.intervention_budget)


def verify_equivalence(
    base: Scm,
    cons: ConsolidatedScm,
    targets: Optional[Iterable[VarRef]] = None,
    strategy: EquivalenceStrategy = None,
) -> EquivalenceReport:
    """Compare target values of the base and consolidated models pointwise.

    Exhaustive mode visits every (input, intervention) pair exactly once, in
    canonical order, so the reported counterexample is the smallest failing
    case.  Budget overruns surface as an inconclusive verdict, never as a
    silently truncated pass.
    """
    strategy = strategy or EquivalenceStrategy.exhaustive()
    tlist = sorted(set(targets) if targets is not None else set(cons.targets), key=ref_sort_key)
    computable = set(cons.computed_vars())
    for t in tlist:
        if t not in computable:
            return EquivalenceReport(
                "inconclusive", message=f"{t} is not computed by the consolidated model"
            )

    if strategy.mode == EXHAUSTIVE:
        try:
            u_cases = _canonical_u_order(base, enumerate_exogenous(base, strategy.exogenous_budget))
            i_cases = _intervention_cases(base.interventions, strategy)
        except (DomainError, EnumerationTooLargeError) as exc:
            return EquivalenceReport("inconclusive", message=str(exc))
        probabilistic = False
        case_iter = ((u, iv) for u in u_cases for iv in i_cases)
    else:
        rng = make_rng(strategy.seed)
        u_cases = sample_exogenous(base, strategy.seed, strategy.sample_count, strict=False)
        i_cases = [base.interventions.sample(rng) for _ in range(strategy.sample_count)]
        probabilistic = True
        case_iter = zip(u_cases, i_cases)

    checked = 0
    worst = 0.0
    for u, iv in case_iter:
        base_out = eval_scm(base, u, iv, check_membership=False)
        cons_out = eval_consolidated(cons, u, iv, check_membership=False)
        checked += 1
        bad, dev = _first_mismatch(tlist, base_out, cons_out, strategy.tolerance)
        worst = max(worst, dev)
        if bad is not None:
            return EquivalenceReport(
                "counterexample",
                cases_checked=checked,
                max_abs_deviation=worst,
                probabilistic=probabilistic,
                counterexample=CounterExample(
                    u=tuple(sorted(u.items(), key=lambda p: ref_sort_key(p[0]))),
                    interventions=iv,
                    var=bad,
                    base_value=base_out[bad],
                    ccv_value=cons_out[bad],
                ),
            )
    return EquivalenceReport(
        "equal", cases_checked=checked, max_abs_deviation=worst, probabilistic=probabilistic
    )


def replay_counterexample(
    base: Scm, cons: ConsolidatedScm, cx: CounterExample
) -> tuple[Value, Value]:
    """Re-run both models on a counterexample's case; reproduces the report."""
    base_out = eval_scm(base, cx.env(), cx.interventions, check_membership=False)
    cons_out = eval_consolidated(cons, cx.env(), cx.interventions, check_membership=False)
    return base_out[cx.var], cons_out[cx.var]


# ---------------------------------------------------------------------------
# Cluster-local checking (the rewrite gate)
# ---------------------------------------------------------------------------


def _local_exo_values(sub: SubScm, var: VarRef) -> Optional[list[Value]]:
    dist = sub.local_dists.get(var)
    if dist is not None:
        return S.dist_support(dist)
    dom = sub.domains[var]
    if E.domain_is_finite(dom):
        return E.domain_values(dom)
    return None


def local_case_count(sub: SubScm, intervention_budget: int = 4096) -> Optional[int]:
    """Exhaustive case count for a cluster, or None when not enumerable."""
    total = 1
    for v in sub.local_exogenous:
        vals = _local_exo_values(sub, v)
        if vals is None:
            return None
        total *= len(vals)
    return total * sub.interventions.size()


def enumerate_local_cases(sub: SubScm) -> list[tuple[Assignment, InterventionSet]]:
    axes: list[tuple[VarRef, list[Value]]] = []
    for v in sub.local_exogenous:
        vals = _local_exo_values(sub, v)
        if vals is None:
            raise DomainError(f"{v} has no finite local support")
        axes.append((v, vals))
    envs: list[Assignment] = [{}]
    for var, vals in axes:
        envs = [{**env, var: val} for env in envs for val in vals]
    isets = sub.interventions.enumerate(budget=10**9)
    return [(env, iv) for env in envs for iv in isets]


def sample_local_cases(
    sub: SubScm, count: int, seed: int
) -> list[tuple[Assignment, InterventionSet]]:
    rng = make_rng(seed)
    out = []
    for _ in range(count):
        env: Assignment = {}
        for v in sub.local_exogenous:
            dist = sub.local_dists.get(v)
            if dist is not None:
                from .evaluation import _draw

                env[v] = _draw(dist, rng)
            else:
                env[v] = _sample_domain(sub.domains[v], rng)
        out.append((env, sub.interventions.sample(rng)))
    return out


def _sample_domain(dom: E.Domain, rng) -> Value:
    if E.domain_is_finite(dom):
        vals = E.domain_values(dom)
        return vals[int(rng.integers(len(vals)))]
    lo = dom.lo if dom.lo is not None else -1.0
    hi = dom.hi if dom.hi is not None else 1.0
    return E.VReal(float(lo + (hi - lo) * rng.random()))


def gate_strategy_for(sub: SubScm, config: PassConfig) -> EquivalenceStrategy:
    """Exhaustive when the cluster's local space fits the budget, else sampled."""
    n = local_case_count(sub)
    if n is not None and n <= config.gate_case_budget:
        return EquivalenceStrategy.exhaustive(tolerance=config.tolerance)
    return EquivalenceStrategy.sampled(
        count=config.gate_sample_count, seed=config.seed, tolerance=config.tolerance
    )


def verify_pass(before: Ccv, after: Ccv, sub: SubScm, strategy: EquivalenceStrategy) -> EquivalenceReport:
    """Same contract as `verify_equivalence`, restricted to one cluster.

    Both compositional variables are evaluated over the cluster's local
    exogenous space and its projected intervention family; all targets are
    compared, so a rewrite that corrupts a value any later target consumes is
    caught even when the edited tree itself still agrees.
    """
    if set(before.targets) != set(after.targets):
        return EquivalenceReport("inconclusive", message="target sets differ")
    if strategy.mode == EXHAUSTIVE:
        n = local_case_count(sub)
        if n is None:
            return EquivalenceReport("inconclusive", message="local space is not enumerable")
        if n > max(strategy.intervention_budget, 10**6):
            return EquivalenceReport("inconclusive", message=f"local space has {n} cases")
        cases = enumerate_local_cases(sub)
        probabilistic = False
    else:
        cases = sample_local_cases(sub, strategy.sample_count, strategy.seed)
        probabilistic = True

    tlist = list(before.targets)
    worst = 0.0
    checked = 0
    for env, iv in cases:
        out_a = eval_ccv(before, env, iv)
        out_b = eval_ccv(after, env, iv)
        checked += 1
        bad, dev = _first_mismatch(tlist, out_a, out_b, strategy.tolerance)
        worst = max(worst, dev)
        if bad is not None:
            return EquivalenceReport(
                "counterexample",
                cases_checked=checked,
                max_abs_deviation=worst,
                probabilistic=probabilistic,
                counterexample=CounterExample(
                    u=tuple(sorted(env.items(), key=lambda p: ref_sort_key(p[0]))),
                    interventions=iv,
                    var=bad,
                    base_value=out_a[bad],
                    ccv_value=out_b[bad],
                ),
            )
    return EquivalenceReport(
        "equal", cases_checked=checked, max_abs_deviation=worst, probabilistic=probabilistic
    )
