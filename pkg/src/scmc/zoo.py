"""Built-in example models, each bundled with its partition, targets,
intervention space and hand-written reference equations.

These are the models the acceptance suite runs end to end: a boolean chain
of falling dominoes, an unrolled tool-wear time series, the firing squad,
a small seven-variable walkthrough model, and a platformer game agent whose
policy consolidation exposes.  Builders are pure; entries are data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import expr as E
from .consolidation import Ccv, ConsolidatedScm, PassConfig, consolidate
from .errors import InvalidParameterError
from .expr import (
    Binary,
    BoolDomain,
    CaseList,
    Const,
    ExistsIntervention,
    IfThenElse,
    IntDomain,
    IsIntervened,
    MaxIntervenedIndex,
    RandomBernoulli,
    RealDomain,
    Ref,
    SymDomain,
    VarRef,
    band,
    bconst,
    bnot,
    bor,
    iconst,
    rconst,
    sconst,
)
from .partition import Partition
from .scm import (
    EndoVar,
    ExoVar,
    InterventionSet,
    InterventionSpace,
    NormalDist,
    PointMass,
    Scm,
    UniformFinite,
)
from .verification import EquivalenceStrategy


@dataclass
class ZooEntry:
    name: str
    params: dict
    scm: Scm
    partition: Partition
    targets: tuple[VarRef, ...]
    #: indices of partition clusters the pipeline should consolidate
    consolidate_clusters: Optional[frozenset[int]] = None
    #: hand-written compositional equations, keyed by cluster index
    reference_ccvs: dict[int, Ccv] = field(default_factory=dict)
    reference_strategy: EquivalenceStrategy = field(default_factory=EquivalenceStrategy.exhaustive)
    #: true when the bundled closed forms are *expected* to disagree with the
    #: base model (they are then compared and reported, not adopted)
    expect_reference_discrepancy: bool = False
    notes: str = ""

    def consolidated(self, config: PassConfig = None) -> ConsolidatedScm:
        return consolidate(
            self.scm,
            self.partition,
            self.targets,
            clusters_to_consolidate=self.consolidate_clusters,
            config=config,
        )

    def reference_consolidated(self) -> ConsolidatedScm:
        """The bundled closed forms in place of the pipeline output (unverified)."""
        from .consolidation import attach_ccvs

        base = consolidate(
            self.scm,
            self.partition,
            self.targets,
            clusters_to_consolidate=set(),
            config=PassConfig(gate=False),
        )
        return attach_ccvs(base, self.reference_ccvs)


# ---------------------------------------------------------------------------
# Dominoes
# ---------------------------------------------------------------------------


def dominoes(n: int = 5) -> ZooEntry:
    """A boolean chain: each stone copies its predecessor, the first copies
    the push input.  One intervention at a time may hold up or tip any stone.

    The reference equation needs no notion of the chain length: whichever
    stone is held or tipped overrides everything downstream, so the last
    stone equals the forced value if any intervention exists, else the first
    stone.  The expression tree is therefore identical for every n; only the
    allowed intervention set grows.
    """
    if n < 2:
        raise InvalidParameterError("dominoes needs at least 2 stones")
    push = VarRef("push")
    stones = [VarRef("S", i) for i in range(1, n + 1)]
    endo = [EndoVar(stones[0], BoolDomain(), Ref(push))]
    for i in range(1, n):
        endo.append(EndoVar(stones[i], BoolDomain(), Ref(stones[i - 1])))
    space = InterventionSpace.singletons(
        [(s, [E.VBool(False), E.VBool(True)]) for s in stones]
    )
    scm = Scm(
        name=f"dominoes-{n}",
        endogenous=tuple(endo),
        exogenous=(ExoVar(push, BoolDomain(), UniformFinite((E.VBool(False), E.VBool(True)))),),
        interventions=space,
    )
    partition = Partition.of([[stones[0]], stones[1:]])
    reference = Ccv(
        targets=(stones[-1],),
        rho={stones[-1]: dominoes_closed_form()},
        interventions=space.restrict(stones[1:]),
        provenance=1,
    )
    return ZooEntry(
        name="dominoes",
        params={"n": n},
        scm=scm,
        partition=partition,
        targets=(stones[-1],),
        consolidate_clusters=frozenset({1}),
        reference_ccvs={1: reference},
        notes="single-intervention chain; closed form is length-invariant",
    )


def dominoes_closed_form() -> E.Expr:
    """Forced value when any stone is intervened, else the first stone."""
    return IfThenElse(
        ExistsIntervention("S", value=E.VBool(True)),
        bconst(True),
        IfThenElse(
            ExistsIntervention("S", value=E.VBool(False)),
            bconst(False),
            Ref(VarRef("S", 1)),
        ),
    )


# ---------------------------------------------------------------------------
# Tool wear
# ---------------------------------------------------------------------------

EXPECTED_UTILIZATION = 0.5
SHARPNESS_RETENTION = 0.85  # 1 - 0.3 * expected utilization


def tool_wear(T: int = 36, u_mode: str = "expected") -> ZooEntry:
    """Daily measurements of a milling cutter: length, sharpness, accuracy.

    Sharpness decays by a utilization-dependent factor each day; grinding
    (`do(S_t=1)`) resets it and tool replacement forces both sharpness and
    length.  In expected mode the utilization inputs are pinned to their mean
    0.5, which is the setting under which the sharpness trajectory collapses
    to a pure decay from the most recent reset.
    """
    if T < 1:
        raise InvalidParameterError("tool_wear needs at least one day")
    if u_mode not in ("expected", "sampled"):
        raise InvalidParameterError(f"unknown u_mode {u_mode!r}")
    exo = []
    endo = []
    atoms = []
    for t in range(1, T + 1):
        u = VarRef("U", t)
        dist = PointMass(E.VReal(0.5)) if u_mode == "expected" else NormalDist(0.5, 0.05**2)
        exo.append(ExoVar(u, RealDomain(), dist))
    for t in range(1, T + 1):
        u, l, s, a = VarRef("U", t), VarRef("L", t), VarRef("S", t), VarRef("A", t)
        l_prev: E.Expr = Const(E.VReal(1.0)) if t == 1 else Ref(VarRef("L", t - 1))
        s_prev: E.Expr = Const(E.VReal(1.0)) if t == 1 else Ref(VarRef("S", t - 1))
        endo.append(
            EndoVar(l, RealDomain(), Binary("mul", Binary("sub", rconst(1.0), Binary("mul", rconst(0.002), Ref(u))), l_prev))
        )
        endo.append(
            EndoVar(s, RealDomain(), Binary("mul", Binary("sub", rconst(1.0), Binary("mul", rconst(0.3), Ref(u))), s_prev))
        )
        endo.append(EndoVar(a, RealDomain(), Binary("mul", rconst(0.8), Binary("pow", Ref(s), iconst(2)))))
        atoms.append((s, [E.VReal(1.0)]))
        atoms.append((l, [E.VReal(1.0)]))
    space = InterventionSpace.power_set(atoms)
    scm = Scm(
        name=f"tool-wear-{T}-{u_mode}",
        endogenous=tuple(endo),
        exogenous=tuple(exo),
        interventions=space,
    )
    targets = tuple(VarRef("S", t) for t in range(1, T + 1))
    partition = Partition.of([[row.var for row in endo]])

    entry = ZooEntry(
        name="tool_wear",
        params={"T": T, "u_mode": u_mode},
        scm=scm,
        partition=partition,
        targets=targets,
        notes="length and accuracy are childless and marginalize away",
    )
    if u_mode == "expected":
        entry.reference_ccvs = {
            0: Ccv(
                targets=targets,
                rho={VarRef("S", t): tool_wear_closed_form(t) for t in range(1, T + 1)},
                interventions=space.drop_atoms([VarRef("L", t) for t in range(1, T + 1)]),
                provenance=0,
            )
        }
        entry.reference_strategy = EquivalenceStrategy.exhaustive(
            intervention_sets=tuple(tool_wear_schedules(T))
        )
    else:
        entry.reference_strategy = EquivalenceStrategy.sampled(count=1000, seed=0)
    return entry


def tool_wear_closed_form(t: int) -> E.Expr:
    """Decay from the most recent sharpness reset at or before day t."""
    t0 = MaxIntervenedIndex("S", upper=iconst(t), default=iconst(0))
    return Binary("pow", rconst(SHARPNESS_RETENTION), Binary("sub", iconst(t), t0))


def tool_wear_schedules(T: int) -> list[InterventionSet]:
    """The grinding schedules exercised by the acceptance checks."""
    out = [InterventionSet.empty()]
    first = min(12, T)
    out.append(InterventionSet.of({VarRef("S", first): E.VReal(1.0)}))
    second = min(24, T)
    if second > first:
        out.append(
            InterventionSet.of(
                {VarRef("S", first): E.VReal(1.0), VarRef("S", second): E.VReal(1.0)}
            )
        )
    return out


# ---------------------------------------------------------------------------
# Firing squad
# ---------------------------------------------------------------------------


def firing_squad(N: int = 5) -> ZooEntry:
    """A captain orders N riflemen who all shoot accurately.

    Interventions block individual riflemen.  The prisoner survives only if
    the captain gives no order or every single rifleman is blocked, which is
    exactly what the reference equation states.
    """
    if N < 1:
        raise InvalidParameterError("firing_squad needs at least one rifleman")
    order = VarRef("order")
    c = VarRef("C")
    riflemen = [VarRef("R", i) for i in range(1, N + 1)]
    p = VarRef("P")
    outcome = SymDomain(("lives", "dies"))
    endo = [EndoVar(c, BoolDomain(), Ref(order))]
    for r in riflemen:
        endo.append(EndoVar(r, BoolDomain(), Ref(c)))
    endo.append(
        EndoVar(p, outcome, IfThenElse(bor(*[Ref(r) for r in riflemen]), sconst("dies"), sconst("lives")))
    )
    space = InterventionSpace.power_set([(r, [E.VBool(False)]) for r in riflemen])
    scm = Scm(
        name=f"firing-squad-{N}",
        endogenous=tuple(endo),
        exogenous=(ExoVar(order, BoolDomain(), UniformFinite((E.VBool(False), E.VBool(True)))),),
        interventions=space,
    )
    partition = Partition.of([[c], riflemen + [p]])
    reference = Ccv(
        targets=(p,),
        rho={p: firing_squad_closed_form(N)},
        interventions=space.restrict(riflemen + [p]),
        provenance=1,
    )
    return ZooEntry(
        name="firing_squad",
        params={"N": N},
        scm=scm,
        partition=partition,
        targets=(c, p),
        consolidate_clusters=frozenset({1}),
        reference_ccvs={1: reference},
        notes="parallel structure: survival needs every path blocked",
    )


def firing_squad_closed_form(N: int) -> E.Expr:
    """Lives iff no order was given or all riflemen are blocked."""
    all_blocked = band(*[IsIntervened(VarRef("R", i)) for i in range(1, N + 1)])
    return IfThenElse(
        bor(bnot(Ref(VarRef("C"))), all_blocked), sconst("lives"), sconst("dies")
    )


# ---------------------------------------------------------------------------
# Step-by-step walkthrough model
# ---------------------------------------------------------------------------


def step_by_step() -> ZooEntry:
    """Seven endogenous variables over one integer input.

    The three clusters exercise the full pipeline: one keeps an intervention
    branch, one collapses a two-case chain through image propagation, and
    one loses a marginalized member.
    """
    A = VarRef("A")
    B, C, D = VarRef("B"), VarRef("C"), VarRef("D")
    Ev, F, G, H = VarRef("E"), VarRef("F"), VarRef("G"), VarRef("H")

    f_B = CaseList(((Binary("le", Ref(A), iconst(5)), iconst(0)),), iconst(1))
    f_C = CaseList(
        (
            (Binary("eq", Ref(B), iconst(0)), bconst(True)),
            (band(Binary("le", iconst(0), Ref(B)), Binary("le", Ref(B), iconst(10))), bconst(False)),
        ),
        bconst(True),
    )
    f_D = bnot(Ref(C))
    f_E = Binary("eq", Binary("mod", Ref(A), iconst(5)), iconst(0))
    f_F = Binary("eq", Binary("mod", Ref(A), iconst(10)), iconst(0))
    f_G = band(Ref(Ev), Ref(F))
    f_H = bor(Ref(C), Ref(G))

    endo = (
        EndoVar(B, IntDomain(0, 1), f_B),
        EndoVar(C, BoolDomain(), f_C),
        EndoVar(D, BoolDomain(), f_D),
        EndoVar(Ev, BoolDomain(), f_E),
        EndoVar(F, BoolDomain(), f_F),
        EndoVar(G, BoolDomain(), f_G),
        EndoVar(H, BoolDomain(), f_H),
    )
    space = InterventionSpace.explicit(
        [
            InterventionSet.empty(),
            InterventionSet.of({D: E.VBool(True)}),
            InterventionSet.of({D: E.VBool(False)}),
            InterventionSet.of({G: E.VBool(False)}),
        ]
    )
    scm = Scm(
        name="step-by-step",
        endogenous=endo,
        exogenous=(ExoVar(A, IntDomain(0, 20), UniformFinite(tuple(E.VInt(i) for i in range(21)))),),
        interventions=space,
    )
    partition = Partition.of([[Ev, F, G], [B, C], [D, H]])
    targets = (C, F, H)

    rho_f = Binary("eq", Binary("mod", Ref(A), iconst(10)), iconst(0))
    rho_g = band(Ref(F), bnot(IsIntervened(G)))
    rho_c = Binary("le", Ref(A), iconst(5))
    rho_h = bor(Ref(C), Ref(G))
    references = {
        0: Ccv((F, G), {F: rho_f, G: rho_g}, space.restrict([Ev, F, G]), 0),
        1: Ccv((C,), {C: rho_c}, space.restrict([B, C]), 1),
        2: Ccv((H,), {H: rho_h}, space.restrict([H]), 2),
    }
    return ZooEntry(
        name="step_by_step",
        params={},
        scm=scm,
        partition=partition,
        targets=targets,
        reference_ccvs=references,
        notes="the guard of the two-valued chain collapses to a threshold",
    )


# ---------------------------------------------------------------------------
# Platformer agent
# ---------------------------------------------------------------------------

PLATFORMER_REWARDS = {"coin": 3.0, "powerup": 1.0, "enemy": 9.0, "flag": 2.0}

#: Level geometry (unit square).  Chosen so the unintervened run targets the
#: coin and ignores the low-reward power-up, hence also the enemy.
PLATFORMER_POSITIONS = {
    "player": (0.5, 0.5),
    "coin": (0.6, 0.5),
    "powerup": (0.4, 0.5),
    "enemy": (0.5, 0.7),
    "flag": (0.9, 0.5),
}

_ENTITIES = ("coin", "powerup", "enemy", "flag")
_PLAN_SYMBOLS = ("finished", "coin", "powerup", "enemy", "flag")

#: Entities whose rewards compete in each towards_* comparison, verbatim from
#: the source equations (note towards_enemy lists enemy itself, not coin).
_COMPETITORS = {
    "coin": ("powerup", "enemy", "flag"),
    "powerup": ("coin", "enemy", "flag"),
    "enemy": ("enemy", "powerup", "flag"),
    "flag": ("coin", "powerup", "enemy"),
}


def platformer() -> ZooEntry:
    """A greedy agent in a one-screen platformer level.

    The base model wires distances, targeting costs, target/towards decisions
    and a four-slot planning sequence.  Consolidation against the distance
    and planning-sequence variables reveals the policy: grab the coin unless
    forbidden, then head for the flag.  The bundled claimed closed forms for
    the planning slots are intentionally kept literal; the second slot is
    known to disagree with base evaluation under do(target_coin=0), and the
    verification report is the place that records it.
    """
    exo = []
    for name, reward in PLATFORMER_REWARDS.items():
        exo.append(ExoVar(VarRef(f"{name}_reward"), RealDomain(), PointMass(E.VReal(reward))))
    for name, (x, y) in PLATFORMER_POSITIONS.items():
        stem = "player_position" if name == "player" else f"position_{name}"
        exo.append(ExoVar(VarRef(f"{stem}_x"), RealDomain(0.0, 1.0), PointMass(E.VReal(x))))
        exo.append(ExoVar(VarRef(f"{stem}_y"), RealDomain(0.0, 1.0), PointMass(E.VReal(y))))
    exo.append(ExoVar(VarRef("target_flag"), BoolDomain(), PointMass(E.VBool(True))))
    exo.append(ExoVar(VarRef("time_taken"), RealDomain(), PointMass(E.VReal(10.0))))

    endo = []
    for name in _ENTITIES:
        dx = Binary("sub", Ref(VarRef(f"position_{name}_x")), Ref(VarRef("player_position_x")))
        dy = Binary("sub", Ref(VarRef(f"position_{name}_y")), Ref(VarRef("player_position_y")))
        dist = Binary(
            "pow",
            Binary("add", Binary("pow", dx, iconst(2)), Binary("pow", dy, iconst(2))),
            rconst(0.5),
        )
        endo.append(EndoVar(VarRef(f"distance_{name}"), RealDomain(), dist))
        endo.append(
            EndoVar(VarRef(f"near_{name}"), BoolDomain(), Binary("lt", Ref(VarRef(f"distance_{name}")), rconst(3.0)))
        )
        endo.append(
            EndoVar(
                VarRef(f"targeting_cost_{name}"),
                RealDomain(),
                Binary("add", rconst(1.0), Binary("mul", rconst(0.5), Ref(VarRef(f"distance_{name}")))),
            )
        )
    # the coin comparison reads the enemy reward, kept exactly as modeled
    endo.append(
        EndoVar(
            VarRef("target_coin"),
            BoolDomain(),
            Binary("lt", Ref(VarRef("targeting_cost_coin")), Ref(VarRef("enemy_reward"))),
        )
    )
    endo.append(
        EndoVar(
            VarRef("target_powerup"),
            BoolDomain(),
            Binary("lt", Ref(VarRef("targeting_cost_powerup")), Ref(VarRef("powerup_reward"))),
        )
    )
    endo.append(EndoVar(VarRef("powered_up"), BoolDomain(), Ref(VarRef("target_powerup"))))
    endo.append(
        EndoVar(
            VarRef("target_enemy"),
            BoolDomain(),
            band(
                Binary("lt", Ref(VarRef("targeting_cost_enemy")), Ref(VarRef("enemy_reward"))),
                Ref(VarRef("powered_up")),
            ),
        )
    )
    for name in _ENTITIES:
        beats = [
            bor(
                bnot(Ref(VarRef(f"target_{other}"))),
                Binary("lt", Ref(VarRef(f"{other}_reward")), Ref(VarRef(f"{name}_reward"))),
            )
            for other in _COMPETITORS[name]
        ]
        endo.append(
            EndoVar(
                VarRef(f"towards_{name}"),
                BoolDomain(),
                band(Ref(VarRef(f"target_{name}")), *beats),
            )
        )
    endo.append(
        EndoVar(
            VarRef("jump"),
            BoolDomain(),
            band(Ref(VarRef("near_enemy")), bnot(Ref(VarRef("powered_up")))),
        )
    )

    plan_dom = SymDomain(_PLAN_SYMBOLS)
    for i in range(1, 5):
        def seen(symbol: str) -> E.Expr:
            if i == 1:
                return bconst(False)
            return bor(
                *[Binary("eq", Ref(VarRef("planning_sequence", j)), sconst(symbol)) for j in range(1, i)]
            )

        cases = (
            (band(Ref(VarRef("towards_flag")), seen("flag")), sconst("finished")),
            (band(Ref(VarRef("towards_coin")), bnot(seen("coin"))), sconst("coin")),
            (band(Ref(VarRef("towards_powerup")), bnot(seen("powerup"))), sconst("powerup")),
            (band(Ref(VarRef("towards_enemy")), bnot(seen("enemy"))), sconst("enemy")),
            (band(Ref(VarRef("towards_flag")), bnot(seen("flag"))), sconst("flag")),
        )
        endo.append(EndoVar(VarRef("planning_sequence", i), plan_dom, CaseList(cases, sconst("finished"))))

    def planned(symbol: str) -> E.Expr:
        return bor(
            *[Binary("eq", Ref(VarRef("planning_sequence", j)), sconst(symbol)) for j in range(1, 5)]
        )

    score = Binary("sub", rconst(20.0), Ref(VarRef("time_taken")))
    score = Binary("add", score, IfThenElse(planned("coin"), Ref(VarRef("coin_reward")), rconst(0.0)))
    score = Binary("add", score, IfThenElse(planned("powerup"), Ref(VarRef("powerup_reward")), rconst(0.0)))
    score = Binary(
        "add",
        score,
        IfThenElse(band(planned("enemy"), planned("powerup")), Ref(VarRef("enemy_reward")), rconst(0.0)),
    )
    score = Binary("add", score, IfThenElse(planned("flag"), Ref(VarRef("flag_reward")), rconst(0.0)))
    endo.append(EndoVar(VarRef("score"), RealDomain(), score))

    space = InterventionSpace.power_set(
        [
            (VarRef("target_coin"), [E.VBool(False)]),
            (VarRef("target_enemy"), [E.VBool(False)]),
            (VarRef("target_powerup"), [E.VBool(False)]),
        ]
    )
    scm = Scm(
        name="platformer",
        endogenous=tuple(endo),
        exogenous=tuple(exo),
        interventions=space,
    )
    targets = tuple(VarRef(f"distance_{n}") for n in _ENTITIES) + tuple(
        VarRef("planning_sequence", i) for i in range(1, 5)
    )
    partition = Partition.of([[row.var for row in endo]])
    cluster_vars = [row.var for row in endo if row.var.name != "score"]

    claimed = Ccv(
        targets=targets,
        rho={
            **{
                VarRef(f"distance_{n}"): scm.equation_of(VarRef(f"distance_{n}"))
                for n in _ENTITIES
            },
            VarRef("planning_sequence", 1): IfThenElse(
                bnot(IsIntervened(VarRef("target_coin"))), sconst("coin"), sconst("flag")
            ),
            VarRef("planning_sequence", 2): IfThenElse(
                bnot(IsIntervened(VarRef("target_coin"))), sconst("finished"), sconst("flag")
            ),
            VarRef("planning_sequence", 3): sconst("finished"),
            VarRef("planning_sequence", 4): sconst("finished"),
        },
        interventions=space.restrict(cluster_vars),
        provenance=0,
    )
    return ZooEntry(
        name="platformer",
        params={},
        scm=scm,
        partition=partition,
        targets=targets,
        reference_ccvs={0: claimed},
        expect_reference_discrepancy=True,
        notes="claimed plan equations are literal; slot 2 disagrees with base "
        "evaluation when the coin is forbidden",
    )


# ---------------------------------------------------------------------------
# Non-deterministic fork (reparameterization demo)
# ---------------------------------------------------------------------------


def bernoulli_fork() -> ZooEntry:
    """A draw feeding two copies: the canonical reparameterization example.

    Consolidating the middle variable duplicates its equation into both
    children.  With a raw draw inside, the duplicates can disagree; after
    reparameterization the draw is a deterministic comparison against a
    shared uniform input and the children agree on every sample.
    """
    A, B, C, D = VarRef("A"), VarRef("B"), VarRef("C"), VarRef("D")
    scm = Scm(
        name="bernoulli-fork",
        endogenous=(
            EndoVar(B, BoolDomain(), RandomBernoulli(Ref(A))),
            EndoVar(C, BoolDomain(), Ref(B)),
            EndoVar(D, BoolDomain(), Ref(B)),
        ),
        exogenous=(ExoVar(A, RealDomain(0.0, 1.0), PointMass(E.VReal(0.5))),),
        interventions=InterventionSpace.power_set([]),
    )
    return ZooEntry(
        name="bernoulli_fork",
        params={},
        scm=scm,
        partition=Partition.of([[B, C, D]]),
        targets=(C, D),
        notes="duplicated draws disagree until reparameterized",
    )


# ---------------------------------------------------------------------------
# Linear-map metrics demo
# ---------------------------------------------------------------------------

#: Two sparse linear maps whose composition has *more* nonzero entries than
#: either factor: counting matrix entries is not a usable size metric for
#: composed equations.
MATRIX_DEMO = {
    "A": [[0, 1], [0, 1], [0, 1]],
    "B": [[0, 0, 0], [0, 1, 1]],
}


ZOO_BUILDERS = {
    "dominoes": dominoes,
    "tool_wear": tool_wear,
    "firing_squad": firing_squad,
    "step_by_step": step_by_step,
    "platformer": platformer,
    "bernoulli_fork": bernoulli_fork,
}
