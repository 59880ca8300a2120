"""Document formats: strict loading, canonical export, family expansion."""

import json

import pytest

from scmc import expr as E
from scmc import zoo
from scmc.documents import (
    consolidated_from_doc,
    consolidated_to_doc,
    doc_kind,
    expr_from_json,
    expr_to_json,
    model_from_doc,
    model_to_doc,
    parse_value_for_domain,
    partition_from_doc,
    partition_to_doc,
    to_json,
)
from scmc.errors import ParseError
from scmc.evaluation import enumerate_exogenous
from scmc.consolidation import eval_consolidated
from scmc.expr import BoolDomain, IntDomain, RealDomain, SymDomain, VarRef
from scmc.scm import InterventionSet, validate


def entries():
    return [
        zoo.dominoes(4),
        zoo.tool_wear(5),
        zoo.firing_squad(3),
        zoo.step_by_step(),
        zoo.platformer(),
    ]


class TestRoundTrips:
    def test_model_documents_are_byte_stable(self):
        for entry in entries():
            text = to_json(model_to_doc(entry.scm))
            reloaded = model_from_doc(json.loads(text))
            assert to_json(model_to_doc(reloaded)) == text
            assert validate(reloaded).ok

    def test_partition_documents_are_byte_stable(self):
        for entry in entries():
            text = to_json(partition_to_doc(entry.partition))
            reloaded = partition_from_doc(json.loads(text))
            assert to_json(partition_to_doc(reloaded)) == text

    def test_consolidated_documents_are_byte_stable_and_evaluable(self):
        for entry in entries():
            cons = entry.consolidated()
            text = to_json(consolidated_to_doc(cons))
            reloaded = consolidated_from_doc(json.loads(text))
            assert to_json(consolidated_to_doc(reloaded)) == text
            u = enumerate_exogenous(entry.scm, budget=64)[0]
            assert eval_consolidated(reloaded, u, InterventionSet.empty()) == eval_consolidated(
                cons, u, InterventionSet.empty()
            )

    def test_expression_codec_covers_every_node(self):
        entry = zoo.platformer()
        for row in entry.scm.endogenous:
            raw = expr_to_json(row.equation)
            assert expr_from_json(raw) == row.equation
        closed = zoo.dominoes_closed_form()
        assert expr_from_json(expr_to_json(closed)) == closed
        tw = zoo.tool_wear_closed_form(7)
        assert expr_from_json(expr_to_json(tw)) == tw

    def test_remaining_node_kinds_round_trip(self):
        v = VarRef("S", 3)
        nodes = [
            E.InterventionValue(v, E.Ref(VarRef("S", 1))),
            E.InterventionValue(v),
            E.Unary("neg", E.Ref(VarRef("A"))),
            E.ExistsIntervention("S", lo=1, hi=9, value=E.VInt(0)),
        ]
        for node in nodes:
            assert expr_from_json(expr_to_json(node)) == node

    def test_draw_nodes_round_trip(self):
        scm = zoo.bernoulli_fork().scm
        text = to_json(model_to_doc(scm))
        reloaded = model_from_doc(json.loads(text))
        assert to_json(model_to_doc(reloaded)) == text
        assert reloaded.equation_of(VarRef("B")) == scm.equation_of(VarRef("B"))


class TestStrictness:
    def test_unknown_top_level_field_rejected(self):
        doc = model_to_doc(zoo.dominoes(3).scm)
        doc["extra"] = 1
        with pytest.raises(ParseError):
            model_from_doc(doc)

    def test_unknown_entry_field_rejected(self):
        doc = model_to_doc(zoo.dominoes(3).scm)
        doc["endogenous"][0]["comment"] = "nope"
        with pytest.raises(ParseError):
            model_from_doc(doc)

    def test_missing_field_rejected(self):
        doc = model_to_doc(zoo.dominoes(3).scm)
        del doc["interventions"]
        with pytest.raises(ParseError):
            model_from_doc(doc)

    def test_unknown_expression_op(self):
        with pytest.raises(ParseError):
            expr_from_json({"op": "xor", "args": []})

    def test_doc_kind_detection(self):
        entry = zoo.step_by_step()
        assert doc_kind(model_to_doc(entry.scm)) == "model"
        assert doc_kind(partition_to_doc(entry.partition)) == "partition"
        assert doc_kind(consolidated_to_doc(entry.consolidated())) == "consolidated"
        assert doc_kind({"matrices": zoo.MATRIX_DEMO}) == "matrices"


class TestFamilies:
    def make_doc(self):
        return {
            "name": "fam",
            "exogenous": [
                {
                    "name": "push",
                    "domain": {"kind": "bool"},
                    "dist": {"kind": "uniform_finite", "values": [False, True]},
                }
            ],
            "endogenous": [
                {"name": "S_1", "domain": {"kind": "bool"}, "eq": {"ref": "push"}},
                {
                    "name": "S",
                    "range": {"lo": 2, "hi": 5},
                    "domain": {"kind": "bool"},
                    "eq": {"ref": "S", "index": "i-1"},
                },
            ],
            "interventions": {"mode": "singleton", "atoms": [{"var": "S_2", "values": [True]}]},
        }

    def test_range_expansion(self):
        scm = model_from_doc(self.make_doc())
        assert [str(v) for v in scm.endo_vars()] == ["S_1", "S_2", "S_3", "S_4", "S_5"]
        assert validate(scm).ok
        assert scm.equation_of(VarRef("S", 3)) == E.Ref(VarRef("S", 2))

    def test_relative_index_outside_family_rejected(self):
        doc = self.make_doc()
        doc["endogenous"][0]["eq"] = {"ref": "S", "index": "i-1"}
        with pytest.raises(ParseError):
            model_from_doc(doc)

    def test_indexed_names_parse_everywhere(self):
        part = partition_from_doc({"clusters": [["S_1"], ["S_2", "S_3"]]})
        assert part.clusters[1] == frozenset({VarRef("S", 2), VarRef("S", 3)})


class TestValueParsing:
    def test_against_domains(self):
        assert parse_value_for_domain("true", BoolDomain()) == E.VBool(True)
        assert parse_value_for_domain("0", BoolDomain()) == E.VBool(False)
        assert parse_value_for_domain("12", IntDomain(0, 20)) == E.VInt(12)
        assert parse_value_for_domain("0.85", RealDomain()) == E.VReal(0.85)
        assert parse_value_for_domain("lives", SymDomain(("lives", "dies"))) == E.VSym("lives")

    def test_rejections(self):
        with pytest.raises(ParseError):
            parse_value_for_domain("maybe", BoolDomain())
        with pytest.raises(ParseError):
            parse_value_for_domain("x", IntDomain(0, 3))
        with pytest.raises(ParseError):
            parse_value_for_domain("sleeps", SymDomain(("lives", "dies")))
