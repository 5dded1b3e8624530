import copy
import json
from fractions import Fraction

import pytest

from slitflow import construction as cons
from slitflow.bestapprox import best_approx_sequence
from slitflow.errors import NotFoundAtCap, PreconditionViolation, ScheduleInfeasible
from slitflow.numerics import SUP, quadratic, to_float
from slitflow.surface import Slit
from slitflow.tree import Segment, SlitTree, audit_tree, build_full_tree, build_tree, level_schedules

TOY = cons.params_from_r(Fraction(3, 2), delta=Fraction(1, 10), mode="toy", schedule_depth=1)
CTX_A = (quadratic(-1, 1, 2), quadratic(Fraction(1, 3), Fraction(1, 5), 2))


@pytest.fixture(scope="module")
def tree_a():
    w0 = cons.find_slit(CTX_A, 1000, 2000, lambda w: True)
    return build_tree(CTX_A, TOY, 4, w0, plan=[Segment("diophantine", 4, Fraction(20))])


@pytest.fixture(scope="module")
def liouville():
    lam = quadratic(Fraction(37, 101), Fraction(1, 10**200), 2)
    mu = quadratic(Fraction(58, 101), Fraction(1, 10**200), 3)
    ctx = (lam, mu)
    ba = best_approx_sequence(ctx, SUP, 300)[-1]
    qn = cons.next_denominator_lower(ba)
    return ctx, ba, qn


@pytest.fixture(scope="module")
def tree_b(liouville):
    ctx, ba, qn = liouville
    w0 = cons.initial_slit(ctx, ba, TOY, bounds=(41000, 10**5), q_next=qn)
    return build_tree(ctx, TOY, 4, w0, plan=[Segment("liouville", 4)], ba=ba, q_next=qn)


def _check_structure(tree, branching=2):
    r = float(tree.params.r)
    assert len(tree.nodes) == sum(branching**j for j in range(tree.depth + 1))
    for node in tree.nodes:
        for cid in node.children:
            kid = tree.nodes[cid]
            assert kid.parent == node.id and kid.level == node.level + 1
            assert (kid.slit.m - node.slit.m, kid.slit.n - node.slit.n) == (2 * kid.v.p, 2 * kid.v.q)
            h, hk = to_float(node.slit.height), to_float(kid.slit.height)
            assert h**r <= hk <= 5 * h**r


def test_tree_a_invariants(tree_a):
    _check_structure(tree_a)
    assert tree_a.failures() == []
    assert all(n.region == "diophantine" for n in tree_a.nodes if n.children)
    assert len(list(tree_a.branches())) == 16


def test_tree_b_invariants(tree_b, liouville):
    _, ba, _ = liouville
    _check_structure(tree_b)
    assert tree_b.failures() == []
    for node in tree_b.nodes:
        assert cons.d_value(node.slit, ba) <= 2
        if node.children:
            lam = node.certificates["lambda"]
            assert lam["gcd_ok"] and lam["raw_count"] == lam["dedup_count"]


def test_json_round_trip(tree_a):
    data = json.loads(json.dumps(tree_a.to_json()))
    again = SlitTree.from_json(data).to_json()
    assert json.dumps(again, sort_keys=True) == json.dumps(data, sort_keys=True)


def test_audit_passes(tree_a, tree_b):
    for tree in (tree_a, tree_b):
        rep = audit_tree(json.loads(json.dumps(tree.to_json())))
        assert rep["passed"] and rep["recomputed"] > 0


def test_audit_detects_tampering(tree_a):
    data = copy.deepcopy(tree_a.to_json())
    leaf = data["nodes"][-1]
    leaf["m"] += 2
    assert not audit_tree(data)["passed"]
    data = copy.deepcopy(tree_a.to_json())
    data["nodes"][0]["certificates"]["height_sandwich"]["passed"] = False
    assert not audit_tree(data)["passed"]


def test_finite_ell_tree():
    params = cons.params_from_r(Fraction(11, 10), delta=Fraction(1, 10), mode="finite-ellN", schedule_depth=0)
    w0 = Slit(0, 1000, CTX_A)
    tree = build_tree(CTX_A, params, 1, w0, branching=2)
    assert [s.alpha for s in tree.schedules] == [2]
    assert len(tree.nodes) == 3 and tree.failures() == []
    assert audit_tree(tree.to_json())["passed"]


def test_schedule_errors(liouville):
    _, ba, _ = liouville
    with pytest.raises(PreconditionViolation):
        level_schedules([Segment("liouville", 2)], TOY, None, 2)
    with pytest.raises(PreconditionViolation):
        level_schedules([Segment("diophantine", 1, Fraction(5))], TOY, None, 3)
    with pytest.raises(ScheduleInfeasible):
        level_schedules([Segment("bounded", 10, Fraction(3))], TOY, None, 10)
    sched = level_schedules([Segment("diophantine", 3, Fraction(4))], TOY, ba.q, 3)
    assert [s.alpha for s in sched] == [4, 6, 9]


def test_full_mode_is_infeasible(liouville):
    ctx, _, _ = liouville
    params = cons.derive_params(Fraction(1, 10))
    seq = best_approx_sequence(ctx, SUP, 300)
    with pytest.raises((ScheduleInfeasible, NotFoundAtCap)):
        build_full_tree(ctx, params, seq, 2)
    with pytest.raises(PreconditionViolation):
        build_tree(ctx, params, 2, Slit(0, 2, ctx))
