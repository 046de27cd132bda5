import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procdisc.bpmn import BpmnModel, Kind, export_bpmn, from_tree, import_bpmn
from procdisc.simulate import random_tree
from procdisc.verify import (LanguageExplosion, VerificationError, check_soundness, compute_cfc,
                             compute_size, is_structured, language_upto_k)

from test_synthesis import loop_through_and_split


def chain(*spec) -> BpmnModel:
    """Model from (id, kind, label) triples and a flow list."""
    nodes, flows = spec
    m = BpmnModel()
    for nid, kind, label in nodes:
        m.add_node(kind, label, node_id=nid)
    for s, t in flows:
        m.add_flow(s, t)
    return m


def and_merged_by_xor() -> BpmnModel:
    return chain([("s", Kind.START, None), ("g", Kind.AND, None), ("x", Kind.TASK, "x"),
                  ("y", Kind.TASK, "y"), ("j", Kind.XOR, None), ("e", Kind.END, None)],
                 [("s", "g"), ("g", "x"), ("g", "y"), ("x", "j"), ("y", "j"), ("j", "e")])


def loop_through_xor_split() -> BpmnModel:
    return chain([("start", Kind.START, None), ("entry", Kind.XOR, None), ("a", Kind.TASK, "a"),
                  ("x", Kind.XOR, None), ("b", Kind.TASK, "b"), ("end", Kind.END, None)],
                 [("start", "entry"), ("entry", "a"), ("a", "x"), ("x", "b"), ("x", "entry"),
                  ("b", "end")])


def test_sequence_is_sound():
    report = check_soundness(from_tree(("seq", "a")))
    assert report.sound and report.deadlock_free and report.proper_completion
    assert report.no_dead_activities


def test_and_merged_by_xor_completes_improperly():
    report = check_soundness(and_merged_by_xor())
    assert not report.proper_completion and report.verdict == "unsound"


def test_loop_split_shapes():
    assert not check_soundness(loop_through_and_split(), 5000).proper_completion
    assert check_soundness(loop_through_xor_split()).sound


def test_and_join_after_xor_deadlocks():
    m = chain([("s", Kind.START, None), ("g", Kind.XOR, None), ("x", Kind.TASK, "x"),
               ("y", Kind.TASK, "y"), ("j", Kind.AND, None), ("e", Kind.END, None)],
              [("s", "g"), ("g", "x"), ("g", "y"), ("x", "j"), ("y", "j"), ("j", "e")])
    report = check_soundness(m)
    assert not report.deadlock_free and not report.sound


def test_dead_activity():
    m = chain([("s", Kind.START, None), ("g", Kind.XOR, None), ("x", Kind.TASK, "x"),
               ("y", Kind.TASK, "y"), ("j", Kind.AND, None), ("c", Kind.TASK, "c"),
               ("e", Kind.END, None)],
              [("s", "g"), ("g", "x"), ("g", "y"), ("x", "j"), ("y", "j"), ("j", "c"), ("c", "e")])
    report = check_soundness(m)
    assert not report.no_dead_activities and "['c']" in report.reasons[-1]


def test_state_bound_makes_result_inconclusive():
    m = from_tree(("and", "a", "b", "c", "d"))
    report = check_soundness(m, state_bound=3)
    assert report.verdict == "inconclusive" and report.bound_hit
    with pytest.raises(ValueError):
        check_soundness(m, state_bound=0)


def test_unpaired_or_join_on_a_cycle_is_refused():
    m = chain([("s", Kind.START, None), ("entry", Kind.XOR, None), ("split", Kind.XOR, None),
               ("a", Kind.TASK, "a"), ("b", Kind.TASK, "b"), ("j", Kind.OR, None),
               ("c", Kind.TASK, "c"), ("k", Kind.XOR, None), ("e", Kind.END, None)],
              [("s", "entry"), ("entry", "split"), ("split", "a"), ("split", "b"), ("a", "j"),
               ("b", "j"), ("j", "c"), ("c", "k"), ("k", "entry"), ("k", "e")])
    with pytest.raises(VerificationError, match="unsupported OR-join context"):
        check_soundness(m)


def test_size():
    assert compute_size(from_tree(("seq", "a"))) == 3
    assert compute_size(from_tree(("seq", "a", ("or", "b", "c", "d"), "e"))) == 9


def test_cfc():
    assert compute_cfc(from_tree(("seq", "a", "b"))) == 0
    assert compute_cfc(from_tree(("or", "b", "c", "d"))) == 7
    assert compute_cfc(from_tree(("xor", "b", "c", "d"))) == 3
    assert compute_cfc(from_tree(("and", "b", "c"))) == 1


def test_cfc_grows_when_and_becomes_or():
    for n in range(2, 6):
        labels = [chr(ord("a") + i) for i in range(n)]
        assert compute_cfc(from_tree(("or", *labels))) > compute_cfc(from_tree(("and", *labels)))


def test_language_examples():
    assert language_upto_k(from_tree(("seq", "a", "b")), 2) == {("a", "b")}
    assert language_upto_k(from_tree(("seq", "a", "b")), 1) == set()
    assert language_upto_k(from_tree(("and", "a", "b")), 2) == {("a", "b"), ("b", "a")}
    assert language_upto_k(from_tree(("seq", ("or", "a", "b"), "c")), 3) == {
        ("a", "c"), ("b", "c"), ("a", "b", "c"), ("b", "a", "c")}
    assert language_upto_k(from_tree(("loop", "a", "b")), 5) == {
        ("a",), ("a", "b", "a"), ("a", "b", "a", "b", "a")}


def test_language_explosion_reports_partial_count():
    m = from_tree(("and", *"abcdefgh"))
    with pytest.raises(LanguageExplosion):
        language_upto_k(m, 8, max_states=500)


def brute_language(tree, k):
    """Direct enumeration from tree semantics."""
    if isinstance(tree, str):
        return {(tree,)}
    op, *kids = tree
    langs = [brute_language(c, k) for c in kids]
    if op == "seq":
        out = {()}
        for lang in langs:
            out = {a + b for a in out for b in lang if len(a + b) <= k}
        return out
    if op == "xor":
        return set().union(*langs)
    if op in ("and", "or"):
        groups = [langs] if op == "and" else [
            [langs[i] for i in idx] for r in range(1, len(langs) + 1)
            for idx in itertools.combinations(range(len(langs)), r)]
        out = set()
        for g in groups:
            for words in itertools.product(*g):
                if sum(map(len, words)) <= k:
                    out |= shuffles(words)
        return out
    if op == "loop":
        do, redo = langs[0], (langs[1] if len(langs) > 1 else {()})
        out, frontier = set(do), set(do)
        while frontier:
            frontier = {w + r + d for w in frontier for r in redo for d in do
                        if len(w + r + d) <= k} - out
            out |= frontier
        return out
    raise ValueError(op)


def shuffles(words):
    words = [w for w in words if w]
    if not words:
        return {()}
    out = set()
    for i, w in enumerate(words):
        rest = words[:i] + [w[1:]] + words[i + 1:]
        out |= {(w[0],) + s for s in shuffles(rest)}
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_language_matches_tree_enumeration(seed, loops):
    tree = random_tree(random.Random(seed), 4, loops=loops, inclusive=True)
    if isinstance(tree, str):
        tree = ("seq", tree)
    lang = language_upto_k(from_tree(tree), 6)
    assert lang == {w for w in brute_language(tree, 6) if w}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_block_trees_are_sound_and_structured(seed):
    tree = random_tree(random.Random(seed), 5, loops=True, inclusive=True)
    if isinstance(tree, str):
        tree = ("seq", tree)
    m = from_tree(tree)
    assert check_soundness(m).sound
    assert is_structured(m)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_language_survives_export_import(seed):
    tree = random_tree(random.Random(seed), 5, loops=True, inclusive=True)
    if isinstance(tree, str):
        tree = ("seq", tree)
    m = from_tree(tree)
    assert language_upto_k(import_bpmn(export_bpmn(m)), 6) == language_upto_k(m, 6)


def test_unstructured_model_is_detected():
    m = chain([("s", Kind.START, None), ("g", Kind.AND, None), ("a", Kind.TASK, "a"),
               ("b", Kind.TASK, "b"), ("x", Kind.XOR, None), ("c", Kind.TASK, "c"),
               ("j", Kind.AND, None), ("e", Kind.END, None)],
              [("s", "g"), ("g", "a"), ("g", "x"), ("x", "b"), ("x", "c"), ("a", "j"),
               ("b", "j"), ("c", "e"), ("j", "e")])
    assert not is_structured(m)
