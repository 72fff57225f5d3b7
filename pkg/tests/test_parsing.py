import random

import pytest
from hypothesis import given, settings, strategies as st

from refineplan import (
    ConlluParseError,
    parse_conllu,
    phrase_ancestors,
    segment_phrases,
)

from conftest import SAMPLE_CONLLU


def line(token_id, form, upos, head, deprel="dep"):
    return f"{token_id}\t{form}\t{form}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_"


def test_single_token_sentence():
    tree = parse_conllu(line(1, "cat", "NOUN", 0, "root"))
    assert len(tree) == 1
    assert tree.root.form == "cat"


def test_two_roots_rejected():
    text = "\n".join([line(1, "a", "DET", 0), line(2, "b", "NOUN", 0)])
    with pytest.raises(ConlluParseError, match="root"):
        parse_conllu(text)


def test_missing_root_rejected():
    text = "\n".join([line(1, "a", "DET", 2), line(2, "b", "NOUN", 1)])
    with pytest.raises(ConlluParseError, match="root"):
        parse_conllu(text)


def test_cycle_rejected():
    text = "\n".join([line(1, "a", "DET", 2), line(2, "b", "NOUN", 1), line(3, "c", "VERB", 0)])
    with pytest.raises(ConlluParseError, match="cycle"):
        parse_conllu(text)


def test_bad_column_count_reports_line():
    text = line(1, "ok", "NOUN", 0) + "\nbroken line"
    with pytest.raises(ConlluParseError) as err:
        parse_conllu(text)
    assert err.value.line == 2


def test_bad_head_reports_line():
    with pytest.raises(ConlluParseError) as err:
        parse_conllu(line(1, "x", "NOUN", "zero"))
    assert err.value.line == 1


def test_noncontiguous_ids_rejected():
    text = "\n".join([line(1, "a", "NOUN", 0), line(3, "b", "DET", 1)])
    with pytest.raises(ConlluParseError, match="contiguous"):
        parse_conllu(text)


def test_comments_and_subtoken_lines_skipped():
    text = "\n".join(
        [
            "# sent_id = 1",
            "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_",
            line(1, "del", "DET", 2),
            "# another comment",
            line(2, "cat", "NOUN", 0, "root"),
            "3.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_",
        ]
    )
    tree = parse_conllu(text)
    assert [n.form for n in tree.nodes] == ["del", "cat"]


def test_first_sentence_only_by_default():
    text = line(1, "cat", "NOUN", 0) + "\n\n" + line(1, "dog", "NOUN", 0)
    tree = parse_conllu(text)
    assert [n.form for n in tree.nodes] == ["cat"]


def test_merge_sentences_reattaches_roots():
    text = line(1, "cat", "NOUN", 0) + "\n\n" + line(1, "dog", "NOUN", 0)
    tree = parse_conllu(text, merge_sentences=True)
    assert [n.form for n in tree.nodes] == ["cat", "dog"]
    assert tree.node(2).head == 1
    assert tree.node(2).deprel == "parataxis"


def test_fixture_tree_structure():
    tree = parse_conllu(SAMPLE_CONLLU)
    assert len(tree) == 7
    assert tree.root.form == "cat"
    assert [n.id for n in tree.children(3)] == [1, 2, 7]


def test_fixture_segmentation():
    tree = parse_conllu(SAMPLE_CONLLU)
    seg = segment_phrases(tree)
    assert seg.centers == (3, 7)
    assert seg.phrases == {3: (1, 2, 3), 7: (4, 5, 6, 7)}
    assert seg.phrase_text(tree, 3) == "a red cat"
    assert seg.phrase_text(tree, 7) == "on a wooden table"


def test_fixture_ancestors():
    tree = parse_conllu(SAMPLE_CONLLU)
    seg = segment_phrases(tree)
    assert phrase_ancestors(tree, seg) == {3: 3, 7: 3}


def test_single_noun_takes_everything():
    text = "\n".join(
        [line(1, "the", "DET", 2), line(2, "sky", "NOUN", 0, "root"), line(3, "glows", "VERB", 2)]
    )
    seg = segment_phrases(parse_conllu(text))
    assert seg.phrases == {2: (1, 2, 3)}
    assert not seg.fallback_root


def test_zero_noun_fallback():
    text = "\n".join([line(1, "it", "PRON", 2), line(2, "glows", "VERB", 0, "root")])
    tree = parse_conllu(text)
    seg = segment_phrases(tree)
    assert seg.fallback_root
    assert seg.centers == (2,)
    assert seg.phrases == {2: (1, 2)}
    assert phrase_ancestors(tree, seg) == {2: 2}


def test_tie_breaks_prefer_index_gap_then_lower_id():
    # star around a verb root: every non-noun is 2 hops from both nouns except
    # the root itself (1 hop each), exercising both tie-break levels
    text = "\n".join(
        [
            line(1, "cat", "NOUN", 3),
            line(2, "and", "CCONJ", 3),
            line(3, "sits", "VERB", 0, "root"),
            line(4, "near", "ADP", 3),
            line(5, "dog", "NOUN", 3),
        ]
    )
    seg = segment_phrases(parse_conllu(text))
    assert 2 in seg.phrases[1]  # index gap 1 vs 3: noun 1 wins
    assert 4 in seg.phrases[5]  # index gap 3 vs 1: noun 5 wins
    assert 3 in seg.phrases[1]  # full tie: lower noun id wins


def test_noun_chain_ancestors():
    text = "\n".join(
        [line(1, "roof", "NOUN", 0, "root"), line(2, "house", "NOUN", 1), line(3, "town", "NOUN", 2)]
    )
    tree = parse_conllu(text)
    seg = segment_phrases(tree)
    assert phrase_ancestors(tree, seg) == {1: 1, 2: 1, 3: 2}


def random_nodes(rnd: random.Random):
    n = rnd.randint(1, 12)
    order = list(range(1, n + 1))
    rnd.shuffle(order)
    heads = {order[0]: 0}
    for idx in range(1, n):
        heads[order[idx]] = order[rnd.randrange(idx)]
    tags = []
    for _ in range(n):
        roll = rnd.random()
        tags.append("NOUN" if roll < 0.35 else "PROPN" if roll < 0.45 else "X")
    return [
        {"id": i, "form": f"w{i}", "upos": tags[i - 1], "head": heads[i]} for i in range(1, n + 1)
    ]


def conllu_of(nodes) -> str:
    return "\n".join(line(n["id"], n["form"], n["upos"], n["head"]) for n in nodes)


def reference_ancestors(nodes, phrase_of, centers):
    """In-test brute force: walk every governor chain at every boundary edge."""
    by_id = {n["id"]: n for n in nodes}
    kids = {n["id"]: [] for n in nodes}
    root = None
    for n in nodes:
        if n["head"] == 0:
            root = n["id"]
        else:
            kids[n["head"]].append(n["id"])
    ans = {c: c for c in centers}
    level = [root]
    while level:
        nxt = []
        for node_id in level:
            for child in sorted(kids[node_id]):
                nxt.append(child)
                if phrase_of[child] != phrase_of[node_id]:
                    cursor = by_id[child]["head"]
                    while cursor != 0:
                        if by_id[cursor]["upos"] in ("NOUN", "PROPN"):
                            ans[phrase_of[child]] = phrase_of[cursor]
                            break
                        cursor = by_id[cursor]["head"]
        level = nxt
    return ans


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_trees_partition_and_reference_equivalence(seed):
    nodes = random_nodes(random.Random(seed))
    tree = parse_conllu(conllu_of(nodes))
    seg = segment_phrases(tree)

    member_counts = sum(len(m) for m in seg.phrases.values())
    assert member_counts == len(nodes)
    all_members = sorted(t for m in seg.phrases.values() for t in m)
    assert all_members == [n["id"] for n in nodes]
    for center, members in seg.phrases.items():
        assert center in members

    ans = phrase_ancestors(tree, seg)
    assert set(ans) == set(seg.centers)
    for start in ans:
        seen = set()
        cur = start
        while ans[cur] != cur:
            assert cur not in seen
            seen.add(cur)
            cur = ans[cur]
            assert cur in seg.centers

    expected = reference_ancestors(nodes, seg.phrase_of(), list(seg.centers))
    assert ans == expected
