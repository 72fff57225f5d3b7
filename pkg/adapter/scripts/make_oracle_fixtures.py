"""Generate the frozen oracle fixtures consumed by the engine test suite.

Writes two JSON files into the engine's tests/fixtures directory:

  oracle_cases.json   200 randomized formula cases (40 per kind) plus a
                      small bicubic section, each with expected values
                      computed by the reference evaluators
  ancestor_cases.json 500 random dependency trees with reference
                      segmentation and phrase-ancestor maps

Re-running regenerates identical files (fixed seeds).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from refineplan_adapter import oracle

CASES_PER_KIND = 40
TREE_CASES = 500
UPOS_POOL = ["DET", "ADJ", "ADP", "VERB", "ADV", "PRON", "NUM"]


def rand_vector(rnd: random.Random, dim: int) -> list[float]:
    return [rnd.uniform(-1.0, 1.0) for _ in range(dim)]


def rand_nonzero_vector(rnd: random.Random, dim: int) -> list[float]:
    while True:
        vec = rand_vector(rnd, dim)
        if oracle.norm(vec) > 1e-3:
            return vec


def make_vvv_cases(rnd: random.Random) -> list[dict]:
    cases = []
    for _ in range(CASES_PER_KIND):
        n = rnd.randint(2, 6)
        dim = rnd.randint(2, 8)
        matrix = [rand_nonzero_vector(rnd, dim) for _ in range(n)]
        cases.append({"v": matrix, "expected": oracle.vvv_attention(matrix)})
    return cases


def make_raw_logit_cases(rnd: random.Random) -> list[dict]:
    cases = []
    for _ in range(CASES_PER_KIND):
        n = rnd.randint(2, 6)
        dim = rnd.randint(3, 8)
        tokens = [rand_nonzero_vector(rnd, dim) for _ in range(n)]
        bank = [rand_nonzero_vector(rnd, dim) for _ in range(8)]
        cases.append({"tokens": tokens, "bank": bank, "expected": oracle.raw_logits(tokens, bank)})
    return cases


def make_cask_cases(rnd: random.Random) -> list[dict]:
    cases = []
    for _ in range(CASES_PER_KIND):
        n = rnd.randint(1, 10)
        raw = [[rnd.uniform(0.0, 1.0) for _ in range(n)] for _ in range(4)]
        alpha = [rnd.uniform(0.05, 1.0) for _ in range(3)]
        cases.append({"raw": raw, "alpha": alpha, "expected": oracle.cask_combine(raw, alpha)})
    return cases


def make_softmax_cases(rnd: random.Random) -> list[dict]:
    cases = []
    for _ in range(CASES_PER_KIND):
        n = rnd.randint(2, 6)
        dim = rnd.randint(3, 8)
        tokens = [rand_nonzero_vector(rnd, dim) for _ in range(n)]
        text = rand_nonzero_vector(rnd, dim)
        empty = rand_nonzero_vector(rnd, dim)
        cases.append({
            "tokens": tokens,
            "text": text,
            "empty": empty,
            "expected": oracle.two_way_softmax(tokens, text, empty),
        })
    return cases


def make_score_cases(rnd: random.Random) -> list[dict]:
    cases = []
    for _ in range(CASES_PER_KIND):
        global_sim = rnd.uniform(0.0, 1.0)
        scores = [rnd.uniform(0.01, 0.99) for _ in range(rnd.randint(0, 6))]
        beta = rnd.uniform(0.1, 0.9)
        cases.append({
            "global_sim": global_sim,
            "scores": scores,
            "beta": beta,
            "expected": oracle.alignment_score(global_sim, scores, beta),
        })
    return cases


def make_bicubic_cases(rnd: random.Random) -> list[dict]:
    cases = [{"grid": [[0.0, 1.0], [1.0, 0.0]], "height": 4, "width": 4}]
    for _ in range(9):
        src_h = rnd.randint(1, 5)
        src_w = rnd.randint(1, 5)
        cases.append({
            "grid": [[rnd.uniform(0.0, 1.0) for _ in range(src_w)] for _ in range(src_h)],
            "height": src_h + rnd.randint(0, 6),
            "width": src_w + rnd.randint(0, 6),
        })
    for case in cases:
        case["expected"] = oracle.bicubic_resample(case["grid"], case["height"], case["width"])
    return cases


def random_tree(rnd: random.Random) -> list[dict]:
    n = rnd.randint(1, 12)
    order = list(range(1, n + 1))
    rnd.shuffle(order)
    heads = {order[0]: 0}
    for idx in range(1, n):
        heads[order[idx]] = order[rnd.randrange(idx)]
    nodes = []
    for token_id in range(1, n + 1):
        roll = rnd.random()
        if roll < 0.35:
            upos = "NOUN"
        elif roll < 0.45:
            upos = "PROPN"
        else:
            upos = rnd.choice(UPOS_POOL)
        nodes.append({"id": token_id, "form": f"w{token_id}", "upos": upos, "head": heads[token_id]})
    return nodes


def make_ancestor_cases(rnd: random.Random) -> list[dict]:
    cases = []
    for _ in range(TREE_CASES):
        nodes = random_tree(rnd)
        centers, phrases = oracle.segment(nodes)
        ans = oracle.phrase_ancestors_exhaustive(nodes, centers, phrases)
        cases.append({
            "nodes": nodes,
            "centers": centers,
            "phrases": [[c, members] for c, members in sorted(phrases.items())],
            "ans": [[c, ans[c]] for c in sorted(ans)],
        })
    return cases


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path(__file__).resolve().parents[2] / "tests" / "fixtures",
    )
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    rnd = random.Random(74120553)
    cases = {
        "vvv": make_vvv_cases(rnd),
        "raw_logits": make_raw_logit_cases(rnd),
        "cask": make_cask_cases(rnd),
        "two_way_softmax": make_softmax_cases(rnd),
        "alignment_score": make_score_cases(rnd),
        "bicubic": make_bicubic_cases(rnd),
    }
    oracle_path = args.out_dir / "oracle_cases.json"
    oracle_path.write_text(json.dumps(cases, sort_keys=True) + "\n", encoding="utf-8")

    tree_rnd = random.Random(90125834)
    ancestor_path = args.out_dir / "ancestor_cases.json"
    ancestor_path.write_text(
        json.dumps(make_ancestor_cases(tree_rnd), sort_keys=True) + "\n", encoding="utf-8"
    )

    total = sum(len(v) for k, v in cases.items() if k != "bicubic")
    print(f"wrote {oracle_path} ({total} formula cases)")
    print(f"wrote {ancestor_path} ({TREE_CASES} trees)")


if __name__ == "__main__":
    main()
