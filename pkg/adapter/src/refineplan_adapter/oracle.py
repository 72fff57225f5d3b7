"""Naive reference evaluators for every formula the engine implements.

Pure-Python, list-based, loop-by-loop implementations used to produce
the frozen expected values in the engine's test fixtures. This module
must never import the engine or share code with it; its value is that
both sides were written independently from the same contracts.
"""

from __future__ import annotations

import math


# ---------------------------------------------------------------------------
# linear algebra primitives

def dot(u: list[float], v: list[float]) -> float:
    return math.fsum(a * b for a, b in zip(u, v))


def norm(u: list[float]) -> float:
    return math.sqrt(dot(u, u))


def frobenius_norm(matrix: list[list[float]]) -> float:
    return math.sqrt(math.fsum(x * x for row in matrix for x in row))


def cosine(u: list[float], v: list[float]) -> float:
    return dot(u, v) / (norm(u) * norm(v))


def softmax(row: list[float]) -> list[float]:
    top = max(row)
    exps = [math.exp(x - top) for x in row]
    total = math.fsum(exps)
    return [e / total for e in exps]


# ---------------------------------------------------------------------------
# value-only attention

def vvv_attention(matrix: list[list[float]]) -> list[list[float]]:
    """softmax(V V^T / ||V||_F) V, row-wise softmax."""
    fro = frobenius_norm(matrix)
    n = len(matrix)
    dim = len(matrix[0])
    out = []
    for i in range(n):
        logits = [dot(matrix[i], matrix[j]) / fro for j in range(n)]
        weights = softmax(logits)
        out.append([
            math.fsum(weights[j] * matrix[j][k] for j in range(n)) for k in range(dim)
        ])
    return out


# ---------------------------------------------------------------------------
# perceptual quality

def raw_logits(tokens: list[list[float]], bank_rows: list[list[float]]) -> list[list[float]]:
    """4 x N rescaled cosines against (positive - negative) per factor."""
    out = []
    for factor in range(4):
        pos = bank_rows[2 * factor]
        neg = bank_rows[2 * factor + 1]
        direction = [p - q for p, q in zip(pos, neg)]
        out.append([(cosine(tok, direction) + 1.0) / 2.0 for tok in tokens])
    return out


def cask_combine(raw: list[list[float]], alpha: list[float]) -> list[float]:
    n = len(raw[0])
    out = []
    for k in range(n):
        value = raw[0][k]
        for i in range(1, 4):
            value *= min(raw[i][k] / alpha[i - 1], 1.0)
        out.append(value)
    return out


# ---------------------------------------------------------------------------
# bicubic (cubic convolution, a = -0.5, align corners, edge clamp)

def _kernel(x: float) -> float:
    ax = abs(x)
    if ax <= 1.0:
        return 1.5 * ax**3 - 2.5 * ax**2 + 1.0
    if ax < 2.0:
        return -0.5 * ax**3 + 2.5 * ax**2 - 4.0 * ax + 2.0
    return 0.0


def bicubic_resample(grid: list[list[float]], height: int, width: int) -> list[list[float]]:
    src_h = len(grid)
    src_w = len(grid[0])
    y_scale = (src_h - 1) / (height - 1) if height > 1 else 0.0
    x_scale = (src_w - 1) / (width - 1) if width > 1 else 0.0
    out = []
    for i in range(height):
        sy = i * y_scale
        by = math.floor(sy)
        row = []
        for j in range(width):
            sx = j * x_scale
            bx = math.floor(sx)
            acc = 0.0
            for m in range(by - 1, by + 3):
                wy = _kernel(sy - m)
                ym = min(max(m, 0), src_h - 1)
                for n in range(bx - 1, bx + 3):
                    wx = _kernel(sx - n)
                    xn = min(max(n, 0), src_w - 1)
                    acc += wy * wx * grid[ym][xn]
            row.append(acc)
        out.append(row)
    return out


def clamp01(values: list[list[float]]) -> list[list[float]]:
    return [[min(max(v, 0.0), 1.0) for v in row] for row in values]


# ---------------------------------------------------------------------------
# alignment

def two_way_softmax(tokens: list[list[float]], text: list[float], empty: list[float]) -> list[float]:
    out = []
    for tok in tokens:
        s_text = cosine(tok, text)
        s_empty = cosine(tok, empty)
        top = max(s_text, s_empty)
        e_text = math.exp(s_text - top)
        e_empty = math.exp(s_empty - top)
        out.append(e_text / (e_text + e_empty))
    return out


def alignment_score(global_sim: float, phrase_scores: list[float], beta: float) -> float:
    value = global_sim
    for s in phrase_scores:
        value *= min(s / beta, 1.0)
    return value


# ---------------------------------------------------------------------------
# syntax trees: nodes are dicts {"id", "form", "upos", "head"}

NOUNISH = ("NOUN", "PROPN")


def tree_adjacency(nodes: list[dict]) -> dict[int, list[int]]:
    adj = {n["id"]: [] for n in nodes}
    for n in nodes:
        if n["head"] != 0:
            adj[n["id"]].append(n["head"])
            adj[n["head"]].append(n["id"])
    return adj


def hop_distances(adj: dict[int, list[int]], start: int) -> dict[int, int]:
    dist = {start: 0}
    frontier = [start]
    while frontier:
        nxt = []
        for node in frontier:
            for other in adj[node]:
                if other not in dist:
                    dist[other] = dist[node] + 1
                    nxt.append(other)
        frontier = nxt
    return dist


def segment(nodes: list[dict]) -> tuple[list[int], dict[int, list[int]]]:
    """Nearest-noun phrase assignment with (hops, index gap, noun id) ties."""
    centers = [n["id"] for n in nodes if n["upos"] in NOUNISH]
    if not centers:
        root = next(n["id"] for n in nodes if n["head"] == 0)
        return [root], {root: [n["id"] for n in nodes]}
    adj = tree_adjacency(nodes)
    dists = {c: hop_distances(adj, c) for c in centers}
    phrases: dict[int, list[int]] = {c: [] for c in centers}
    for n in nodes:
        ranked = sorted(
            centers, key=lambda c: (dists[c][n["id"]], abs(n["id"] - c), c)
        )
        phrases[ranked[0]].append(n["id"])
    for c in phrases:
        phrases[c].sort()
    return centers, phrases


def _discovery_order(nodes: list[dict], root: int) -> list[int]:
    """Level-order traversal order, children in ascending id."""
    children: dict[int, list[int]] = {n["id"]: [] for n in nodes}
    for n in nodes:
        if n["head"] != 0:
            children[n["head"]].append(n["id"])
    for kid_list in children.values():
        kid_list.sort()
    order = []
    frontier = [root]
    while frontier:
        nxt = []
        for node in frontier:
            order.append(node)
            nxt.extend(children[node])
        frontier = nxt
    return order


def phrase_ancestors_exhaustive(
    nodes: list[dict], centers: list[int], phrases: dict[int, list[int]]
) -> dict[int, int]:
    """Check every governor chain at every phrase-boundary edge.

    Boundary edges are examined in the tree's level-order discovery
    order; each chain that contains a noun overwrites the phrase's
    ancestor, chains without one leave it untouched.
    """
    by_id = {n["id"]: n for n in nodes}
    owner: dict[int, int] = {}
    for center, members in phrases.items():
        for tok in members:
            owner[tok] = center
    root = next(n["id"] for n in nodes if n["head"] == 0)
    ans = {c: c for c in centers}
    for node_id in _discovery_order(nodes, root):
        node = by_id[node_id]
        if node["head"] == 0:
            continue
        if owner[node_id] == owner[node["head"]]:
            continue
        cursor = node["head"]
        while cursor != 0:
            if by_id[cursor]["upos"] in NOUNISH:
                ans[owner[node_id]] = owner[cursor]
                break
            cursor = by_id[cursor]["head"]
    return ans


def classify_defects(
    centers: list[int],
    phrase_scores: dict[int, float],
    noun_scores: dict[int, float],
    ancestors: dict[int, int],
    a_bound: float,
) -> list[dict]:
    """Per phrase: missing noun first, weak modifiers second, else nothing."""
    defects = []
    for center in centers:
        if noun_scores[center] < a_bound:
            defects.append({"noun_id": center, "kind": "noun_unmatched", "target": ancestors[center]})
        elif phrase_scores[center] < noun_scores[center]:
            defects.append({"noun_id": center, "kind": "adj_unmatched", "target": center})
    return defects


def merge_maps(maps: list[list[list[float]]], height: int, width: int) -> list[list[float]]:
    merged = [[1.0 for _ in range(width)] for _ in range(height)]
    for values in maps:
        for i in range(height):
            for j in range(width):
                merged[i][j] *= values[i][j]
    return merged


def emphasized_prompt(prompt: str, phrase_texts: list[str], weight: float = 1.1) -> str:
    return prompt + "".join(f" ({text}:{weight:g})" for text in phrase_texts)


# ---------------------------------------------------------------------------
# mask + plan arithmetic

def minmax_normalize(values: list[list[float]]) -> list[list[float]]:
    flat = [v for row in values for v in row]
    lo = min(flat)
    hi = max(flat)
    if hi - lo <= 1e-12 * max(1.0, abs(hi), abs(lo)):
        return [[0.5 for _ in row] for row in values]
    return [[(v - lo) / (hi - lo) for v in row] for row in values]


def build_mask(
    perceptual: list[list[float]],
    aligned: list[list[float]] | None,
    fired: bool,
    tau: float,
) -> list[list[int]]:
    p_norm = minmax_normalize(perceptual)
    if fired:
        a_eff = minmax_normalize(aligned)
    else:
        a_eff = [[0.0 for _ in row] for row in perceptual]
    mask = []
    for p_row, a_row in zip(p_norm, a_eff):
        mask.append([
            1 if min(max(1.0 - p + a, 0.0), 1.0) >= tau else 0
            for p, a in zip(p_row, a_row)
        ])
    return mask


def stage_strengths(p: float, a: float, delta: float, orientation: str) -> tuple[float, float]:
    base = (p + a) / 2.0
    first = base if orientation == "literal" else 1.0 - base
    return first, delta


def stage_steps(total: int) -> tuple[int, int]:
    first = total // 2
    return first, total - first
