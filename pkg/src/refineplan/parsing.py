"""Dependency-parse ingestion and noun-centered phrase segmentation.

Prompts arrive as CoNLL-U dependency parses. Every noun (NOUN/PROPN)
anchors a phrase; each remaining token joins the phrase of its nearest
noun, measured in undirected tree hops. A breadth-first pass over the
tree then assigns each phrase an ancestor: the first noun found on the
governor chain wherever an edge crosses a phrase boundary.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import ConlluParseError

NOUN_TAGS = frozenset({"NOUN", "PROPN"})

_CONLLU_COLUMNS = 10


@dataclass(frozen=True)
class TokenNode:
    """One syntactic token: 1-based id, surface form, UPOS tag, governor id."""

    id: int
    form: str
    upos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class SyntaxTree:
    nodes: tuple[TokenNode, ...]

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if ids != list(range(1, len(ids) + 1)):
            raise ConlluParseError(f"token ids must be contiguous from 1, got {ids}")
        roots = [n.id for n in self.nodes if n.head == 0]
        if len(roots) != 1:
            raise ConlluParseError(f"expected exactly one root, got {len(roots)}")
        for n in self.nodes:
            if n.head != 0 and not (1 <= n.head <= len(ids)):
                raise ConlluParseError(f"token {n.id} has out-of-range head {n.head}")
        # acyclicity: every node must reach the root along the head chain
        for n in self.nodes:
            seen = set()
            cur = n
            while cur.head != 0:
                if cur.id in seen:
                    raise ConlluParseError(f"head cycle involving token {n.id}")
                seen.add(cur.id)
                cur = self.nodes[cur.head - 1]

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, token_id: int) -> TokenNode:
        return self.nodes[token_id - 1]

    @property
    def root(self) -> TokenNode:
        return next(n for n in self.nodes if n.head == 0)

    def children(self, token_id: int) -> list[TokenNode]:
        return [n for n in self.nodes if n.head == token_id]

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            if n.head != 0:
                adj[n.id].append(n.head)
                adj[n.head].append(n.id)
        return adj


@dataclass(frozen=True)
class PhraseSegmentation:
    """Noun centers, their member tokens, and (optionally) phrase ancestors.

    ``fallback_root`` marks the degenerate zero-noun case where the whole
    prompt becomes one pseudo-phrase centered on the syntactic root.
    """

    centers: tuple[int, ...]
    phrases: dict[int, tuple[int, ...]]
    fallback_root: bool = False
    ancestors: dict[int, int] | None = field(default=None, compare=False)

    def phrase_of(self) -> dict[int, int]:
        """Token id -> owning phrase center id."""
        owner: dict[int, int] = {}
        for center, members in self.phrases.items():
            for tok in members:
                owner[tok] = center
        return owner

    def phrase_text(self, tree: SyntaxTree, center: int) -> str:
        return " ".join(tree.node(t).form for t in self.phrases[center])


def _parse_token_line(line: str, lineno: int) -> TokenNode | None:
    columns = line.split("\t")
    if len(columns) != _CONLLU_COLUMNS:
        raise ConlluParseError(
            f"expected {_CONLLU_COLUMNS} tab-separated columns, got {len(columns)}", lineno
        )
    token_id = columns[0]
    if "-" in token_id or "." in token_id:
        return None  # multiword ranges and empty nodes carry no tree structure
    try:
        tid = int(token_id)
    except ValueError:
        raise ConlluParseError(f"bad token id {token_id!r}", lineno) from None
    try:
        head = int(columns[6])
    except ValueError:
        raise ConlluParseError(f"bad head {columns[6]!r}", lineno) from None
    return TokenNode(id=tid, form=columns[1], upos=columns[3], head=head, deprel=columns[7])


def parse_conllu(text: str, merge_sentences: bool = False) -> SyntaxTree:
    """Parse CoNLL-U text into a validated syntax tree.

    Only the first sentence is used unless ``merge_sentences`` is set, in
    which case later sentences are renumbered and their roots re-attached
    under the first sentence's root (deprel ``parataxis``).
    """
    sentences: list[list[TokenNode]] = []
    current: list[TokenNode] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.rstrip("\r\n")
        if not stripped.strip():
            if current:
                sentences.append(current)
                current = []
            continue
        if stripped.startswith("#"):
            continue
        node = _parse_token_line(stripped, lineno)
        if node is not None:
            current.append(node)
    if current:
        sentences.append(current)
    if not sentences:
        raise ConlluParseError("no token lines found")

    if not merge_sentences or len(sentences) == 1:
        return SyntaxTree(tuple(sentences[0]))

    merged: list[TokenNode] = list(sentences[0])
    first_root = next((n.id for n in merged if n.head == 0), None)
    if first_root is None:
        raise ConlluParseError("first sentence has no root")
    offset = len(merged)
    for extra in sentences[1:]:
        for n in extra:
            head = first_root if n.head == 0 else n.head + offset
            deprel = "parataxis" if n.head == 0 else n.deprel
            merged.append(TokenNode(n.id + offset, n.form, n.upos, head, deprel))
        offset = len(merged)
    return SyntaxTree(tuple(merged))


def _hop_distances(adj: dict[int, list[int]], start: int) -> dict[int, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in adj[cur]:
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def segment_phrases(tree: SyntaxTree) -> PhraseSegmentation:
    """Split the prompt into noun-centered phrases.

    Non-noun tokens join the nearest noun by undirected tree distance;
    ties go to the smaller token-index gap, then the lower noun id. A
    prompt without any noun degenerates to one pseudo-phrase centered on
    the syntactic root.
    """
    centers = tuple(n.id for n in tree.nodes if n.upos in NOUN_TAGS)
    if not centers:
        root = tree.root.id
        members = tuple(n.id for n in tree.nodes)
        return PhraseSegmentation(centers=(root,), phrases={root: members}, fallback_root=True)

    adj = tree.adjacency()
    dist_from = {c: _hop_distances(adj, c) for c in centers}
    assigned: dict[int, list[int]] = {c: [] for c in centers}
    for node in tree.nodes:
        best = min(centers, key=lambda c: (dist_from[c][node.id], abs(node.id - c), c))
        assigned[best].append(node.id)
    phrases = {c: tuple(sorted(members)) for c, members in assigned.items()}
    return PhraseSegmentation(centers=centers, phrases=phrases)


def phrase_ancestors(tree: SyntaxTree, seg: PhraseSegmentation) -> dict[int, int]:
    """Assign each phrase the first noun phrase found above a boundary edge.

    Breadth-first from the root (children in ascending token id, FIFO
    queue): whenever an edge crosses from one phrase into another, walk
    the child's governor chain upward starting at its immediate governor
    and record the phrase of the first NOUN/PROPN hit. Later crossings
    overwrite earlier ones; a chain without any noun leaves the phrase
    its own ancestor.
    """
    phrase_of = seg.phrase_of()
    ans = {c: c for c in seg.centers}
    queue = deque([tree.root])
    while queue:
        governor = queue.popleft()
        for child in sorted(tree.children(governor.id), key=lambda n: n.id):
            queue.append(child)
            if phrase_of[child.id] == phrase_of[governor.id]:
                continue
            cursor: TokenNode | None = governor
            while cursor is not None:
                if cursor.upos in NOUN_TAGS:
                    ans[phrase_of[child.id]] = phrase_of[cursor.id]
                    break
                cursor = tree.node(cursor.head) if cursor.head != 0 else None
    return ans
