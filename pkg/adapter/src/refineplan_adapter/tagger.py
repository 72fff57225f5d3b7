"""Heuristic CoNLL-U emission for free-text prompts.

Prompts fed to image generators are short noun-phrase chains, so a small
closed-class lexicon plus noun-attachment heads covers them well enough
to drive phrase segmentation. Any real dependency parser can substitute
its output; the engine only consumes the CoNLL-U file.
"""

from __future__ import annotations

from .encoder import tokenize

DETERMINERS = {"a", "an", "the", "this", "that", "these", "those", "my", "your", "its"}
ADPOSITIONS = {
    "on", "in", "at", "of", "under", "over", "with", "without", "near", "by",
    "from", "to", "above", "below", "behind", "beside", "inside", "outside",
}
CONJUNCTIONS = {"and", "or", "but", "nor"}
PRONOUNS = {"it", "he", "she", "they", "we", "i", "you"}
VERBS = {
    "is", "are", "was", "were", "be", "being", "sitting", "standing", "running",
    "flying", "wearing", "holding", "looking", "glowing", "preparing", "enjoying",
}
ADVERB_SUFFIX = "ly"
ADJECTIVE_SUFFIXES = ("ous", "ful", "ish", "ive", "ed", "en", "al", "ic", "less")
ADJECTIVES = {
    "red", "blue", "green", "yellow", "black", "white", "wooden", "metal",
    "small", "large", "big", "tiny", "old", "young", "bright", "dark",
    "fluffy", "shiny", "soft", "rough", "happy", "sad",
}


def tag_word(word: str, original: str, position: int) -> str:
    if word.isdigit():
        return "NUM"
    if word in DETERMINERS:
        return "DET"
    if word in ADPOSITIONS:
        return "ADP"
    if word in CONJUNCTIONS:
        return "CCONJ"
    if word in PRONOUNS:
        return "PRON"
    if word in VERBS:
        return "VERB"
    if word in ADJECTIVES:
        return "ADJ"
    if word.endswith(ADVERB_SUFFIX):
        return "ADV"
    if word.endswith(ADJECTIVE_SUFFIXES):
        return "ADJ"
    if position > 0 and original[:1].isupper():
        return "PROPN"
    return "NOUN"


def parse_prompt(prompt: str) -> list[dict]:
    """Token dicts {id, form, upos, head} with noun-attachment heads."""
    originals = [w for w in prompt.split() if any(c.isalnum() for c in w)]
    forms = tokenize(prompt)
    if len(originals) != len(forms):  # punctuation-only splits: fall back to forms
        originals = forms
    tags = [tag_word(form, orig, pos) for pos, (form, orig) in enumerate(zip(forms, originals))]
    n = len(forms)
    noun_positions = [i for i, tag in enumerate(tags) if tag in ("NOUN", "PROPN")]

    heads = [0] * n
    if not noun_positions:
        for i in range(1, n):
            heads[i] = 1  # everything hangs off the first token
    else:
        root = noun_positions[0]
        for i in range(n):
            if i == root:
                heads[i] = 0
            elif tags[i] in ("NOUN", "PROPN"):
                prev = max(p for p in noun_positions if p < i)
                heads[i] = prev + 1
            else:
                following = [p for p in noun_positions if p > i]
                target = following[0] if following else max(p for p in noun_positions if p < i)
                heads[i] = target + 1

    deprel = {"DET": "det", "ADJ": "amod", "ADP": "case", "CCONJ": "cc", "ADV": "advmod"}
    nodes = []
    for i in range(n):
        rel = "root" if heads[i] == 0 else deprel.get(tags[i], "nmod" if tags[i] in ("NOUN", "PROPN") else "dep")
        nodes.append({"id": i + 1, "form": forms[i], "upos": tags[i], "head": heads[i], "deprel": rel})
    return nodes


def to_conllu(prompt: str, nodes: list[dict] | None = None) -> str:
    nodes = parse_prompt(prompt) if nodes is None else nodes
    lines = [f"# text = {prompt}"]
    for node in nodes:
        lines.append(
            "\t".join(
                [
                    str(node["id"]),
                    node["form"],
                    node["form"],
                    node["upos"],
                    "_",
                    "_",
                    str(node["head"]),
                    node.get("deprel", "dep"),
                    "_",
                    "_",
                ]
            )
        )
    return "\n".join(lines) + "\n"
