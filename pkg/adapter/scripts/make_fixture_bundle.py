"""Build the committed end-to-end fixture bundle for the engine suite.

Constructs a synthetic 7x7-patch token matrix with three regions (a
degraded corner, a "cat" region, a clean background), a quality text
bank whose technical-defect axis points at the degraded corner, and
phrase embeddings engineered so the prompt "a red cat on a wooden
table" yields one adj-unmatched defect (cat) and one noun-unmatched
defect (table). Expected scores, defects, and the stage-1 mask are then
computed with the pure-Python reference evaluators and frozen next to
the input files.

Everything is derived from fixed seeds; re-running reproduces the same
bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from refineplan_adapter import oracle
from refineplan_adapter.grt import write_grt

DIM = 512
GRID = 7
MAP_SIZE = 224
TAU = 0.6
DELTA = 0.05
TOTAL_STEPS = 20
A_BOUND = 0.5
BETA = 0.5
ALPHA = [0.5, 0.5, 0.5]

PROMPT = "a red cat on a wooden table"

CONLLU = """\
# text = a red cat on a wooden table
1\ta\ta\tDET\tDT\t_\t3\tdet\t_\t_
2\tred\tred\tADJ\tJJ\t_\t3\tamod\t_\t_
3\tcat\tcat\tNOUN\tNN\t_\t0\troot\t_\t_
4\ton\ton\tADP\tIN\t_\t7\tcase\t_\t_
5\ta\ta\tDET\tDT\t_\t7\tdet\t_\t_
6\twooden\twooden\tADJ\tJJ\t_\t7\tamod\t_\t_
7\ttable\ttable\tNOUN\tNN\t_\t3\tnmod\t_\t_
"""

SIDECAR = {
    "prompt": PROMPT,
    "phrases": [
        {"noun_id": 3, "text": "a red cat", "noun_text": "cat"},
        {"noun_id": 7, "text": "on a wooden table", "noun_text": "table"},
    ],
}


def orthonormal_basis(rng: np.random.Generator, count: int) -> np.ndarray:
    raw = rng.standard_normal((DIM, count))
    q, _ = np.linalg.qr(raw)
    return q.T[:count]


def complement_noise(rng: np.random.Generator, basis: np.ndarray, scale: float) -> np.ndarray:
    vec = rng.standard_normal(DIM)
    vec -= basis.T @ (basis @ vec)
    return scale * vec / np.linalg.norm(vec)


def unit_mix(basis_vec: np.ndarray, coeff: float, filler: np.ndarray) -> np.ndarray:
    """coeff along basis_vec, the rest of the unit budget along filler."""
    rest = np.sqrt(max(0.0, 1.0 - coeff**2))
    return coeff * basis_vec + rest * filler


def f32(arr: np.ndarray) -> list:
    return np.asarray(arr, dtype=np.float32).astype(np.float64).tolist()


def build_bundle(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(61258402)

    # e indices: 0 good, 1 bad, 2 cat, 3 global-token axis, 4..8 text fillers
    basis = orthonormal_basis(rng, 9)
    e_good, e_bad, e_cat, e_t0 = basis[0], basis[1], basis[2], basis[3]
    e_x, e_y, e_z, e_r, e_n = basis[4], basis[5], basis[6], basis[7], basis[8]

    tokens = np.empty((1 + GRID * GRID, DIM))
    tokens[0] = e_t0
    for row in range(GRID):
        for col in range(GRID):
            if row < 3 and col < 3:
                anchor = e_bad
            elif col >= 4:
                anchor = e_cat
            else:
                anchor = e_good
            tokens[1 + row * GRID + col] = anchor + complement_noise(rng, basis, 0.15)

    # bank directions: overall favors clean+cat regions and the global token,
    # technical points away from the degraded corner, the other two are inert
    d_overall = 0.4 * e_t0 + e_good + 0.5 * e_cat
    d_tech = -e_bad
    d_rat = e_r
    d_nat = e_n
    bank = np.empty((8, DIM))
    for i, direction in enumerate((d_overall, d_tech, d_rat, d_nat)):
        base = rng.standard_normal(DIM)
        base /= np.linalg.norm(base)
        bank[2 * i] = base + 0.5 * direction
        bank[2 * i + 1] = base - 0.5 * direction

    # text embeddings: cosines against the global token are the coefficients
    # on e_t0 (spatial tokens carry no e_t0 or filler components)
    empty = unit_mix(e_t0, 0.30, e_x)
    full_prompt = unit_mix(e_t0, 0.60, e_y)
    phs_cat = unit_mix(e_t0, 0.35, e_z)
    phs_table = unit_mix(e_t0, 0.10, e_x)
    n_cat = 0.50 * e_t0 + 0.60 * e_cat + np.sqrt(1 - 0.25 - 0.36) * e_y
    n_table = unit_mix(e_t0, 0.00, e_z)
    phrase_tensor = np.stack([full_prompt, empty, phs_cat, phs_table, n_cat, n_table])

    # a separate raw value matrix exercises the attention rewrite; larger row
    # norms keep the row softmax from washing out to uniform
    value_matrix = 3.0 * rng.standard_normal((1 + GRID * GRID, DIM))

    write_grt(out_dir / "image_tokens.grt", f32(tokens))
    write_grt(out_dir / "bank.grt", f32(bank))
    write_grt(out_dir / "phrases.grt", f32(phrase_tensor))
    write_grt(out_dir / "value_matrix.grt", f32(value_matrix))
    (out_dir / "prompt.conllu").write_text(CONLLU, encoding="utf-8")
    (out_dir / "phrases.grt.json").write_text(
        json.dumps(SIDECAR, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    golden = compute_golden(
        f32(tokens), f32(bank), f32(phrase_tensor), f32(value_matrix), out_dir
    )
    (out_dir / "golden.json").write_text(
        json.dumps(golden, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"bundle written to {out_dir}")
    print(f"  p={golden['p']:.6f} a={golden['a']:.6f}")
    print(f"  defects={golden['defects']}")
    print(f"  mask ones={golden['mask_ones']}/{MAP_SIZE * MAP_SIZE}")
    print(f"  min |fused - tau| = {golden['mask_margin']:.3e}")


def upsampled_unit_map(per_token: list[float]) -> list[list[float]]:
    grid = [per_token[1 + r * GRID : 1 + (r + 1) * GRID] for r in range(GRID)]
    return oracle.clamp01(oracle.bicubic_resample(grid, MAP_SIZE, MAP_SIZE))


def compute_golden(tokens, bank, phrase_tensor, value_matrix, out_dir: Path) -> dict:
    full_prompt, empty, phs_cat, phs_table, n_cat, n_table = phrase_tensor

    raw = oracle.raw_logits(tokens, bank)
    combined = oracle.cask_combine(raw, ALPHA)
    p_score = combined[0]
    p_map = upsampled_unit_map(combined)

    phrase_vals = {3: oracle.two_way_softmax(tokens, phs_cat, empty),
                   7: oracle.two_way_softmax(tokens, phs_table, empty)}
    noun_vals = {3: oracle.two_way_softmax(tokens, n_cat, empty),
                 7: oracle.two_way_softmax(tokens, n_table, empty)}
    phrase_scores = {c: vals[0] for c, vals in phrase_vals.items()}
    noun_scores = {c: vals[0] for c, vals in noun_vals.items()}

    ancestors = {3: 3, 7: 3}  # hand trace of the fixture tree
    defects = oracle.classify_defects([3, 7], phrase_scores, noun_scores, ancestors, A_BOUND)

    noun_maps = {c: upsampled_unit_map(vals) for c, vals in noun_vals.items()}
    merged = oracle.merge_maps([noun_maps[d["target"]] for d in defects], MAP_SIZE, MAP_SIZE)
    fired = bool(defects)

    global_sim = (oracle.cosine(tokens[0], full_prompt) + 1.0) / 2.0
    a_score = oracle.alignment_score(global_sim, [phrase_scores[3], phrase_scores[7]], BETA)

    mask = oracle.build_mask(p_map, merged if fired else None, fired, TAU)
    p_norm = oracle.minmax_normalize(p_map)
    a_eff = oracle.minmax_normalize(merged) if fired else [[0.0] * MAP_SIZE] * MAP_SIZE
    margin = min(
        abs(min(max(1.0 - p + a, 0.0), 1.0) - TAU)
        for p_row, a_row in zip(p_norm, a_eff)
        for p, a in zip(p_row, a_row)
    )
    if margin < 1e-9:
        raise RuntimeError(f"fused map grazes tau (margin {margin}); reseed the bundle")

    mask_bytes = bytes(v for row in mask for v in row)
    emphasized_texts = []
    for defect in sorted(defects, key=lambda d: d["noun_id"]):
        phrase = next(p for p in SIDECAR["phrases"] if p["noun_id"] == defect["noun_id"])
        emphasized_texts.append(phrase["text"])

    strength1, strength2 = oracle.stage_strengths(p_score, a_score, DELTA, "literal")
    steps1, steps2 = oracle.stage_steps(TOTAL_STEPS)

    write_grt(out_dir / "vvv_expected.grt", oracle.vvv_attention(value_matrix))

    return {
        "map_size": MAP_SIZE,
        "alpha": ALPHA,
        "a_bound": A_BOUND,
        "beta": BETA,
        "tau": TAU,
        "delta": DELTA,
        "total_steps": TOTAL_STEPS,
        "p": p_score,
        "a": a_score,
        "global_similarity": global_sim,
        "phrases": [
            {"noun_id": 3, "a_phs": phrase_scores[3], "a_pns": noun_scores[3]},
            {"noun_id": 7, "a_phs": phrase_scores[7], "a_pns": noun_scores[7]},
        ],
        "defects": defects,
        "fired": fired,
        "emphasized_prompt": oracle.emphasized_prompt(PROMPT, emphasized_texts),
        "stage1_strength": strength1,
        "stage2_strength": strength2,
        "steps": [steps1, steps2],
        "mask_ones": sum(v for row in mask for v in row),
        "mask_sha256": hashlib.sha256(mask_bytes).hexdigest(),
        "mask_margin": margin,
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "bundle",
    )
    args = parser.parse_args()
    build_bundle(args.out_dir)


if __name__ == "__main__":
    main()
