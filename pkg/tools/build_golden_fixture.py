"""Build the committed 20-instance golden fixture under tests/data/golden/.

Construction (all vectors live in an abstract dim-64 space, drawn from the
deterministic synthetic encoder and then orthogonalized per instance):

* each target has sense directions s_1..s_m and a residual direction z that
  dominates the raw context vector: c = sqrt(1-EPS^2)*z + EPS*s_correct.
* the joint text of sense k embeds exactly at s_k.
* candidate images: the gold image is a noisy copy of the correct sense's
  joint-text vector; one "literal match" distractor is a noisy copy of z
  (so context-only scoring prefers it); wrong-sense distractors are noisy
  copies of the wrong senses; the rest are random unit vectors.

With these parameters the definition-marginalized pathway ranks the gold
image first on every in-vocabulary instance while context-only scoring
prefers the literal distractor, which is the behavior the end-to-end golden
test freezes. Two targets are left out of the inventory to exercise the
baseline fallback path.

Run from the repository root:

    python tools/build_golden_fixture.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from glossrank.cli import main as cli_main  # noqa: E402
from glossrank.providers import EmbeddingStore, SyntheticEncoder, write_store  # noqa: E402
from glossrank.scoring import Kind, build_joint_text  # noqa: E402

OUT_DIR = ROOT / "tests" / "data" / "golden"

SEED = 7021
DIM = 64
EPS = 0.6  # weight of the correct-sense direction inside the context vector
NU = 0.3  # image noise level
LOGIT_SCALE = 2.5
N_AMBIGUOUS = 16  # 3 senses each
N_TRIVIAL = 2  # 1 sense each
N_OOV = 2  # absent from the inventory
N_CANDIDATES = 10

TARGETS = [
    "balter", "crinet", "dorrel", "fentic", "gavot", "harnel", "imbrix",
    "jontle", "kervan", "lompre", "marvet", "norrip", "ostrel", "pindor",
    "quenzo", "rastel", "sorbin", "tarnok", "umbrel", "velbor",
]
CUES = [
    "field", "market", "harbor", "forest", "engine", "garden", "temple",
    "canyon", "stadium", "museum", "valley", "workshop", "island", "bridge",
    "orchard", "quarry", "lantern", "meadow", "tunnel", "summit",
]
SENSE_NOUNS = ["tool", "plant", "vessel", "garment", "mineral", "dwelling"]


def orthonormalize(vectors: list[np.ndarray]) -> list[np.ndarray]:
    """Gram-Schmidt; inputs are near-orthogonal random unit vectors."""
    basis: list[np.ndarray] = []
    for v in vectors:
        w = v.copy()
        for b in basis:
            w -= (w @ b) * b
        w /= np.linalg.norm(w)
        basis.append(w)
    return basis


def build() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    enc = SyntheticEncoder(seed=SEED, dim=DIM)
    rng = np.random.default_rng(SEED)

    store = EmbeddingStore(dim=DIM, logit_scale=LOGIT_SCALE)
    data_lines: list[str] = []
    gold_lines: list[str] = []
    inventory_lines: list[str] = []

    for idx, target in enumerate(TARGETS):
        inst_id = f"g{idx:03d}"
        context = f"{target} {CUES[idx]}"
        if idx < N_AMBIGUOUS:
            n_senses = 3
        elif idx < N_AMBIGUOUS + N_TRIVIAL:
            n_senses = 1
        else:
            n_senses = 0  # OOV: senses exist in the world, not in the inventory

        definitions = [
            f"a {SENSE_NOUNS[(idx + k) % len(SENSE_NOUNS)]} kept near the {CUES[(idx + k + 1) % len(CUES)]}"
            for k in range(max(n_senses, 1))
        ]
        raw = [enc.get_text(f"{inst_id}/dir/sense{k}").vec for k in range(len(definitions))]
        raw.append(enc.get_text(f"{inst_id}/dir/residual").vec)
        *sense_dirs, z = orthonormalize(raw)

        correct = idx % len(sense_dirs)
        context_vec = np.sqrt(1.0 - EPS**2) * z + EPS * sense_dirs[correct]
        context_vec /= np.linalg.norm(context_vec)
        store.add(Kind.TEXT, context, context_vec)

        if n_senses > 0:
            for k, definition in enumerate(definitions):
                inventory_lines.append(f"{target}\tn\t{definition}")
                store.add(Kind.TEXT, build_joint_text(context, definition), sense_dirs[k])

        def noisy(base: np.ndarray, tag: str) -> np.ndarray:
            noise = enc.get_image(f"{inst_id}/noise/{tag}").vec
            v = base + NU * noise
            return v / np.linalg.norm(v)

        images: list[tuple[str, np.ndarray]] = [
            (f"{inst_id}.gold.jpg", noisy(sense_dirs[correct], "gold")),
            (f"{inst_id}.literal.jpg", noisy(z, "literal")),
        ]
        for j, k in enumerate(k for k in range(len(sense_dirs)) if k != correct):
            images.append((f"{inst_id}.wrong{j}.jpg", noisy(sense_dirs[k], f"wrong{j}")))
        filler = 0
        while len(images) < N_CANDIDATES:
            images.append(
                (f"{inst_id}.rand{filler}.jpg",
                 enc.get_image(f"{inst_id}/filler/{filler}").vec)
            )
            filler += 1

        rng.shuffle(images)
        for key, vec in images:
            store.add(Kind.IMAGE, key, vec)
        candidates = "\t".join(key for key, _ in images)
        data_lines.append(f"{inst_id}\t{target}\t{context}\t{candidates}")
        gold_lines.append(f"{inst_id}.gold.jpg")

    (OUT_DIR / "dataset.tsv").write_text("\n".join(data_lines) + "\n", encoding="utf-8")
    (OUT_DIR / "gold.txt").write_text("\n".join(gold_lines) + "\n", encoding="utf-8")
    (OUT_DIR / "inventory.tsv").write_text(
        "\n".join(inventory_lines) + "\n", encoding="utf-8"
    )
    write_store(store, OUT_DIR / "vectors.store")

    # freeze the two reports the acceptance test byte-compares (paths relative
    # to the repository root, which is also where the test runs the CLI)
    rel = OUT_DIR.relative_to(ROOT)
    common = [
        "--data", str(rel / "dataset.tsv"),
        "--gold", str(rel / "gold.txt"),
        "--store", str(rel / "vectors.store"),
        "--inventory", str(rel / "inventory.tsv"),
    ]
    import os

    os.chdir(ROOT)
    cli_main(
        ["evaluate", *common, "--mode", "none", "--scoring", "baseline",
         "--out", str(rel / "report_baseline.json")]
    )
    cli_main(
        ["evaluate", *common, "--mode", "wn", "--scoring", "marginal",
         "--out", str(rel / "report_marginal.json")]
    )


if __name__ == "__main__":
    build()
