"""Write the 100-sentence keyword augmentation fixture from the bundled corpus.

usage: python scripts/make_keyword_fixture.py [--start 1000]
"""

import argparse
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "fixtures" / "keyword"

# below target, above target, multi-token, co-occurring and absent keywords
SPEC = [
    ("jacob", 30),
    ("duke", 12),
    ("reigned", 25),
    ("esau", 6),
    ("the land", 20),
    ("land", 18),
    ("pharaoh", 3),
    ("eliphaz", 40),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--start", type=int, default=1000, help="first corpus line (0-based)")
    args = ap.parse_args()
    with open(ROOT / "data" / "kjv" / "corpus.txt", encoding="utf-8") as f:
        lines = f.read().splitlines()[args.start:args.start + 100]
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "corpus.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (OUT / "spec.tsv").write_text("".join(f"{k}\t{t}\n" for k, t in SPEC), encoding="utf-8")
    print(f"wrote {len(lines)} sentences and {len(SPEC)} keywords to {OUT}")


if __name__ == "__main__":
    main()
