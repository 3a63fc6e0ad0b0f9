"""Build the bundled end-to-end corpus from the King James Bible.

The source is the public-domain KJV text shipped inside the
``pythonbible-kjv`` wheel (``pythonbible_kjv/plain_text_bible.py``)::

    pip download --no-deps pythonbible-kjv -d /tmp/kjv
    python -m zipfile -e /tmp/kjv/pythonbible_kjv-*.whl /tmp/kjv/x
    python scripts/prepare_kjv.py /tmp/kjv/x/pythonbible_kjv/plain_text_bible.py data/kjv

Writes ``corpus.txt`` (one verse per line, lowercased, punctuation still
attached to words so that segmentation has real work to do) and
``lexicon.txt`` (every word and punctuation mark, one per line).
"""

import argparse
import re
from pathlib import Path

VERSE_SPLIT = re.compile(r"(?:^|\s)\d+\.\s")
TOKEN = re.compile(r"[a-z'\-]+|[.,;:!?]")
ALLOWED = re.compile(r"[^a-z'\-.,;:!? ]")


def verses(source_text):
    start = source_text.index('"""') + 3
    end = source_text.index('"""', start)
    body = source_text[start:end]
    for chunk in VERSE_SPLIT.split(body):
        line = chunk.replace("[", "").replace("]", "").lower()
        line = ALLOWED.sub("", " ".join(line.split()))
        if line:
            yield line


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", type=Path)
    parser.add_argument("outdir", type=Path)
    args = parser.parse_args()

    lines = list(verses(args.source.read_text(encoding="utf-8")))
    vocab = set()
    for line in lines:
        vocab.update(TOKEN.findall(line))
    args.outdir.mkdir(parents=True, exist_ok=True)
    (args.outdir / "corpus.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (args.outdir / "lexicon.txt").write_text(
        "\n".join(sorted(vocab)) + "\n", encoding="utf-8"
    )
    n_tokens = sum(len(TOKEN.findall(line)) for line in lines)
    print(f"{len(lines)} verses, {n_tokens} tokens, {len(vocab)} lexicon entries")


if __name__ == "__main__":
    main()
