"""Lexicon loading, sentence filtering and forward-maximum-matching segmentation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    """Closed vocabulary used for filtering and segmentation.

    ``chars`` is the set of characters appearing in any entry; it drives
    :func:`filter_sentence`.
    """

    words: frozenset
    max_word_len: int = field(init=False)
    chars: frozenset = field(init=False, repr=False, compare=False)
    n_duplicates: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.words:
            raise LexiconError("empty lexicon")
        for w in self.words:
            if not w or any(c.isspace() for c in w):
                raise LexiconError(f"invalid lexicon entry {w!r}")
        object.__setattr__(self, "max_word_len", max(len(w) for w in self.words))
        object.__setattr__(self, "chars", frozenset("".join(self.words)))

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Lexicon":
        return cls(frozenset(words))

    def __contains__(self, word):
        return word in self.words

    def __len__(self):
        return len(self.words)


def load_lexicon(path, column_mode: str = "word-only") -> Lexicon:
    """Read a lexicon file, one entry per line.

    In ``word+pronunciation`` mode only the first whitespace-delimited field
    of each line is kept. Blank lines are skipped; duplicates are collapsed
    and counted in ``Lexicon.n_duplicates``.
    """
    if column_mode not in ("word-only", "word+pronunciation"):
        raise ValueError(f"unknown column_mode {column_mode!r}")
    raw = Path(path).read_bytes()
    words = set()
    n_entries = 0
    for lineno, line in enumerate(raw.splitlines(), 1):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LexiconError(f"{path}:{lineno}: undecodable bytes ({exc.reason})") from None
        if column_mode == "word+pronunciation":
            fields = text.split()
            if not fields:
                continue
            entry = fields[0]
        else:
            entry = text.strip()
            if not entry:
                continue
            if any(c.isspace() for c in entry):
                raise LexiconError(f"{path}:{lineno}: entry contains whitespace")
        n_entries += 1
        words.add(entry)
    if not words:
        raise LexiconError("empty lexicon")
    return Lexicon(frozenset(words), n_duplicates=n_entries - len(words))


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str | None = None

    def __bool__(self):
        return self.keep


def filter_sentence(raw: str, lexicon: Lexicon) -> FilterDecision:
    """Drop a sentence iff it contains a character covered by no lexicon entry.

    Whitespace is a segment boundary and never causes a drop.
    """
    chars = lexicon.chars
    for c in raw:
        if c not in chars and not c.isspace():
            return FilterDecision(False, c)
    return FilterDecision(True)


def segment_fmm(raw: str, lexicon: Lexicon) -> list[str]:
    """Segment ``raw`` by forward maximum matching against ``lexicon``.

    Whitespace splits the input into independent chunks. Within a chunk the
    longest entry matching at the current position is emitted; when nothing
    matches, one character is consumed and emitted as ``<unk>``.
    """
    words = lexicon.words
    max_len = lexicon.max_word_len
    tokens = []
    for chunk in raw.split():
        pos, n = 0, len(chunk)
        while pos < n:
            for size in range(min(max_len, n - pos), 0, -1):
                piece = chunk[pos:pos + size]
                if piece in words:
                    tokens.append(piece)
                    pos += size
                    break
            else:
                tokens.append(UNK)
                pos += 1
    return tokens


def read_sentences(paths: Iterable, lexicon: Lexicon | None = None,
                   stats: dict | None = None) -> Iterator[list[str]]:
    """Yield token lists from UTF-8 corpus files, one sentence per line.

    Without a lexicon, lines are treated as pre-tokenized (whitespace split).
    With one, each line is filtered and then segmented; ``stats`` (if given)
    accumulates ``kept``/``dropped`` counts.
    """
    for path in paths:
        with open(path, encoding="utf-8") as f:
            for line in f:
                if lexicon is None:
                    yield line.split()
                    continue
                if not filter_sentence(line, lexicon):
                    if stats is not None:
                        stats["dropped"] = stats.get("dropped", 0) + 1
                    continue
                if stats is not None:
                    stats["kept"] = stats.get("kept", 0) + 1
                yield segment_fmm(line, lexicon)
