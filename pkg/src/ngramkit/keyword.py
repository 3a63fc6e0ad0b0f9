"""Keyword frequency adjustment by sentence duplication and removal."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

DEFAULT_MAX_DUP = 20


@dataclass(frozen=True)
class KeywordSpec:
    """Keywords (token tuples) with the occurrence count each should reach."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((tuple(k), int(t)) for k, t in self.entries)
        seen = set()
        for kw, target in entries:
            if not kw or any(not tok for tok in kw):
                raise ValueError("empty keyword")
            if target < 1:
                raise ValueError(f"target count for {' '.join(kw)!r} must be positive")
            if kw in seen:
                raise ValueError(f"duplicate keyword {' '.join(kw)!r}")
            seen.add(kw)
        if not entries:
            raise ValueError("keyword spec is empty")
        object.__setattr__(self, "entries", entries)

    @property
    def keywords(self) -> list:
        return [kw for kw, _ in self.entries]


def load_keyword_spec(path) -> KeywordSpec:
    """Read ``keyword<TAB>target_count`` lines; a keyword may span several tokens."""
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                kw, target = line.split("\t")
                entries.append((tuple(kw.split()), int(target)))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'keyword<TAB>count'") from None
    return KeywordSpec(tuple(entries))


def occurrences(sentence, keyword: tuple) -> int:
    """Number of (possibly overlapping) positions where ``keyword`` occurs."""
    n = len(keyword)
    if n == 1:
        return sum(tok == keyword[0] for tok in sentence)
    return sum(tuple(sentence[i:i + n]) == keyword for i in range(len(sentence) - n + 1))


def count_keywords(corpus, keywords) -> dict:
    return {kw: sum(occurrences(s, kw) for s in corpus) for kw in keywords}


@dataclass
class KeywordReport:
    keyword: str
    target: int
    before: int
    after: int
    duplicated: int = 0
    removed: int = 0
    sentences_touched: int = 0
    status: str = "ok"


@dataclass
class AugmentReport:
    entries: list = field(default_factory=list)

    def __getitem__(self, keyword: str) -> KeywordReport:
        for e in self.entries:
            if e.keyword == keyword:
                return e
        raise KeyError(keyword)

    def to_json(self) -> str:
        return json.dumps([asdict(e) for e in self.entries], ensure_ascii=False)


def augment_keywords(corpus, spec: KeywordSpec, max_dup_per_sentence: int = DEFAULT_MAX_DUP):
    """Move each keyword's corpus count toward its target.

    Keywords above target lose whole sentences, shortest first; keywords
    below target gain copies of existing sentences, round-robin, never more
    than ``max_dup_per_sentence`` copies of one sentence. Only sentences
    containing exactly one spec keyword are ever copied or removed. Counts
    never overshoot the target in either direction; a keyword that cannot
    reach it is flagged ``partial`` (or ``unsatisfiable`` when no usable
    sentence exists at all). Copies are appended after the original corpus.

    Returns the new corpus and an :class:`AugmentReport`.
    """
    if max_dup_per_sentence < 0:
        raise ValueError("max_dup_per_sentence must be >= 0")
    corpus = [list(s) for s in corpus]
    keywords = spec.keywords
    occ = [{kw: c for kw in keywords if (c := occurrences(s, kw))} for s in corpus]
    before = count_keywords(corpus, keywords)
    counts = dict(before)
    removed = set()
    copies: list[int] = []
    reports = []

    for kw, target in spec.entries:
        rep = KeywordReport(" ".join(kw), target, before[kw], 0)
        usable = [i for i, o in enumerate(occ) if list(o) == [kw]]
        touched = set()
        if counts[kw] > target:
            for i in sorted(usable, key=lambda i: (len(corpus[i]), i)):
                if counts[kw] - occ[i][kw] >= target:
                    counts[kw] -= occ[i][kw]
                    removed.add(i)
                    touched.add(i)
                    rep.removed += 1
                if counts[kw] == target:
                    break
        elif counts[kw] < target:
            dup = {i: 0 for i in usable}
            progress = True
            while counts[kw] < target and progress:
                progress = False
                for i in usable:
                    if dup[i] < max_dup_per_sentence and counts[kw] + occ[i][kw] <= target:
                        dup[i] += 1
                        counts[kw] += occ[i][kw]
                        copies.append(i)
                        touched.add(i)
                        rep.duplicated += 1
                        progress = True
                        if counts[kw] == target:
                            break
        rep.sentences_touched = len(touched)
        if counts[kw] != target:
            rep.status = "unsatisfiable" if not usable else "partial"
        reports.append(rep)

    out = [s for i, s in enumerate(corpus) if i not in removed]
    out.extend(list(corpus[i]) for i in copies)
    for rep, (kw, _) in zip(reports, spec.entries):
        rep.after = counts[kw]
    return out, AugmentReport(reports)
