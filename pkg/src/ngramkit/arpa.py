"""ARPA text format reader and writer."""

from __future__ import annotations

import math
import re
from typing import TextIO

from .model import BackoffModel


class ArpaParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def format_log(x: float) -> str:
    """7 significant digits, widened when that would lose more than 5e-7."""
    s = f"{x:.7g}"
    if abs(float(s) - x) > 5e-7:
        s = f"{x:.7f}"
    return s


def _sort_key(gram):
    return " ".join(gram).encode("utf-8")


def write_arpa(model: BackoffModel, sink: TextIO) -> int:
    """Serialize ``model``; returns the number of bytes (UTF-8) written."""
    heads = model.children()
    parts = ["\n\\data\\\n"]
    parts += [f"ngram {m}={len(level)}\n" for m, level in enumerate(model.logprob, 1)]
    for m, level in enumerate(model.logprob, 1):
        parts.append(f"\n\\{m}-grams:\n")
        bo = model.backoff[m - 1] if m < model.order else {}
        for gram in sorted(level, key=_sort_key):
            line = f"{format_log(level[gram])}\t{' '.join(gram)}"
            b = bo.get(gram)
            if b is not None and (b != 0.0 or gram in heads):
                line += f"\t{format_log(b)}"
            elif gram in heads:
                line += "\t0"
            parts.append(line + "\n")
    parts.append("\n\\end\\\n")
    text = "".join(parts)
    sink.write(text)
    return len(text.encode("utf-8"))


_COUNT = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION = re.compile(r"^\\(\d+)-grams:$")


def _float(tok: str, lineno: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ArpaParseError(lineno, f"bad number {tok!r}") from None
    if math.isnan(x) or x == math.inf:
        raise ArpaParseError(lineno, f"bad number {tok!r}")
    if x == -math.inf:
        x = -99.0
    return x


def read_arpa(source: TextIO) -> BackoffModel:
    """Parse an ARPA model. Comment lines before ``\\data\\`` are ignored.

    Raises :class:`ArpaParseError` (with a line number) on header/section
    count mismatch, duplicate n-grams, missing ``\\end\\`` and any line that
    does not fit the format.
    """
    lineno = 0
    declared: dict[int, int] = {}
    logprob: list = []
    backoff: list = []
    state = "preamble"
    current = 0
    ended = False

    def close_section():
        if current and len(logprob[current - 1]) != declared[current]:
            raise ArpaParseError(lineno, f"header declares {declared[current]} "
                                         f"{current}-grams, section has {len(logprob[current - 1])}")

    for lineno, raw in enumerate(source, 1):
        line = raw.strip()
        if state == "preamble":
            if line == "\\data\\":
                state = "header"
            continue
        if ended:
            if line:
                raise ArpaParseError(lineno, "content after \\end\\")
            continue
        if state == "header":
            if not line:
                if declared:
                    state = "body"
                continue
            match = _COUNT.match(line)
            if match:
                m, c = int(match.group(1)), int(match.group(2))
                if m != len(declared) + 1:
                    raise ArpaParseError(lineno, f"unexpected order {m} in header")
                declared[m] = c
                continue
            if declared and _SECTION.match(line):
                state = "body"
            else:
                raise ArpaParseError(lineno, f"bad header line {line!r}")
        if not line:
            continue
        match = _SECTION.match(line)
        if match:
            close_section()
            m = int(match.group(1))
            if m != current + 1 or m not in declared:
                raise ArpaParseError(lineno, f"unexpected section \\{m}-grams:")
            current = m
            logprob.append({})
            backoff.append({})
            continue
        if line == "\\end\\":
            close_section()
            if current != len(declared):
                raise ArpaParseError(lineno, f"missing sections after order {current}")
            ended = True
            continue
        if not current:
            raise ArpaParseError(lineno, f"entry outside a section: {line!r}")
        fields = line.split()
        if len(fields) == current + 1:
            bo = None
        elif len(fields) == current + 2 and current < len(declared):
            bo = _float(fields[-1], lineno)
        else:
            raise ArpaParseError(lineno, f"expected {current}-gram entry, got {line!r}")
        lp = _float(fields[0], lineno)
        gram = tuple(fields[1:current + 1])
        if gram in logprob[current - 1]:
            raise ArpaParseError(lineno, f"duplicate n-gram {' '.join(gram)!r}")
        logprob[current - 1][gram] = lp
        if bo is not None:
            backoff[current - 1][gram] = bo
    if state == "preamble":
        raise ArpaParseError(lineno, "no \\data\\ header")
    if not ended:
        raise ArpaParseError(lineno, "missing \\end\\")
    if not declared:
        raise ArpaParseError(lineno, "empty header")
    return BackoffModel(len(declared), logprob, backoff)


def load_arpa(path) -> BackoffModel:
    with open(path, encoding="utf-8") as f:
        return read_arpa(f)


def save_arpa(model: BackoffModel, path) -> int:
    with open(path, "w", encoding="utf-8") as f:
        return write_arpa(model, f)
