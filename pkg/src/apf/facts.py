"""Fact triples and the glob-style claim patterns matched against them."""

from __future__ import annotations

import re
from fnmatch import fnmatchcase
from typing import Iterable, Mapping, NamedTuple

_PLACEHOLDER = re.compile(r"\{([a-zA-Z_][\w.:]*)\}")


class Fact(NamedTuple):
    subject: str
    relation: str
    object: str

    def __str__(self) -> str:
        return f"({self.subject}, {self.relation}, {self.object})"


Pattern = tuple[str, str, str]


def as_fact(value: Iterable[object]) -> Fact:
    items = [str(v) for v in value]
    if len(items) != 3:
        raise ValueError(f"fact triple needs exactly 3 tokens, got {items!r}")
    return Fact(*items)


def as_pattern(value: Iterable[object]) -> Pattern:
    items = tuple(str(v) for v in value)
    if len(items) != 3:
        raise ValueError(f"claim pattern needs exactly 3 tokens, got {items!r}")
    return items  # type: ignore[return-value]


def substitute(template: str, bindings: Mapping[str, object]) -> str:
    """Replace ``{name}`` placeholders; unknown names become ``*``."""

    def repl(m: re.Match[str]) -> str:
        value = bindings.get(m.group(1))
        return "*" if value is None else str(value)

    return _PLACEHOLDER.sub(repl, template)


def instantiate(pattern: Pattern, bindings: Mapping[str, object]) -> Pattern:
    return tuple(substitute(tok, bindings) for tok in pattern)  # type: ignore[return-value]


def matches(pattern: Pattern, fact: Fact, bindings: Mapping[str, object] | None = None) -> bool:
    if bindings is not None:
        pattern = instantiate(pattern, bindings)
    else:
        pattern = tuple(_PLACEHOLDER.sub("*", tok) for tok in pattern)  # type: ignore[assignment]
    return all(fnmatchcase(tok, pat) for tok, pat in zip(fact, pattern))


def _token_overlap(a: str, b: str) -> bool:
    a = _PLACEHOLDER.sub("*", a)
    b = _PLACEHOLDER.sub("*", b)
    if "*" in a and "*" in b:
        # two globs: assume some string satisfies both unless fixed prefixes clash
        pa, pb = a.split("*", 1)[0], b.split("*", 1)[0]
        return pa.startswith(pb) or pb.startswith(pa)
    return fnmatchcase(a, b) or fnmatchcase(b, a)


def overlaps(a: Pattern, b: Pattern) -> bool:
    """True when some fact could match both patterns."""
    return all(_token_overlap(x, y) for x, y in zip(a, b))
