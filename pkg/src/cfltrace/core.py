"""Multiset algebra, words and the search-budget contract shared by all modules."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

Symbol = str
Word = Tuple[Symbol, ...]


class NotSubsumed(ValueError):
    """Raised by ``mdiff`` when the subtrahend is not below the minuend."""


class Multiset:
    """Finitely supported map from symbols to positive counts.

    Instances are immutable and canonical: zero counts are never stored, so
    structural equality is semantic equality and markings can be hash keys.
    """

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, counts: Union[Mapping[Symbol, int], Iterable[Symbol], None] = None):
        data: Dict[Symbol, int] = {}
        if counts is None:
            pass
        elif isinstance(counts, Mapping):
            for sym, n in counts.items():
                if n < 0:
                    raise ValueError(f"negative count for {sym!r}: {n}")
                if n:
                    data[sym] = data.get(sym, 0) + int(n)
        else:
            for sym in counts:
                data[sym] = data.get(sym, 0) + 1
        self._items: Tuple[Tuple[Symbol, int], ...] = tuple(sorted(data.items()))
        self._map = dict(self._items)
        self._hash = hash(self._items)

    @classmethod
    def of(cls, *symbols: Symbol) -> "Multiset":
        """``Multiset.of('p', 'p', 'q')`` is the bracket literal [p, p, q]."""
        return cls(symbols)

    def __getitem__(self, sym: Symbol) -> int:
        return self._map.get(sym, 0)

    def get(self, sym: Symbol, default: int = 0) -> int:
        return self._map.get(sym, default)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def items(self) -> Tuple[Tuple[Symbol, int], ...]:
        return self._items

    def support(self) -> frozenset:
        return frozenset(self._map)

    def total(self) -> int:
        return sum(n for _, n in self._items)

    def restrict(self, symbols: Iterable[Symbol]) -> "Multiset":
        keep = set(symbols)
        return Multiset({s: n for s, n in self._items if s in keep})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __add__(self, other: "Multiset") -> "Multiset":
        return msum(self, other)

    def __sub__(self, other: "Multiset") -> "Multiset":
        return mdiff(self, other)

    def __le__(self, other: "Multiset") -> bool:
        return mleq(self, other)

    def __repr__(self) -> str:
        return f"Multiset({format_multiset(self)})"

    def __str__(self) -> str:
        return format_multiset(self)


EMPTY = Multiset()


def msum(a: Multiset, b: Multiset) -> Multiset:
    if not b:
        return a
    if not a:
        return b
    out = dict(a.items())
    for s, n in b.items():
        out[s] = out.get(s, 0) + n
    return Multiset(out)


def mleq(a: Multiset, b: Multiset) -> bool:
    return all(b[s] >= n for s, n in a.items())


def mdiff(a: Multiset, b: Multiset) -> Multiset:
    out = dict(a.items())
    for s, n in b.items():
        have = out.get(s, 0)
        if have < n:
            raise NotSubsumed(f"{s!r}: {n} > {have}")
        out[s] = have - n
    return Multiset(out)


def project(v: Iterable[Symbol], theta: Iterable[Symbol]) -> Word:
    keep = theta if isinstance(theta, (set, frozenset)) else set(theta)
    return tuple(s for s in v if s in keep)


_ENTRY = re.compile(r"\s*([^\s{},:]+)\s*(?::\s*(\d+))?\s*$")


def parse_multiset(text: str) -> Multiset:
    """Parse the ``{p:2, q:1}`` literal; a bare ``p`` means ``p:1``."""
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ValueError(f"multiset literal must be braced: {text!r}")
    body = text[1:-1].strip()
    counts: Dict[Symbol, int] = {}
    if body:
        for chunk in body.split(","):
            m = _ENTRY.match(chunk)
            if not m:
                raise ValueError(f"bad multiset entry {chunk.strip()!r}")
            sym, n = m.group(1), int(m.group(2) or 1)
            counts[sym] = counts.get(sym, 0) + n
    return Multiset(counts)


def format_multiset(m: Multiset) -> str:
    return "{" + ", ".join(f"{s}:{n}" for s, n in m.items()) + "}"


def sub_multisets(m: Multiset) -> Iterator[Multiset]:
    """All ``q`` with ``q <= m``, ordered by increasing total, then lexicographically."""
    syms = [s for s, _ in m.items()]
    caps = [n for _, n in m.items()]
    found = []

    def rec(i, acc):
        if i == len(syms):
            found.append(tuple(acc))
            return
        for c in range(caps[i] + 1):
            acc.append(c)
            rec(i + 1, acc)
            acc.pop()

    rec(0, [])
    found.sort(key=lambda v: (sum(v), v))
    for v in found:
        yield Multiset(dict(zip(syms, v)))


def multisets_upto(symbols: Iterable[Symbol], cap: int) -> Iterator[Multiset]:
    """All multisets over ``symbols`` with total at most ``cap``, by increasing total."""
    syms = sorted(set(symbols))

    def compositions(total, k):
        if k == 0:
            if total == 0:
                yield ()
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, k - 1):
                yield (first,) + rest

    for total in range(cap + 1):
        if not syms:
            if total == 0:
                yield EMPTY
            continue
        for v in compositions(total, len(syms)):
            yield Multiset(dict(zip(syms, v)))


class Verdict(str, enum.Enum):
    REACHED = "Reached"
    EXHAUSTED_NO = "ExhaustedNo"
    BUDGET_EXCEEDED = "BudgetExceeded"


class BudgetExceeded(RuntimeError):
    """A bounded search hit its cap before it could give an exact answer."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SearchBudget:
    """Caps that make every semi-decision procedure total.

    ``tokens`` bounds the token sum of any explored marking, ``steps`` the
    number of explored states, ``word_len`` the length of enumerated words and
    ``derivation_steps`` the number of sentential forms visited.
    """

    tokens: int = 12
    steps: int = 200_000
    word_len: int = 8
    derivation_steps: int = 500_000

    def replace(self, **kw) -> "SearchBudget":
        fields = dict(tokens=self.tokens, steps=self.steps, word_len=self.word_len,
                      derivation_steps=self.derivation_steps)
        fields.update(kw)
        return SearchBudget(**fields)


def word_str(w: Optional[Iterable[Symbol]]) -> str:
    if w is None:
        return "-"
    w = tuple(w)
    return " ".join(w) if w else "eps"
