"""WordNet-style sense inventory: load, query, and classify targets by ambiguity.

Inventory file format (UTF-8, one record per line):

    lemma<TAB>pos<TAB>definition

with pos one of {n, v, a, r, x}. Lines starting with '#' are ignored.
Lemmas are normalized on load and on lookup (lowercase, internal whitespace
collapsed), so multiword targets stay single keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import EmptyInventory, MalformedRecord

_WS = re.compile(r"\s+")


class Pos(str, Enum):
    NOUN = "n"
    VERB = "v"
    ADJ = "a"
    ADV = "r"
    OTHER = "x"


class Source(str, Enum):
    KB = "kb"
    GENERATED = "generated"


class AmbiguityKind(str, Enum):
    OOV = "oov"
    TRIVIAL = "trivial"
    AMBIGUOUS = "ambiguous"


def normalize_lemma(text: str) -> str:
    """Lowercase and collapse internal whitespace to single spaces."""
    return _WS.sub(" ", text.strip()).lower()


@dataclass(frozen=True)
class SenseEntry:
    """One sense of a lemma: its definition text plus provenance."""

    lemma: str
    pos: Pos
    definition: str
    source: Source = Source.KB

    def __post_init__(self):
        if not self.definition.strip():
            raise MalformedRecord(f"empty definition for lemma {self.lemma!r}")
        object.__setattr__(self, "lemma", normalize_lemma(self.lemma))
        object.__setattr__(self, "definition", self.definition.strip())


@dataclass(frozen=True)
class AmbiguityClass:
    """Ambiguity level of a target: OOV (0 senses), trivial (1), ambiguous (>1)."""

    kind: AmbiguityKind
    count: int

    @classmethod
    def from_count(cls, count: int) -> "AmbiguityClass":
        if count == 0:
            return cls(AmbiguityKind.OOV, 0)
        if count == 1:
            return cls(AmbiguityKind.TRIVIAL, 1)
        return cls(AmbiguityKind.AMBIGUOUS, count)


@dataclass
class SenseInventory:
    """In-memory sense inventory. Immutable after load; safe for concurrent reads.

    Entries preserve file order both per (lemma, pos) key and in the
    pos-agnostic per-lemma index, so lookups are deterministic.
    """

    entries: dict[tuple[str, Pos], list[SenseEntry]] = field(default_factory=dict)
    by_lemma: dict[str, list[SenseEntry]] = field(default_factory=dict)
    _order: list[SenseEntry] = field(default_factory=list)

    def add(self, entry: SenseEntry) -> None:
        key = (entry.lemma, entry.pos)
        triple = (entry.lemma, entry.pos, entry.definition)
        for existing in self.entries.get(key, ()):
            if existing.definition == entry.definition:
                raise MalformedRecord(f"duplicate entry {triple!r}")
        self.entries.setdefault(key, []).append(entry)
        self.by_lemma.setdefault(entry.lemma, []).append(entry)
        self._order.append(entry)

    def __len__(self) -> int:
        return len(self._order)

    def all_entries(self) -> list[SenseEntry]:
        return list(self._order)

    def lookup(self, target: str, pos: Pos | None = None) -> list[SenseEntry]:
        """All senses for a normalized target, optionally filtered by pos.

        An empty list means the target is out of vocabulary; that is a valid
        outcome, not an error.
        """
        lemma = normalize_lemma(target)
        if pos is None:
            return list(self.by_lemma.get(lemma, ()))
        return list(self.entries.get((lemma, pos), ()))

    def ambiguity_class(self, target: str) -> AmbiguityClass:
        """Classify a target by its pos-agnostic sense count."""
        return AmbiguityClass.from_count(len(self.lookup(target)))


def load_inventory(
    path: str | Path, source: Source = Source.KB
) -> SenseInventory:
    """Load a TSV sense inventory. Raises on malformed records or empty files."""
    inv = SenseInventory()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise MalformedRecord(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            lemma, pos_letter, definition = fields
            if not lemma.strip():
                raise MalformedRecord(f"{path}:{lineno}: empty lemma")
            try:
                pos = Pos(pos_letter.strip())
            except ValueError:
                raise MalformedRecord(
                    f"{path}:{lineno}: bad pos {pos_letter!r} (expected n/v/a/r/x)"
                ) from None
            if not definition.strip():
                raise MalformedRecord(f"{path}:{lineno}: empty definition")
            try:
                inv.add(SenseEntry(lemma, pos, definition, source))
            except MalformedRecord as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from None
    if len(inv) == 0:
        raise EmptyInventory(f"{path}: no records")
    return inv


def save_inventory(inv: SenseInventory, path: str | Path) -> None:
    """Write an inventory back to TSV, preserving entry order."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in inv.all_entries():
            fh.write(f"{entry.lemma}\t{entry.pos.value}\t{entry.definition}\n")
