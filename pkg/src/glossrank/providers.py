"""Representation providers: file-backed stores, pairwise scores, synthetic vectors.

Embedding store file (UTF-8, line-oriented):

    #glossrank-store v1 dim=<d> logit_scale=<s>
    T<TAB><key><TAB><v1> <v2> ... <vd>
    I<TAB><key><TAB><v1> <v2> ... <vd>

Pair-score file (cross-encoder exports):

    #glossrank-pairs v1
    <text_key><TAB><image_key><TAB><score>

Vectors are stored unit-normalized; the loader re-normalizes within 1e-4 to
absorb float32-to-decimal round-trip error and rejects anything further off.
Values are written as shortest round-trip decimals, so write(read(f))
reproduces f record-for-record.

The synthetic encoder maps any string to a fixed unit vector: the Philox
counter-based generator is keyed with BLAKE2b-128 of ``<seed>\\x1f<kind-letter>
\\x1f<input>`` (UTF-8), draws ``dim`` standard normals, and L2-normalizes.
Both algorithms have published test vectors; frozen outputs are committed in
the test suite to pin the stream.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    DimensionMismatch,
    EmptyInput,
    MalformedRecord,
    MissingKey,
    MissingPair,
    NonFiniteInput,
    NormOutOfTolerance,
)
from .scoring import Kind, Representation

STORE_MAGIC = "#glossrank-store v1"
PAIRS_MAGIC = "#glossrank-pairs v1"
LOAD_NORM_TOL = 1e-4
# Norm drift below this is float round-trip noise; keep the parsed values so
# that read->write is byte-stable.
EXACT_NORM_TOL = 1e-12


@dataclass
class EmbeddingStore:
    """Immutable map from text/image keys to unit-norm vectors."""

    dim: int
    logit_scale: float = 1.0
    text_table: dict[str, Representation] = field(default_factory=dict)
    image_table: dict[str, Representation] = field(default_factory=dict)
    _order: list[tuple[Kind, str]] = field(default_factory=list)

    def _table(self, kind: Kind) -> dict[str, Representation]:
        return self.text_table if kind is Kind.TEXT else self.image_table

    def add(self, kind: Kind, key: str, vec: np.ndarray) -> None:
        if "\t" in key or "\n" in key:
            raise MalformedRecord(f"key {key!r} contains a tab or newline")
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(
                f"{key!r}: vector of dim {vec.shape} in a dim={self.dim} store"
            )
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > LOAD_NORM_TOL:
            raise NormOutOfTolerance(f"{key!r}: norm {norm!r} outside 1 +/- 1e-4")
        if abs(norm - 1.0) > EXACT_NORM_TOL:
            vec = vec / norm
        table = self._table(kind)
        if key in table:
            raise MalformedRecord(f"duplicate {kind.name} key {key!r}")
        table[key] = Representation(key, kind, vec)
        self._order.append((kind, key))

    def get_text(self, key: str) -> Representation:
        try:
            return self.text_table[key]
        except KeyError:
            raise MissingKey(f"no TEXT representation for key {key!r}") from None

    def get_image(self, key: str) -> Representation:
        try:
            return self.image_table[key]
        except KeyError:
            raise MissingKey(f"no IMAGE representation for key {key!r}") from None

    def has_text(self, key: str) -> bool:
        return key in self.text_table

    def has_image(self, key: str) -> bool:
        return key in self.image_table

    def records(self) -> list[Representation]:
        """All representations in file/insertion order."""
        return [self._table(kind)[key] for kind, key in self._order]


def open_store(path: str | Path) -> EmbeddingStore:
    """Load an embedding store file, validating header, dims, and norms."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        store = _parse_header(header, path)
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise MalformedRecord(f"{path}:{lineno}: expected 3 fields")
            kind_letter, key, values = parts
            try:
                kind = Kind(kind_letter)
            except ValueError:
                raise MalformedRecord(
                    f"{path}:{lineno}: bad kind {kind_letter!r} (expected T or I)"
                ) from None
            try:
                vec = np.array([float(v) for v in values.split()], dtype=np.float64)
            except ValueError:
                raise MalformedRecord(f"{path}:{lineno}: unparseable vector") from None
            if vec.shape != (store.dim,):
                raise DimensionMismatch(
                    f"{path}:{lineno}: {key!r} has {vec.size} values, expected {store.dim}"
                )
            store.add(kind, key, vec)
    return store


def _parse_header(header: str, path) -> EmbeddingStore:
    parts = header.split()
    if len(parts) != 4 or " ".join(parts[:2]) != STORE_MAGIC:
        raise BadHeader(f"{path}: bad store header {header!r}")
    fields = {}
    for part in parts[2:]:
        name, _, value = part.partition("=")
        fields[name] = value
    try:
        dim = int(fields["dim"])
        logit_scale = float(fields["logit_scale"])
    except (KeyError, ValueError):
        raise BadHeader(f"{path}: bad store header {header!r}") from None
    if dim <= 0 or logit_scale <= 0 or not np.isfinite(logit_scale):
        raise BadHeader(f"{path}: dim and logit_scale must be positive")
    return EmbeddingStore(dim=dim, logit_scale=logit_scale)


def write_store(store: EmbeddingStore, path: str | Path) -> None:
    """Write a store file; values as shortest round-trip decimals."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{STORE_MAGIC} dim={store.dim} logit_scale={store.logit_scale!r}\n")
        for rep in store.records():
            values = " ".join(repr(float(v)) for v in rep.vec)
            fh.write(f"{rep.kind.value}\t{rep.key}\t{values}\n")


@dataclass
class PairScoreTable:
    """Precomputed (text_key, image_key) -> score map for cross-encoder runs."""

    scores: dict[tuple[str, str], float] = field(default_factory=dict)

    def add(self, text_key: str, image_key: str, score: float) -> None:
        if not np.isfinite(score):
            raise NonFiniteInput(
                f"pair ({text_key!r}, {image_key!r}) has non-finite score"
            )
        self.scores[(text_key, image_key)] = float(score)

    def get(self, text_key: str, image_key: str) -> float:
        try:
            return self.scores[(text_key, image_key)]
        except KeyError:
            raise MissingPair(
                f"no score for pair ({text_key!r}, {image_key!r})"
            ) from None

    def has(self, text_key: str, image_key: str) -> bool:
        return (text_key, image_key) in self.scores

    def __len__(self) -> int:
        return len(self.scores)


def pair_score(table: PairScoreTable, text_key: str, image_key: str) -> float:
    return table.get(text_key, image_key)


def open_pairs(path: str | Path) -> PairScoreTable:
    """Load a pair-score file."""
    table = PairScoreTable()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != PAIRS_MAGIC:
            raise BadHeader(f"{path}: bad pairs header {header!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedRecord(f"{path}:{lineno}: expected 3 fields")
            text_key, image_key, score_text = parts
            try:
                score = float(score_text)
            except ValueError:
                raise MalformedRecord(f"{path}:{lineno}: bad score") from None
            if not np.isfinite(score):
                raise MalformedRecord(f"{path}:{lineno}: non-finite score")
            table.add(text_key, image_key, score)
    return table


@dataclass(frozen=True)
class SyntheticEncoder:
    """Deterministic pseudo-encoder for tests and desk-scale runs.

    Same (seed, kind, input) always yields the same unit vector, across runs
    and platforms.
    """

    seed: int = 0
    dim: int = 64

    def encode(self, kind: Kind, text: str) -> Representation:
        return synth_encode(self, kind, text)

    # vector-provider protocol, so the engine can swap a store for an encoder
    def get_text(self, key: str) -> Representation:
        return synth_encode(self, Kind.TEXT, key)

    def get_image(self, key: str) -> Representation:
        return synth_encode(self, Kind.IMAGE, key)

    def has_text(self, key: str) -> bool:
        return bool(key)

    def has_image(self, key: str) -> bool:
        return bool(key)


def synth_encode(enc: SyntheticEncoder, kind: Kind, text: str) -> Representation:
    """Hash the input to a Philox key, draw dim normals, L2-normalize."""
    if not text:
        raise EmptyInput("cannot encode an empty string")
    data = f"{enc.seed}\x1f{kind.value}\x1f{text}".encode("utf-8")
    digest = hashlib.blake2b(data, digest_size=16).digest()
    key = np.frombuffer(digest, dtype="<u8")
    gen = np.random.Generator(np.random.Philox(key=key))
    vec = gen.standard_normal(enc.dim)
    vec /= np.linalg.norm(vec)
    return Representation(text, kind, vec)
