"""Definition generation: prompt builders, cached generation, source merging.

Two prompt styles for obtaining a definition of a target word from a large
language model:

* plain  — just ``<target> (<pos>)``, continuation-style.
* contextual — a conditioning sentence naming the context, then the plain
  tail on the next line: ``Define "<target>" in <context>.\\n<target> (<pos>)``.

Generated definitions are cached on disk keyed by a fingerprint of
(prompt, n, temperature), so evaluation runs can replay a warm cache with no
service configured. Cache writes are atomic (write-temp-then-rename).

The four definition-source modes mirror the experiment matrix: none (baseline
scoring), kb (inventory definitions), plain/contextual generation, and
kb+contextual which uses generated definitions only when the inventory has no
entry for the target.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol
from urllib import request as urlrequest

from .errors import (
    EmptyField,
    EmptySample,
    EmptyTarget,
    NoDefinitionsAvailable,
    ServiceUnavailable,
)
from .inventory import Pos, SenseEntry, Source

logger = logging.getLogger(__name__)

RETRY_LIMIT = 3

ENDPOINT_ENV = "GLOSSRANK_GEN_ENDPOINT"
TOKEN_ENV = "GLOSSRANK_GEN_TOKEN"


class DefinitionSourceMode(str, Enum):
    NONE = "none"
    WN = "wn"
    DG = "dg"
    CADG = "cadg"
    WN_PLUS_CADG = "wn+cadg"

    @property
    def uses_generation(self) -> bool:
        return self in (self.DG, self.CADG, self.WN_PLUS_CADG)


def _pos_letter(pos: Pos | None) -> str:
    # Unknown/other pos falls back to noun; dataset targets are predominantly nouns.
    if pos is None or pos is Pos.OTHER:
        return "n"
    return pos.value


def build_dg_prompt(target: str, pos: Pos | None = None) -> str:
    """Plain generation prompt: the word followed by its pos letter."""
    if not target.strip():
        raise EmptyTarget("target must be non-empty")
    return f"{target} ({_pos_letter(pos)})"


def build_cadg_prompt(target: str, pos: Pos | None, context: str) -> str:
    """Context-aware prompt: conditioning sentence plus the plain tail."""
    if not target.strip():
        raise EmptyTarget("target must be non-empty")
    if not context.strip():
        raise EmptyField("context must be non-empty")
    return f'Define "{target}" in {context}.\n{target} ({_pos_letter(pos)})'


@dataclass(frozen=True)
class GenRequest:
    """One generation request plus provenance metadata."""

    prompt: str
    n_samples: int = 1
    temperature: float = 1.0
    target: str = ""
    context: str = ""
    pos: Pos | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")

    def fingerprint(self) -> str:
        """Hex digest over (prompt, n, temperature); the cache key."""
        payload = json.dumps(
            {"prompt": self.prompt, "n": self.n_samples, "temperature": self.temperature},
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class GenRecord:
    """A cached generation result; |samples| == the request's n_samples."""

    fingerprint: str
    prompt: str
    n_samples: int
    temperature: float
    samples: list[str]
    created_at: str
    target: str = ""
    context: str = ""

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "prompt": self.prompt,
            "n_samples": self.n_samples,
            "temperature": self.temperature,
            "samples": self.samples,
            "created_at": self.created_at,
            "target": self.target,
            "context": self.context,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenRecord":
        return cls(**data)


class GenerationClient(Protocol):
    """Anything that can turn a prompt into n text samples."""

    def complete(self, prompt: str, n: int, temperature: float) -> list[str]: ...


class HttpGenerationClient:
    """POSTs {"prompt", "n", "temperature"} as JSON; expects {"samples": [...]}.

    Endpoint and optional bearer token come from the GLOSSRANK_GEN_ENDPOINT
    and GLOSSRANK_GEN_TOKEN environment variables unless given explicitly.
    """

    def __init__(self, endpoint: str | None = None, token: str | None = None, timeout: float = 60.0):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV, "")
        self.token = token or os.environ.get(TOKEN_ENV)
        self.timeout = timeout
        if not self.endpoint:
            raise ServiceUnavailable(
                f"no generation endpoint configured (set {ENDPOINT_ENV})"
            )

    def complete(self, prompt: str, n: int, temperature: float) -> list[str]:
        body = json.dumps(
            {"prompt": prompt, "n": n, "temperature": temperature}
        ).encode("utf-8")
        req = urlrequest.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urlrequest.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except OSError as exc:
            raise ServiceUnavailable(f"generation service error: {exc}") from exc
        samples = payload.get("samples")
        if not isinstance(samples, list):
            raise ServiceUnavailable("generation service returned no samples field")
        return [str(s) for s in samples]


class ReplayClient:
    """Serves samples from a committed fixture map; the default in tests.

    The fixture is a JSON object mapping prompt -> list of samples.
    """

    def __init__(self, fixtures: dict[str, list[str]] | str | Path):
        if isinstance(fixtures, (str, Path)):
            with open(fixtures, encoding="utf-8") as fh:
                fixtures = json.load(fh)
        self.fixtures = dict(fixtures)
        self.calls = 0

    def complete(self, prompt: str, n: int, temperature: float) -> list[str]:
        self.calls += 1
        if prompt not in self.fixtures:
            raise ServiceUnavailable(f"no fixture for prompt {prompt!r}")
        samples = list(self.fixtures[prompt])
        if len(samples) < n:
            # cycle fixture samples to honour the n contract
            while len(samples) < n:
                samples.append(self.fixtures[prompt][len(samples) % len(self.fixtures[prompt])])
        return samples[:n]


class DefinitionCache:
    """Append-only directory of generation records, one file per fingerprint."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, fingerprint: str) -> Path:
        return self.directory / fingerprint

    def get(self, fingerprint: str) -> GenRecord | None:
        path = self._path(fingerprint)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return GenRecord.from_dict(json.load(fh))

    def put(self, record: GenRecord) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record.to_dict(), fh, ensure_ascii=False, indent=1)
            os.replace(tmp, self._path(record.fingerprint))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def __contains__(self, fingerprint: str) -> bool:
        return self._path(fingerprint).exists()


def generate(
    client: GenerationClient | None,
    req: GenRequest,
    cache: DefinitionCache | None = None,
) -> list[str]:
    """Return n definition samples for a request, consulting the cache first.

    Cache hits never touch the service. On a miss the service is called,
    empty samples are re-requested up to RETRY_LIMIT attempts, and the record
    is persisted before returning.
    """
    fp = req.fingerprint()
    if cache is not None:
        record = cache.get(fp)
        if record is not None:
            return list(record.samples)
    if client is None:
        raise ServiceUnavailable(
            f"no generation client and no cached record for prompt {req.prompt!r}"
        )
    samples: list[str] = []
    for _ in range(RETRY_LIMIT):
        fresh = client.complete(req.prompt, req.n_samples - len(samples), req.temperature)
        samples.extend(s.strip() for s in fresh if s.strip())
        if len(samples) >= req.n_samples:
            break
    if len(samples) < req.n_samples:
        raise EmptySample(
            f"service returned empty samples for prompt {req.prompt!r} "
            f"after {RETRY_LIMIT} attempts"
        )
    samples = samples[: req.n_samples]
    if cache is not None:
        record = GenRecord(
            fingerprint=fp,
            prompt=req.prompt,
            n_samples=req.n_samples,
            temperature=req.temperature,
            samples=samples,
            created_at=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            target=req.target,
            context=req.context,
        )
        cache.put(record)
    return samples


def assemble_definitions(
    mode: DefinitionSourceMode,
    wn_defs: list[SenseEntry],
    gen_defs: list[str],
    target: str = "",
    pos: Pos | None = None,
) -> list[SenseEntry]:
    """Merge inventory and generated definitions per the source mode.

    kb+contextual never mixes sources for one instance: inventory entries win
    whenever any exist, generated entries are used only for OOV targets.
    Raises NoDefinitionsAvailable when a non-baseline mode ends up empty; the
    engine then falls back to baseline scoring for that instance.
    """
    if mode is DefinitionSourceMode.NONE:
        return []
    generated = [
        SenseEntry(target or "unknown", pos or Pos.NOUN, d, Source.GENERATED)
        for d in gen_defs
        if d.strip()
    ]
    if mode is DefinitionSourceMode.WN:
        chosen = list(wn_defs)
    elif mode in (DefinitionSourceMode.DG, DefinitionSourceMode.CADG):
        chosen = generated
    elif mode is DefinitionSourceMode.WN_PLUS_CADG:
        chosen = list(wn_defs) if wn_defs else generated
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown mode {mode}")
    if not chosen:
        raise NoDefinitionsAvailable(
            f"mode {mode.value} produced no definitions for target {target!r}"
        )
    return chosen
