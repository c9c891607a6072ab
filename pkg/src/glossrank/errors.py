"""Exception hierarchy for the glossrank engine.

Every error raised by the library derives from GlossrankError so callers
(and the CLI) can catch one base class. Error names follow the operation
contracts they guard.
"""


class GlossrankError(Exception):
    """Base class for all glossrank errors."""


# --- sense inventory ---------------------------------------------------------

class MalformedRecord(GlossrankError):
    """An inventory or store record violates the file format (line reported)."""


class EmptyInventory(GlossrankError):
    """Inventory file contained no valid records."""


# --- scoring -----------------------------------------------------------------

class EmptyInput(GlossrankError):
    """An operation received an empty vector or result set."""


class NonFiniteInput(GlossrankError):
    """Scores contained NaN or infinity."""


class EmptyField(GlossrankError):
    """A required text field (context, definition, target) was empty."""


class EmptyTarget(EmptyField):
    """The target word was empty."""


class DimensionMismatch(GlossrankError):
    """Vector dimensions disagree within one run or store."""


class EmptyDefinitions(EmptyInput):
    """C2D was asked to score an empty definition list."""


class EmptyCandidates(EmptyInput):
    """D2I was asked to score an empty candidate list."""


class ShapeMismatch(GlossrankError):
    """Row count and distribution length disagree."""


class SupportMismatch(GlossrankError):
    """Distributions that must share a support do not."""


class GoldNotInSupport(GlossrankError):
    """The gold candidate is not among the ranked candidates."""


# --- providers ---------------------------------------------------------------

class BadHeader(GlossrankError):
    """Store or pair file header is missing or malformed."""


class NormOutOfTolerance(GlossrankError):
    """A stored vector's L2 norm is too far from 1 (key reported)."""


class MissingKey(GlossrankError):
    """A representation key is absent from the provider."""


class MissingPair(GlossrankError):
    """A (text, image) pair is absent from the pair-score table."""


# --- definition generation ---------------------------------------------------

class ServiceUnavailable(GlossrankError):
    """No generation client configured and no cache hit available."""


class EmptySample(GlossrankError):
    """The generation service kept returning empty samples past the retry limit."""


class NoDefinitionsAvailable(GlossrankError):
    """A non-baseline mode produced no definitions for an instance."""


# --- evaluation --------------------------------------------------------------

class MalformedLine(GlossrankError):
    """A dataset line violates the TSV format (line reported)."""


class GoldLengthMismatch(GlossrankError):
    """Gold file line count differs from the data file line count."""


class GoldNotAmongCandidates(GlossrankError):
    """A gold image key is not in its instance's candidate list."""


class MissingGold(GlossrankError):
    """Metrics require gold ranks but a result carries none."""


class LengthMismatch(GlossrankError):
    """Paired vectors have different lengths."""


class InstanceSetMismatch(GlossrankError):
    """Two result sets being compared cover different instances."""


class EmptyResults(GlossrankError):
    """A metric or report was requested over an empty result set."""


# --- engine / cli ------------------------------------------------------------

class AuditError(GlossrankError):
    """Fail-fast key audit found missing keys before ranking started."""

    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        preview = "\n  ".join(self.missing)
        super().__init__(
            f"provider is missing {len(self.missing)} required key(s):\n  {preview}"
        )


class ConfigError(GlossrankError):
    """Run configuration is inconsistent."""
