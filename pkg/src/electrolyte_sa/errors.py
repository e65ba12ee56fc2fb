"""Exception hierarchy.

Everything raised on bad user input derives from :class:`ValidationError`;
the CLI maps those to exit code 1 and anything else to exit code 2.
"""


class ValidationError(ValueError):
    """Input rejected by a contract check."""


# smiles / graph
class SmilesSyntaxError(ValidationError):
    pass


class ValenceError(ValidationError):
    pass


# selfies
class UnsupportedFeature(ValidationError):
    pass


class TokenGrammarError(ValidationError):
    pass


# tokenizer
class EmptyCorpus(ValidationError):
    pass


class IdOutOfRange(ValidationError):
    pass


class NothingToMask(ValidationError):
    pass


# transformer
class ConfigError(ValidationError):
    pass


class SequenceTooLong(ValidationError):
    pass


class EmptySequence(ValidationError):
    pass


class BundleError(ValidationError):
    """Model bundle on disk is missing files or has the wrong byte length."""


# featurizer
class FractionSumError(ValidationError):
    pass


class MissingTarget(ValidationError):
    pass


# gbt
class DimensionMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class DegenerateDataWarning(UserWarning):
    """Training data too small or constant; a base-only model was returned."""


# pipeline
class SchemaError(ValidationError):
    pass


class InconsistentTarget(ValidationError):
    pass


class FractionError(ValidationError):
    pass


class SmilesError(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class EmptyReport(ValidationError):
    pass
