"""Logic-consistency toolkit for semantic parses.

Parses SQL-subset queries and logic-form trees into a shared AST, measures
parse/text consistency with bidirectional key-token matching, enumerates
rule-based logic perturbations, linearizes parses for generator input, and
orchestrates the iterative Snowball augmentation loop over pluggable
generator/evaluator workers.
"""

from .blec import (
    CorpusScore,
    MatchReport,
    Utterance,
    cohen_kappa,
    match_pair,
    pearson,
    score_corpus,
    tokenize,
)
from .compose import (
    BeamCandidate,
    Label,
    LabeledPair,
    Provenance,
    compose_evaluator_set,
    compose_generator_set,
    merge_pairs,
    read_pairs,
    rerank_beam,
    write_pairs,
)
from .errors import (
    ConfigError,
    DegenerateInputError,
    DuplicateTokenError,
    EmptyBeamError,
    EmptyCorpusError,
    InputError,
    LengthMismatchError,
    LexiconFormatError,
    LogicheckError,
    MissingPhraseError,
    MissingScoreError,
    ParseError,
    UnknownSeedError,
    WorkerError,
    WorkerProtocolError,
    WorkerTimeoutError,
)
from .lexicon import (
    Lexicon,
    LexiconEntry,
    RuleType,
    default_lexicon,
    load_lexicon,
    save_lexicon,
)
from .linearize import CONTROL_TOKENS, LinearForm, linearize, load_templates
from .parse_core import (
    AstNode,
    Dialect,
    KeyToken,
    KeyTokenSet,
    NodeKind,
    SemanticParse,
    extract_key_tokens,
    parse,
    parse_logic,
    parse_sql,
    serialize,
)
from .perturb import (
    PerturbConfig,
    Perturbation,
    PerturbationKind,
    enumerate_perturbations,
    validate_perturbation,
)
from .snowball import (
    IterationState,
    SnowballConfig,
    builtin_blec_evaluator,
    builtin_template_generator,
    load_config,
    run_iteration,
    run_snowball,
)

__version__ = "0.1.0"
