"""Corpus analysis of optional-"that" complement clauses.

Detects explicit/implicit subordinate-conjunction constructions in
pre-parsed English, computes information-density predictors against
pluggable language-model providers, and fits a logistic model of the
speaker's omission choice.
"""

from .analysis import (
    KdeCurve,
    LemmaDistribution,
    annotation_sample,
    dataset_summary,
    kde,
    lemma_distribution,
    pearson_r,
)
from .corpus import (
    Diagnostic,
    ParseTree,
    SentenceRecord,
    TreeParseError,
    detokenize,
    load_corpus,
    parse_bracketed_tree,
    validate_record,
)
from .extraction import (
    ConstructionRecord,
    Label,
    ThatRole,
    ThatUsage,
    classify_that_usages,
    detect_constructions,
    length_filter,
)
from .lm import Distribution, NgramModel, Provider, ProviderError, entropy, train_ngram
from .predictors import (
    CorpusStats,
    FeatureRow,
    compute_structural_features,
    featurize,
    sc_onset_entropy,
    sc_onset_surprisal,
)
from .regression import (
    RegressionFit,
    RegressionSummary,
    ScalerParams,
    accuracy,
    fit_logistic,
    standard_scale,
    wald_summary,
)
from .sidecar_client import SidecarClient

__version__ = "0.1.0"

__all__ = [
    "ConstructionRecord",
    "CorpusStats",
    "Diagnostic",
    "Distribution",
    "FeatureRow",
    "KdeCurve",
    "Label",
    "LemmaDistribution",
    "NgramModel",
    "ParseTree",
    "Provider",
    "ProviderError",
    "RegressionFit",
    "RegressionSummary",
    "ScalerParams",
    "SentenceRecord",
    "SidecarClient",
    "ThatRole",
    "ThatUsage",
    "TreeParseError",
    "accuracy",
    "annotation_sample",
    "classify_that_usages",
    "compute_structural_features",
    "dataset_summary",
    "detect_constructions",
    "detokenize",
    "entropy",
    "featurize",
    "fit_logistic",
    "kde",
    "lemma_distribution",
    "length_filter",
    "load_corpus",
    "parse_bracketed_tree",
    "pearson_r",
    "sc_onset_entropy",
    "sc_onset_surprisal",
    "standard_scale",
    "train_ngram",
    "validate_record",
    "wald_summary",
]
