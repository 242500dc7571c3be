"""Feature expression DSL: parse, validate, evaluate, analyze."""
from .checker import ValidationReport, Violation, check_point_in_time
from .corpus import ManifestError, load_bundled_corpus, load_manifest, parse_manifest
from .evaluator import FeatureError, evaluate
from .nodes import (Binary, ColumnRef, Const, CsRank, CsZScore, EwmMean, Expr,
                    FillMissing, GroupZScore, Lag, Rolling, Unary,
                    operation_count, referenced_columns,
                    rolling_max, rolling_mean, rolling_min, rolling_std)
from .parser import ParseError, parse_feature, pretty
from .patterns import PatternStats, analyze_patterns, classify

__all__ = [
    "Binary", "ColumnRef", "Const", "CsRank", "CsZScore", "EwmMean", "Expr",
    "FeatureError", "FillMissing", "GroupZScore", "Lag", "ManifestError",
    "ParseError", "PatternStats", "Rolling", "Unary", "ValidationReport",
    "Violation", "analyze_patterns", "check_point_in_time", "classify",
    "evaluate", "load_bundled_corpus", "load_manifest", "operation_count",
    "parse_feature", "parse_manifest", "pretty", "referenced_columns",
    "rolling_max", "rolling_mean", "rolling_min", "rolling_std",
]
