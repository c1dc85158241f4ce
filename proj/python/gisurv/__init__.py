"""GI illness surveillance over restaurant reviews."""

from ._core import (
    BackendError,
    ConfigError,
    DataError,
    Error,
    disambiguate_foods,
    disambiguate_symptoms,
    keywords,
    match_keywords,
    run,
    score_label_sets,
    substitute,
    two_proportion_z_test,
    version,
)

__version__ = version()

__all__ = [
    "BackendError",
    "ConfigError",
    "DataError",
    "Error",
    "disambiguate_foods",
    "disambiguate_symptoms",
    "keywords",
    "match_keywords",
    "run",
    "score_label_sets",
    "substitute",
    "two_proportion_z_test",
    "version",
]
