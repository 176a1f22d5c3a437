"""Publication-style figure rendering for diagnosis sweep CSVs."""

from .render import (
    EXPECTED_VERSION,
    FIGURES,
    EmptyAggregateError,
    FigureSpec,
    RenderResult,
    SchemaVersionError,
    extract_series,
    read_aggregates,
    render,
)

__version__ = "0.1.0"
