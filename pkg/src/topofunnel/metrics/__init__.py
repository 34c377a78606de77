from .centrality import ConvergenceError, Eigencentrality, eigencentrality
from .country import (
    CountryAggregate,
    ForeignStats,
    Observability,
    aggregate_by_country,
    country_aggregates,
    degree_threshold_curve,
    foreign_connectivity,
    observability_stats,
    pearson_correlation,
)
from .funnel import (
    FunnelLayers,
    FunnelProfile,
    cumulative_downstream_burden,
    funnel_layers,
    funnel_profile,
    relative_downstream_change,
)
from .paths import PathLengthEstimate, average_path_length, clustering_coefficient, eccentricity

__all__ = [
    "ConvergenceError",
    "CountryAggregate",
    "Eigencentrality",
    "ForeignStats",
    "FunnelLayers",
    "FunnelProfile",
    "Observability",
    "PathLengthEstimate",
    "aggregate_by_country",
    "average_path_length",
    "clustering_coefficient",
    "country_aggregates",
    "cumulative_downstream_burden",
    "degree_threshold_curve",
    "eccentricity",
    "eigencentrality",
    "foreign_connectivity",
    "funnel_layers",
    "funnel_profile",
    "observability_stats",
    "pearson_correlation",
    "relative_downstream_change",
]
