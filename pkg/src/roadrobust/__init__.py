"""Centrality, spatial-pattern and robustness analysis of directed road networks."""

__version__ = "0.1.0"

from .centrality import (CentralityTable, all_centralities, betweenness_centrality,  # noqa: E402
                         closeness_centrality, degree_centrality, load_centrality)
from .network import (BusRouteSet, RoadNetwork, ZonePolygon, bus_crossing_index,  # noqa: E402
                      extract_zone, ingest_network, write_network)
from .robustness import AttackCurve, AttackStrategy, attack, attack_suite  # noqa: E402
from .spatial import (DensityRaster, EnvelopeResult, StudyWindow, csr_test, f_function,  # noqa: E402
                      g_function, hotspot_cells, kde_raster, quartic_kernel)
from .stats import TestResult, kendall_tau, mann_whitney, summary_table  # noqa: E402
from .synthetic import synthetic_network  # noqa: E402
