"""Financial networks, random walks with restart and assortativity measures"""

from .assortativity import (
    ALL_MODALITIES,
    LOCAL_MEASURES,
    AssortativityResult,
    Modality,
    assortativity_frame,
    compute_assortativity,
    edge_assortativity_sabek,
    edge_assortativity_table,
    global_assortativity,
    local_peel,
    local_peel_alpha,
    local_peel_with_weights,
    local_piraveenan,
    local_sabek,
    write_assortativity_csv,
)
from .graph import (
    DirectedNetwork,
    EdgeContext,
    EdgeTable,
    edge_table,
    excess_strength,
    from_correlation,
    from_lambda,
    from_weights,
    load_network,
    read_edge_list,
    save_network,
    write_edge_list,
)
from .pagerank import NodeDistribution, multiscale_matrix, multiscale_weights, personalized_pagerank

__all__ = [
    "ALL_MODALITIES",
    "LOCAL_MEASURES",
    "AssortativityResult",
    "Modality",
    "assortativity_frame",
    "compute_assortativity",
    "edge_assortativity_sabek",
    "edge_assortativity_table",
    "global_assortativity",
    "local_peel",
    "local_peel_alpha",
    "local_peel_with_weights",
    "local_piraveenan",
    "local_sabek",
    "write_assortativity_csv",
    "DirectedNetwork",
    "EdgeContext",
    "EdgeTable",
    "edge_table",
    "excess_strength",
    "from_correlation",
    "from_lambda",
    "from_weights",
    "load_network",
    "read_edge_list",
    "save_network",
    "write_edge_list",
    "NodeDistribution",
    "multiscale_matrix",
    "multiscale_weights",
    "personalized_pagerank",
]
