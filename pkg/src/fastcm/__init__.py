"""Maximum-entropy configuration models with fast samplers.

Binary (UBCM) and weighted (UECM) configuration models, their
maximum-likelihood fits, linear-time samplers that skip over
non-neighbours with geometric jumps, brute-force reference samplers,
the Chung-Lu baselines, and the statistics used to compare ensembles.
"""

__version__ = "0.1.0"

from .model_core import (  # noqa: E402
    ContractViolationError,
    EdgeList,
    InvalidArgumentError,
    ParamsUBCM,
    ParamsUECM,
    chung_lu_rate,
    degree_sequence,
    strength_sequence,
    ubcm_edge_prob,
    uecm_edge_prob,
    uecm_expected_weight,
    uecm_upper_bound_prob,
    uecm_weight_pmf,
)
from .samplers import (  # noqa: E402
    RngStream,
    sample_bipartite_bruteforce,
    sample_bipartite_fast,
    sample_chunglu_mh,
    sample_chunglu_stub,
    sample_directed_bruteforce,
    sample_directed_fast,
    sample_ubcm_bruteforce,
    sample_ubcm_fast,
    sample_uecm_bruteforce,
    sample_uecm_fast,
)
from .inference import (  # noqa: E402
    FitReport,
    SolverOptions,
    expected_degrees,
    expected_strengths,
    solve_ubcm,
    solve_uecm,
)
from .metrics import (  # noqa: E402
    EnsembleReport,
    SampleRecord,
    degree_and_strength,
    log_degree_mse,
    rich_club_density,
    triangle_count,
)
from .synth import common_neighbor_weights, holme_kim  # noqa: E402
from .fileio import ParseError, read_edgelist, write_edgelist  # noqa: E402
