"""Channel charting for time-synchronized SISO radio systems.

Simulates multipath CIR datasets, computes local and geodesic CSI
distances, learns 2-D channel charts (Siamese encoder plus classical
baselines) and scores them with neighborhood-preservation and registered
positioning-error metrics.
"""

__version__ = "0.1.0"

from .environment import C_LIGHT, BaseStation, EnvironmentSpec, RadioConfig, Wall
from .sim import (
    CirSnapshot,
    Dataset,
    MpcList,
    generate_dataset,
    generate_trajectory,
    image_sources,
    multipath,
    simulate_cir,
)
from .csi import (
    AlignedTensor,
    cir_distance,
    preprocess,
    preprocess_dataset,
    true_delay_distance,
    window_length_for,
)
from .graphs import (
    DistanceMatrix,
    NeighborGraph,
    connected_components,
    cross_l1,
    geodesic_matrix,
    knn_graph,
    minimal_connecting_k,
    pairwise_matrix,
)
from .charting import (
    Embedding,
    EncoderParams,
    StressConfig,
    TrainConfig,
    embed_dataset,
    forward,
    init_encoder,
    mds_embed,
    pca_embed,
    sammon_embed,
    siamese_step,
    train,
)
from .evaluation import (
    AffineTransform,
    EvalReport,
    continuity,
    default_k,
    evaluate_chart,
    fit_affine,
    position_errors,
    trustworthiness,
)
