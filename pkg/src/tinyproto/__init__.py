"""Desk-scale prototype-based federated learning with sparse exchange.

Library layout:

* :mod:`tinyproto.numerics` -- small ReLU models, exact gradients, SGD
* :mod:`tinyproto.prototypes` -- prototype values and the sparsify /
  compress / reconstruct operators plus dead-unit diagnostics
* :mod:`tinyproto.masking` -- per-class mask generation (disjoint blocks or
  Hamming-distance hill climbing)
* :mod:`tinyproto.aggregation` -- weighted / simple / scaled per-class
  combination of client payloads
* :mod:`tinyproto.client` -- local training, prototype generation, and
  nearest-prototype inference
* :mod:`tinyproto.datagen` -- synthetic blobs, Dirichlet label-skew
  partitioning, train/test splits, CSV ingestion
* :mod:`tinyproto.wire`, :mod:`tinyproto.config`, :mod:`tinyproto.protocol`
  -- frame codec, config files, round orchestration and the harness
* :mod:`tinyproto.costmodel` -- closed-form per-round communication costs
"""

from .aggregation import (
    AGGREGATOR_CHOICES,
    AggregationError,
    ClassContribution,
    aggregate_scaled,
    aggregate_simple,
    aggregate_weighted,
)
from .client import (
    ClientState,
    InferenceError,
    MaskMissingError,
    TrainConfig,
    compute_local_prototypes,
    evaluate_accuracy,
    local_update,
    predict,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .costmodel import ALGORITHMS, CostQuery, cost, cost_millions, figure1_table
from .datagen import (
    Dataset,
    PartitionSpec,
    dirichlet_partition,
    load_csv,
    make_blobs,
    split_train_test,
)
from .masking import MaskSet, format_mask_rows, generate_masks, min_pairwise_hamming
from .numerics import (
    Gradients,
    ModelParams,
    ShapeError,
    forward_features,
    forward_logits,
    init_params,
    loss_and_grad,
    sgd_step,
)
from .prototypes import (
    CompressedPrototype,
    Mask,
    Prototype,
    SparseProto,
    compress,
    dead_unit_fraction,
    reconstruct,
    sparsify,
)
from .protocol import (
    ExperimentResult,
    FrameLog,
    RoundError,
    RoundReport,
    ServerState,
    initial_server,
    rounds_csv_text,
    run_experiment,
    run_round,
    write_outputs,
)
from .wire import Frame, FrameError, FrameType, Record, decode_frame, encode_frame, frame_param_count

__version__ = "0.1.0"
