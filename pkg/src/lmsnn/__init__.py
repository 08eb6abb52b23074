"""Lattice-map spiking neural networks.

Unsupervised digit classification with conductance-based LIF neurons:
Poisson rate coding on the input, trace-based STDP on the input synapses,
adaptive thresholds, and lateral inhibition whose strength depends on
lattice distance and can move over the training run. Trained networks
classify via labeled-activity voting (group counts, confidence weighting,
filter distance, or firing-order n-grams).
"""

from .config import ConfigError, LifParams, SimConfig, StdpParams
from .data import DataError, Dataset, IdxFormatError, fetch_dataset, load_idx, load_split
from .evaluation import (
    UNASSIGNED,
    ConvergenceCurve,
    VotingModel,
    accuracy,
    assign_labels,
    convergence_curve,
    learn_ngrams,
    mean_std,
    vote_all,
    vote_confidence,
    vote_distance,
    vote_ngram,
)
from .experiment import (
    RunConfig,
    build_network,
    evaluate_network,
    label_network,
    run_convergence,
    run_pipeline,
    sweep_rows,
    train_network,
)
from .export import (
    export_assignment_map,
    export_filter_map,
    write_curve,
    write_results,
)
from .network import (
    DegenerateInputWarning,
    Network,
    NeuronState,
    NumericDivergenceError,
    SpikeRecord,
    poisson_encode,
    present_example,
    rest_network,
    step_network,
)
from .plasticity import decay_traces, normalize_input_weights, stdp_on_post, stdp_on_pre
from .snapshot import (
    ModelSnapshot,
    SnapshotError,
    SnapshotVersionError,
    load_snapshot,
    network_from_snapshot,
    save_snapshot,
)
from .topology import (
    InhibitionSchedule,
    LatticeTopology,
    STRATEGIES,
    build_inhibition_matrix,
    inhibition_weight,
    lattice_distance,
    schedule_level,
    sparse_mask,
)

__version__ = "0.1.0"
