"""Passive acoustic meta-neural-network simulator, trainer, and fab exporter.

Stacked phase-only metamaterial layers, trained by adjoint backpropagation,
steer an incident sound wave so that the digit drawn on the object plane
determines which detector region captures the most energy. The package
simulates that device end to end: scalar diffraction between planes, the
layered forward model, cross-entropy training of the phases, MNIST
ingestion, evaluation artifacts, and export of trained phases to buildable
unit-cell heights.
"""

__version__ = "0.1.0"

from .bench import bench_csv, run_bench
from .core import (
    ComplexField,
    PhysicsConfig,
    energy,
    load_config,
    normalize,
    read_field,
    save_config,
    wavelength,
    write_field,
)
from .dataset import (
    DatasetSplit,
    EncodeMode,
    MaskDataset,
    binarize,
    encode_batch,
    encode_object,
    load_split,
    parse_idx,
)
from .errors import (
    ConfigError,
    FileFormatError,
    GridMismatchError,
    LayoutOverflowError,
    MetanetError,
    MethodMismatchError,
    ZeroFieldError,
)
from .evaluation import (
    EvalResult,
    confusion_csv,
    dump_field,
    energy_csv,
    evaluate,
    render_heatmap,
    sweep_csv,
    sweep_layers,
)
from .fabricate import (
    CalibrationTable,
    export_manifest,
    load_table,
    phase_to_height,
    quantize_phases,
    synthetic_linear_table,
)
from .network import (
    DetectorLayout,
    ForwardTrace,
    MetaNetwork,
    PhaseLayer,
    apply_layer,
    classify,
    default_detector_layout,
    forward,
    load_model,
    region_probabilities,
    save_model,
)
from .propagation import (
    EvanescentPolicy,
    Method,
    PropagationOperator,
    PropagationSettings,
    adjoint_propagate,
    get_operator,
    kernel_weights,
    propagate_direct,
    propagate_spectral,
    rs_weight,
)
from .training import (
    Hyperparams,
    OptimizerKind,
    Readout,
    TrainingRun,
    accuracy,
    gradient,
    history_csv,
    loss,
    random_phases_network,
    train,
)

__all__ = [
    "CalibrationTable",
    "ComplexField",
    "ConfigError",
    "DatasetSplit",
    "DetectorLayout",
    "EncodeMode",
    "EvalResult",
    "EvanescentPolicy",
    "FileFormatError",
    "ForwardTrace",
    "GridMismatchError",
    "Hyperparams",
    "LayoutOverflowError",
    "MaskDataset",
    "MetaNetwork",
    "MetanetError",
    "Method",
    "MethodMismatchError",
    "OptimizerKind",
    "PhaseLayer",
    "PhysicsConfig",
    "PropagationOperator",
    "PropagationSettings",
    "Readout",
    "TrainingRun",
    "ZeroFieldError",
    "accuracy",
    "adjoint_propagate",
    "apply_layer",
    "bench_csv",
    "binarize",
    "classify",
    "confusion_csv",
    "default_detector_layout",
    "dump_field",
    "encode_batch",
    "encode_object",
    "energy",
    "energy_csv",
    "evaluate",
    "export_manifest",
    "forward",
    "get_operator",
    "gradient",
    "history_csv",
    "kernel_weights",
    "load_config",
    "load_model",
    "load_split",
    "load_table",
    "loss",
    "normalize",
    "parse_idx",
    "phase_to_height",
    "propagate_direct",
    "propagate_spectral",
    "quantize_phases",
    "random_phases_network",
    "read_field",
    "region_probabilities",
    "render_heatmap",
    "rs_weight",
    "run_bench",
    "save_config",
    "save_model",
    "sweep_csv",
    "sweep_layers",
    "synthetic_linear_table",
    "train",
    "wavelength",
    "write_field",
]
