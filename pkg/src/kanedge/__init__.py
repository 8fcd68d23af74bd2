"""kanedge: hardware-aware quantization and analog-array simulation for
spline-based (KAN) edge inference.

Modules by concern:

- :mod:`kanedge.splines` / :mod:`kanedge.kan` - exact float spline math
  (the oracle every other path is measured against)
- :mod:`kanedge.quant` - grid-aligned power-of-two LUT quantization
- :mod:`kanedge.inputgen` - word-line input encoders (voltage / PWM / hybrid)
- :mod:`kanedge.crossbar` - analog crossbar MAC with bit-line IR drop
- :mod:`kanedge.mapping` - activation-probability row ordering and the full
  quantized+analog evaluation pipeline
- :mod:`kanedge.costs` - analytical area/energy/latency model
- :mod:`kanedge.search` - constrained hyperparameter search with grid
  extension
- :mod:`kanedge.cli` - reproducible command-line pipelines
"""

__version__ = "0.1.0"

from .splines import SplineGrid, basis_matrix, basis_value, cardinal_bspline, cardinal_piece
from .kan import (
    Dataset,
    KanLayer,
    KanNetwork,
    TrainConfig,
    fit_edge_least_squares,
    grid_extend,
    layer_forward,
    layer_gradients,
    load_model,
    network_forward,
    save_model,
    train,
)
from .quant import (
    BasisAccess,
    QuantConfig,
    SharedLut,
    active_basis_levels,
    build_lut,
    max_subcell_bits,
    quantize_input,
    quantized_layer_forward,
    split_code,
)
from .inputgen import (
    ChargeResult,
    EncoderConfig,
    Scheme,
    Waveform,
    compare_encoders,
    encode,
    encode_latency,
    ideal_charge,
    mac_yield,
    noisy_charge,
)
from .crossbar import (
    CrossbarConfig,
    MacResult,
    ProgrammedArray,
    ideal_mac,
    ir_drop_mac,
    program,
    stochastic_mac,
)
from .mapping import (
    InputDistribution,
    MappingPlan,
    activation_probability,
    evaluate_mapping,
    probability_order,
)
from .costs import (
    CostReport,
    UnitCosts,
    accelerator_cost,
    encoder_cost,
    lookup_path_cost,
    mlp_baseline_cost,
)
from .search import Constraints, SearchConfig, SearchOutcome, feasible, optimize
