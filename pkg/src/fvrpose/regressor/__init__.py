from .experiment import (
    ANGLES_DEG,
    L_VALUES,
    FitReport,
    GridCell,
    GridResult,
    TrainConfig,
    derive_seed,
    fvr_grid_search,
    run_representation_experiment,
)
from .heads import MODES, REPRESENTATIONS, HeadConfig, make_codec
from .net import AdamState, DenseNet, Layer, adam_step, backward, forward, init_net
