"""Desk-scale rotation regression: fit a dense net to recover R from a rotated template."""

import hashlib
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .. import so3
from ..errors import InvalidInputError, TrainingDivergedError
from ..fvr import FvrParams, rotation_from_green_only
from ..losses import mse_loss, smooth_l1_loss
from ..metrics import auc_curve
from .heads import HeadConfig
from .net import AdamState, adam_step, backward, forward, init_net

LOSSES = {"mse": mse_loss, "smooth_l1": smooth_l1_loss}


def derive_seed(seed, task):
    """Per-task seed: low 32 bits of sha256(task) xor the run seed."""
    h = int.from_bytes(hashlib.sha256(task.encode()).digest()[:4], "little")
    return (h ^ int(seed)) & 0xFFFFFFFF


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    halving_period: int = 10
    max_epochs: int = 50
    batch_size: int = 64
    seed: int = 0
    template_points: int = 32
    noise: float = 0.0
    n_train: int = 4096
    n_test: int = 1024
    hidden: tuple = (128, 128)
    loss: str = "mse"

    def __post_init__(self):
        for name in ("lr", "halving_period", "max_epochs", "batch_size", "template_points", "n_train", "n_test"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.noise < 0:
            raise InvalidInputError("noise must be non-negative")
        if self.loss not in LOSSES:
            raise InvalidInputError(f"unknown loss {self.loss!r}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


@dataclass
class FitReport:
    errors_deg: np.ndarray
    mean: float
    median: float
    curve: np.ndarray  # (steps, 2): threshold in degrees, accuracy
    auc: float
    final_loss: float
    wall_clock: float = field(default=0.0, compare=False)

    @classmethod
    def from_errors(cls, errors_deg, final_loss, wall_clock=0.0, max_threshold=60.0, steps=61):
        errors_deg = np.asarray(errors_deg, dtype=float)
        curve, auc = auc_curve(errors_deg, max_threshold, steps)
        return cls(errors_deg, float(errors_deg.mean()), float(np.median(errors_deg)), curve, auc,
                   float(final_loss), wall_clock)

    def __eq__(self, other):
        if not isinstance(other, FitReport):
            return NotImplemented
        return (
            np.array_equal(self.errors_deg, other.errors_deg)
            and np.array_equal(self.curve, other.curve)
            and (self.mean, self.median, self.auc) == (other.mean, other.median, other.auc)
            and (self.final_loss == other.final_loss or (math.isnan(self.final_loss) and math.isnan(other.final_loss)))
        )

    def accuracy_at(self, threshold_deg):
        return float(np.mean(self.errors_deg < threshold_deg))


def make_template(cfg):
    rng = np.random.default_rng(derive_seed(cfg.seed, "template"))
    return rng.uniform(-0.5, 0.5, (cfg.template_points, 3))


def make_dataset(cfg, template, n, task):
    """Uniform rotations and the flattened rotated template (plus Gaussian noise)."""
    rng = np.random.default_rng(derive_seed(cfg.seed, task))
    R = so3.random_rotations(n, rng)
    x = np.einsum("nij,pj->npi", R, template).reshape(n, -1)
    if cfg.noise > 0:
        x = x + cfg.noise * rng.standard_normal(x.shape)
    return R, x


def head_loss_and_grads(net, x, target, loss="mse"):
    """Loss over a batch and its gradients w.r.t. every network parameter."""
    y, cache = forward(net, x, return_cache=True)
    lv = LOSSES[loss](y, target)
    grads = backward(net, x, lv.gradient.reshape(y.shape), cache)
    return lv.value, grads


def build_nets(head, train):
    in_dim = 3 * train.template_points
    nets = []
    for k, sl in enumerate(head.head_slices()):
        width = sl.stop - sl.start
        seed = derive_seed(train.seed, f"init/{head.representation}/{head.mode}/{k}")
        nets.append(init_net((in_dim, *train.hidden, width), seed))
    return nets


def predict(nets, head, x):
    return np.concatenate([forward(n, x) for n in nets], axis=1) if len(nets) > 1 else forward(nets[0], x)


def rotation_errors_deg(head, R_pred, R_gt):
    if head.symmetric:
        return np.rad2deg(rotation_from_green_only(R_pred[:, :, 1], R_gt[:, :, 1]))
    return np.rad2deg(so3.geodesic_error(R_pred, R_gt))


def run_representation_experiment(head, train, log=None):
    """Train on seeded uniform rotations and report held-out geodesic errors (degrees).

    In decoupled mode each sub-term gets its own network and optimizer; the
    sub-term predictions are concatenated before decoding.
    """
    # overflow is detected explicitly below and reported as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(head, train, log)


def _run(head, train, log):
    t0 = time.perf_counter()
    codec = head.codec
    template = make_template(train)
    R_tr, X_tr = make_dataset(train, template, train.n_train, "train")
    R_te, X_te = make_dataset(train, template, train.n_test, "test")
    Y_tr = codec.encode(R_tr)
    slices = head.head_slices()
    nets = build_nets(head, train)
    states = [AdamState.for_params(n.params()) for n in nets]
    order_rng = np.random.default_rng(derive_seed(train.seed, "shuffle"))
    final_loss = math.nan
    for epoch in range(train.max_epochs):
        lr = train.lr * 0.5 ** (epoch // train.halving_period)
        perm = order_rng.permutation(train.n_train)
        total, count = 0.0, 0
        for start in range(0, train.n_train, train.batch_size):
            idx = perm[start: start + train.batch_size]
            xb = X_tr[idx]
            for k, sl in enumerate(slices):
                value, grads = head_loss_and_grads(nets[k], xb, Y_tr[idx, sl], train.loss)
                if not math.isfinite(value):
                    raise TrainingDivergedError("non-finite loss", epoch)
                try:
                    params, states[k] = adam_step(nets[k].params(), grads, states[k], lr)
                except TrainingDivergedError as exc:
                    raise TrainingDivergedError(str(exc), epoch) from None
                nets[k] = nets[k].with_params(params)
                total += value * len(idx)
            count += len(idx)
        final_loss = total / count
        if log is not None:
            log(f"epoch {epoch}: loss {final_loss:.6g}")
    pred = predict(nets, head, X_te)
    if not np.all(np.isfinite(pred)):
        raise TrainingDivergedError("non-finite predictions", train.max_epochs - 1)
    errs = rotation_errors_deg(head, codec.decode(pred), R_te)
    return FitReport.from_errors(errs, final_loss, time.perf_counter() - t0)


# --- FVR parameter search ----------------------------------------------------------------

L_VALUES = (1, 10, 50, 100, 200, 500, 1000)
ANGLES_DEG = tuple(range(0, 360, 30))


@dataclass
class GridCell:
    sweep: str  # "L" | "theta_g" | "theta_r"
    l: float
    theta_g_deg: float
    theta_r_deg: float
    mean_error: float | None = None
    median_error: float | None = None
    error: str | None = None

    @property
    def ok(self):
        return self.error is None

    @property
    def params(self):
        return FvrParams.from_degrees(self.theta_g_deg, self.theta_r_deg, self.l)

    def sort_key(self):
        return (self.mean_error, self.l, self.theta_g_deg, self.theta_r_deg)


@dataclass
class GridResult:
    best: GridCell
    best_report: FitReport
    cells: list


def _run_cell(args):
    cell, base, mode, symmetric = args
    head = HeadConfig(mode, "fvr", cell.params, symmetric)
    try:
        rep = run_representation_experiment(head, base)
    except (TrainingDivergedError, InvalidInputError, FloatingPointError) as exc:
        return replace(cell, error=f"{type(exc).__name__}: {exc}"), None
    return replace(cell, mean_error=rep.mean, median_error=rep.median), rep


def fvr_grid_search(base, mode="whole", symmetric=False, l_values=L_VALUES, angles_deg=ANGLES_DEG, map_fn=map):
    """Sequential FVR parameter search: L, then theta_g, then theta_r.

    Each sweep fixes the winners of the previous ones; ties go to the smaller
    parameter value. Symmetric categories search L only. Failed cells are kept
    in the table with their error and excluded from the argmin. ``map_fn`` may be
    a parallel map; results are consumed in submission order.
    """
    cells, reports = [], {}

    def sweep(name, todo):
        done = list(map_fn(_run_cell, [(c, base, mode, symmetric) for c in todo]))
        for c, rep in done:
            cells.append(c)
            if rep is not None:
                reports[(c.l, c.theta_g_deg, c.theta_r_deg)] = rep
        ok = [c for c, _ in done if c.ok]
        if not ok:
            raise TrainingDivergedError(f"every cell of the {name} sweep failed")
        return min(ok, key=GridCell.sort_key)

    best = sweep("L", [GridCell("L", float(l), 0.0, 0.0) for l in l_values])
    if not symmetric:
        best = sweep("theta_g", [GridCell("theta_g", best.l, float(a), 0.0) for a in angles_deg])
        best = sweep("theta_r", [GridCell("theta_r", best.l, best.theta_g_deg, float(a)) for a in angles_deg])
    return GridResult(best, reports[(best.l, best.theta_g_deg, best.theta_r_deg)], cells)
