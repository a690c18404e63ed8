"""
The two-branch toy one-shot model

    o(x) = w_r^T (alpha0 x + (1 - alpha0) W x)

trained with logistic loss on 2-D Gaussian mixtures y x ~ N(mu e, sigma^2 I),
e = (1, 1) / sqrt(2). The weights (W, w_r) follow the training loss, alpha0
follows the validation loss. ||w_r|| = r is restored after every weight
step; every coordinate of {W x} over the training set is rescaled to unit
variance at the end of every epoch.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from darts_plus.errors import DatasetError, NonFiniteError
from darts_plus.lemma.config import LemmaConfig
from darts_plus.logs import get_logger
from darts_plus.tensor import Graph, Tensor, sgd_state, sgd_step

logger = get_logger(__name__)

E = np.array([1.0, 1.0]) / np.sqrt(2.0)
ALPHA_MARGIN = 1e-6

# seed streams for the three data sets of one config
TRAIN_STREAM, VAL_STREAM, HELDOUT_STREAM = 0, 1, 2


def fixed_point_eta(mu: float, sigma: float) -> float:
    """Scale of W = eta e e^T that gives {W x} unit variance; 2 / sqrt(2 + mu^2) when normalized."""
    return float(np.sqrt(2.0 / (mu * mu + sigma * sigma)))


@dataclass
class LemmaModel:
    alpha0: float
    W: np.ndarray
    w_r: np.ndarray
    r: float
    e: np.ndarray = field(default_factory=lambda: E.copy())

    @property
    def alpha1(self) -> float:
        return 1.0 - self.alpha0

    @property
    def W_alpha(self) -> np.ndarray:
        return self.alpha0 * np.eye(2) + self.alpha1 * self.W

    @property
    def v(self) -> np.ndarray:
        return self.W_alpha.T @ self.w_r

    @classmethod
    def at_fixed_point(cls, r: float, alpha0: float, mu_t: float, sigma_t: float) -> "LemmaModel":
        eta = fixed_point_eta(mu_t, sigma_t)
        return cls(alpha0=alpha0, W=eta * np.outer(E, E), w_r=r * E.copy(), r=r)

    @classmethod
    def initialize(cls, config: LemmaConfig, rng: np.random.Generator) -> "LemmaModel":
        if config.start == "fixed_point":
            return cls.at_fixed_point(config.r, config.alpha0_init, config.mu_t, config.sigma_t)
        # random start with e^T w_r > 0 and every row of W positive along e
        direction = rng.standard_normal(2)
        direction *= np.sign(direction @ E) or 1.0
        W = rng.standard_normal((2, 2))
        W *= np.where(W @ E < 0.0, -1.0, 1.0)[:, None]
        return cls(
            alpha0=config.alpha0_init,
            W=W,
            w_r=config.r * direction / np.linalg.norm(direction),
            r=config.r,
        )

    def copy(self) -> "LemmaModel":
        return LemmaModel(self.alpha0, self.W.copy(), self.w_r.copy(), self.r, self.e.copy())

    def project(self) -> None:
        """Restore ||w_r|| = r and alpha0 inside (0, 1)."""
        norm = np.linalg.norm(self.w_r)
        if norm > 0.0:
            self.w_r = self.w_r * (self.r / norm)
        self.alpha0 = float(np.clip(self.alpha0, ALPHA_MARGIN, 1.0 - ALPHA_MARGIN))

    def normalize_outputs(self, x: np.ndarray) -> None:
        """Rescale each row of W so the matching coordinate of {W x} has unit variance."""
        for i in range(2):
            std = np.std(x @ self.W[i])
            if std > 0.0:
                self.W[i] = self.W[i] / std

    def outputs(self, x: np.ndarray) -> np.ndarray:
        return x @ self.v


def gen_mixture(mu: float, sigma: float, n: int, seed: int | Sequence[int] = 0) -> tuple[np.ndarray, np.ndarray]:
    """n/2 samples per label y in {+1, -1} with x = y (mu e + sigma eps)."""
    if n % 2 or n <= 0:
        raise DatasetError(f"mixture size must be a positive even number, got {n}")
    rng = np.random.default_rng(seed)
    y = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
    x = y[:, None] * (mu * E[None, :] + sigma * rng.standard_normal((n, 2)))
    return x, y


def lemma_loss(g: Graph, params: "LemmaParams", x: np.ndarray, y: np.ndarray) -> Tensor:
    """Mean of log(1 + exp(-y o(x))) on the graph."""
    n = x.shape[0]
    wr_row = g.forward_op("reshape", [params.w_r], shape=(1, 2))
    wr_W = g.forward_op("matmul", [wr_row, params.W])
    alpha1 = g.forward_op("shift", [g.forward_op("scale", [params.alpha0], factor=-1.0)], value=1.0)
    v = g.forward_op(
        "add",
        [g.forward_op("scalar_mul", [params.alpha0, wr_row]), g.forward_op("scalar_mul", [alpha1, wr_W])],
    )
    o = g.forward_op("matmul", [Tensor(x), g.forward_op("reshape", [v], shape=(2, 1))])
    margin = g.forward_op("mul", [g.forward_op("reshape", [o], shape=(n,)), Tensor(y)])
    return g.forward_op("mean", [g.forward_op("softplus", [g.forward_op("scale", [margin], factor=-1.0)])])


@dataclass
class LemmaParams:
    """The model's values as engine parameters."""

    alpha0: Tensor
    W: Tensor
    w_r: Tensor

    @classmethod
    def of(cls, model: LemmaModel) -> "LemmaParams":
        return cls(
            Tensor.parameter([model.alpha0], name="alpha0"),
            Tensor.parameter(model.W, name="W"),
            Tensor.parameter(model.w_r, name="w_r"),
        )

    def weights(self) -> list[Tensor]:
        return [self.W, self.w_r]

    def write_back(self, model: LemmaModel) -> None:
        model.alpha0 = float(self.alpha0.data[0])
        model.W = self.W.data.copy()
        model.w_r = self.w_r.data.copy()


def lemma_gradients(model: LemmaModel, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Autodiff (dL/dalpha0, dL/dW, dL/dw_r) of the mean logistic loss."""
    params = LemmaParams.of(model)
    g = Graph()
    g.backward(lemma_loss(g, params, x, y))
    return float(params.alpha0.grad[0]), params.W.grad.copy(), params.w_r.grad.copy()


@dataclass
class LemmaEpoch:
    epoch: int
    alpha0: float
    W: list[list[float]]
    w_r: list[float]
    train_loss: float
    val_loss: float


@dataclass
class LemmaTrajectory:
    config: LemmaConfig
    epochs: list[LemmaEpoch]
    model: LemmaModel

    @property
    def alpha0(self) -> np.ndarray:
        return np.array([record.alpha0 for record in self.epochs])


def _loss_value(model: LemmaModel, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, -y * model.outputs(x))))


def _epoch_record(epoch: int, model: LemmaModel, data: dict) -> LemmaEpoch:
    return LemmaEpoch(
        epoch=epoch,
        alpha0=model.alpha0,
        W=model.W.tolist(),
        w_r=model.w_r.tolist(),
        train_loss=_loss_value(model, *data["train"]),
        val_loss=_loss_value(model, *data["val"]),
    )


def lemma_datasets(config: LemmaConfig) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    return {
        "train": gen_mixture(config.mu_t, config.sigma_t, config.n_train, [config.seed, TRAIN_STREAM]),
        "val": gen_mixture(config.mu_v, config.sigma_v, config.n_val, [config.seed, VAL_STREAM]),
        "heldout": gen_mixture(config.mu_t, config.sigma_t, config.n_heldout, [config.seed, HELDOUT_STREAM]),
    }


def train_lemma_bilevel(config: LemmaConfig, init: LemmaModel | None = None) -> LemmaTrajectory:
    """
    Full-batch alternating descent: per step one weight update on the
    training set, then one alpha0 update on the validation set. Epoch 0 of
    the trajectory is the starting point.
    """
    data = lemma_datasets(config)
    x_train, y_train = data["train"]
    x_val, y_val = data["val"]
    model = init.copy() if init is not None else LemmaModel.initialize(config, np.random.default_rng(config.seed))
    model.project()
    if config.train_weights:
        model.normalize_outputs(x_train)

    weight_opt = sgd_state(config.weight_lr, momentum=0.0, weight_decay=0.0)
    arch_opt = sgd_state(config.arch_lr, momentum=0.0, weight_decay=0.0)
    epochs = [_epoch_record(0, model, data)]
    step = 0
    for epoch in range(1, config.epochs + 1):
        for _ in range(config.steps_per_epoch):
            step += 1
            try:
                if config.train_weights:
                    params = LemmaParams.of(model)
                    g = Graph()
                    g.backward(lemma_loss(g, params, x_train, y_train))
                    sgd_step(weight_opt, params.weights())
                    params.write_back(model)
                    model.project()
                params = LemmaParams.of(model)
                g = Graph()
                g.backward(lemma_loss(g, params, x_val, y_val))
                sgd_step(arch_opt, [params.alpha0])
                params.write_back(model)
                model.project()
            except NonFiniteError as exc:
                raise NonFiniteError(f"lemma training ({exc.where})", step) from exc
            if not (np.all(np.isfinite(model.W)) and np.all(np.isfinite(model.w_r))):
                raise NonFiniteError("lemma weights", step)
        if config.train_weights:
            model.normalize_outputs(x_train)
        record = _epoch_record(epoch, model, data)
        epochs.append(record)
        logger.debug(f"lemma epoch {epoch}: alpha0 {record.alpha0:.6f}, train loss {record.train_loss:.5f}")
    logger.info(f"lemma training finished after {config.epochs} epochs: alpha0 {model.alpha0:.6f}")
    return LemmaTrajectory(config, epochs, model)


@dataclass
class FixedPointDiagnostics:
    cos_wr_e: float
    eta: float
    target_eta: float
    eta_rel_error: float
    tx_rel_error: float

    def to_json_dict(self) -> dict:
        return dict(vars(self))


def fixed_point_diagnostics(model: LemmaModel, config: LemmaConfig) -> FixedPointDiagnostics:
    """How close trained weights are to w_r = r e, W = eta e e^T, measured on held-out points."""
    x, _ = lemma_datasets(config)["heldout"]
    target = fixed_point_eta(config.mu_t, config.sigma_t)
    eta = float(E @ model.W @ E)
    t_x = target * (x @ E)
    residual = np.linalg.norm(x @ model.W.T - t_x[:, None] * E[None, :], axis=1)
    return FixedPointDiagnostics(
        cos_wr_e=float(model.w_r @ E / np.linalg.norm(model.w_r)),
        eta=eta,
        target_eta=target,
        eta_rel_error=abs(eta - target) / target,
        tx_rel_error=float(residual.mean() / np.abs(t_x).mean()),
    )
