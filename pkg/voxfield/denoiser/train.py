"""Sample-prediction training with semantic dropout."""
import logging
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from voxfield.autograd import tensor as ops
from voxfield.autograd.optim import AdamState, adam_step
from voxfield.autograd.tensor import Tensor, backward, recording
from voxfield.denoiser.corpus import Corpus
from voxfield.denoiser.network import Params, forward, init_params
from voxfield.diffusion.localset import LocalSet
from voxfield.diffusion.noise import q_sample
from voxfield.diffusion.schedule import NoiseSchedule
from voxfield.exceptions import EmptyBatchError, NonFiniteLossError
from voxfield.models import NULL_LABEL, TrainRunConfig
from voxfield.utils.rng import derive_rng

logger = logging.getLogger(__name__)

_BATCH_STREAM = 1
_NOISE_STREAM = 2


class StepResult(NamedTuple):
    loss: float
    params: Params
    opt_state: AdamState
    grads: Dict[str, np.ndarray]


class TrainResult(NamedTuple):
    params: Params
    losses: List[float]


def batch_loss(
    batch: Sequence[LocalSet],
    schedule: NoiseSchedule,
    params: Params,
    rng: np.random.Generator,
    config: TrainRunConfig,
) -> Tensor:
    """
    Mean over the batch of the MSE between predicted and clean tokens.

    Per set: t ~ U{1..T}, eps ~ N(0, I), and all labels become NULL with
    probability `cfg_dropout`.
    """
    dtype = np.dtype(config.dtype)
    total = None
    for local_set in batch:
        t = int(rng.integers(1, schedule.T + 1))
        eps = rng.standard_normal(local_set.tokens.shape)
        x_t = q_sample(local_set.tokens, t, eps, schedule)
        semantics = local_set.semantics
        if rng.random() < config.cfg_dropout:
            semantics = np.full(len(local_set), NULL_LABEL)
        prediction = forward(
            params, Tensor(x_t.astype(dtype)), t, semantics, local_set.centers, config
        )
        loss = ops.mse(prediction, local_set.tokens.astype(dtype))
        total = loss if total is None else total + loss
    return ops.scale(total, 1.0 / len(batch))


def train_step(
    batch: Sequence[LocalSet],
    schedule: NoiseSchedule,
    params: Params,
    opt_state: AdamState,
    rng: np.random.Generator,
    config: TrainRunConfig,
) -> StepResult:
    """
    One Adam step on a batch of local sets.

    :raises EmptyBatchError: `batch` is empty.
    :raises NonFiniteLossError: The loss is NaN or infinite.
    """
    if len(batch) == 0:
        raise EmptyBatchError('train_step needs at least one local set')
    with recording() as tape:
        loss = batch_loss(batch, schedule, params, rng, config)
    value = loss.item()
    if not np.isfinite(value):
        raise NonFiniteLossError('training loss became {}'.format(value))
    by_tensor = backward(tape, loss, wrt=params.values())
    grads = {name: by_tensor[param] for name, param in params.items()}
    new_params, new_state = adam_step(
        params,
        grads,
        opt_state,
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.eps,
    )
    return StepResult(value, new_params, new_state, grads)


def train(
    corpus: Corpus,
    config: TrainRunConfig,
    on_step: Optional[Callable[[int, float], None]] = None,
) -> TrainResult:
    """
    Train from scratch for `config.steps` steps.

    Batches and noise come from streams derived from `config.seed`.

    :param on_step: Called with (step, loss) after every step.
    """
    if corpus.token_dim != config.token_dim:
        raise ValueError(
            'corpus holds n={} tokens, config expects n={}'.format(corpus.n, config.n)
        )
    schedule = config.schedule()
    params = init_params(config.denoiser(), config.seed)
    state = AdamState.zeros(params)
    batch_rng = derive_rng(config.seed, _BATCH_STREAM)
    noise_rng = derive_rng(config.seed, _NOISE_STREAM)
    size_range = (config.set_size_min, config.set_size_max)
    losses = []
    for step in range(1, config.steps + 1):
        batch = corpus.sample(config.batch_size, size_range, batch_rng)
        result = train_step(batch, schedule, params, state, noise_rng, config)
        params, state = result.params, result.opt_state
        losses.append(result.loss)
        if on_step is not None:
            on_step(step, result.loss)
        if step % config.log_every == 0 or step == config.steps:
            logger.debug('step %d loss %.6f', step, result.loss)
    return TrainResult(params, losses)
