"""Structure learning by alternating pruning, growing and finetuning"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from circuit.dataset import Dataset
from circuit.evaluation import log_likelihood
from circuit.flows import aggregate_flows
from circuit.model import Circuit
from utils.config import CompressConfig, EmConfig, LoopConfig

from .em import em_stochastic
from .grower import GrowConfig, grow
from .pruner import PruneHeuristic, prune
from .trainlog import TrainLog

logger = logging.getLogger(__name__)

# Slack on the compression budget so a zero budget tolerates rounding.
BUDGET_SLACK = 1e-9


def structure_learn(
    initial: Circuit,
    train: Dataset,
    valid: Dataset,
    loop: LoopConfig,
    em: EmConfig,
) -> Tuple[Circuit, TrainLog]:
    """
    Iterate flow pruning, growing and mini-batch EM finetuning.

    Each iteration aggregates flows of the current circuit on ``train``,
    prunes the ``loop.prune_fraction`` edges with the least flow, grows the
    result back and finetunes it. With ``loop.keep_capacity`` the pruned size
    is chosen so that growing restores the initial parameter count. A pruned
    circuit that gives some training row zero likelihood cannot be finetuned;
    that iteration counts as not improving. The loop stops after
    ``loop.max_iterations`` or once validation log-likelihood has not
    improved for ``loop.patience`` consecutive iterations.

    Returns:
        The circuit with the best validation log-likelihood seen (the initial
        one included) and the log of all iterations
    """
    log = TrainLog(initial.num_vars)
    best, best_valid = initial, log_likelihood(initial, valid)
    log.record("initial", log_likelihood(initial, train), initial.size, valid_ll=best_valid)
    target = initial.size if loop.keep_capacity else None
    current = initial
    stale = 0

    for iteration in range(1, loop.max_iterations + 1):
        flows = aggregate_flows(current, train)
        pruned, _ = prune(current, PruneHeuristic.EFLOW, loop.prune_fraction, flows=flows, growth_target=target)
        pruned_ll = log_likelihood(pruned, train)
        log.record("prune", pruned_ll, pruned.size, iteration=iteration, advance=False)
        if math.isinf(pruned_ll):
            logger.warning(f"Iteration {iteration}: pruning left training rows with zero likelihood")
            score = -math.inf
        else:
            grown = grow(pruned, GrowConfig(sigma2=loop.grow_sigma2, seed=loop.seed + iteration))
            log.record(
                "grow", log_likelihood(grown, train), grown.size, iteration=iteration, advance=False
            )
            tuning = em.model_copy(update={"seed": em.seed + iteration})
            current, tune_log = em_stochastic(
                grown, train, tuning, valid=valid, iteration=iteration, phase="finetune"
            )
            log.extend(tune_log)
            score = log_likelihood(current, valid)
            logger.info(
                f"Iteration {iteration}: {current.size} parameters, valid LL {score:.6f} "
                f"(best {best_valid:.6f})"
            )
        if score > best_valid:
            best, best_valid, stale = current, score, 0
        else:
            stale += 1
            if stale >= loop.patience:
                logger.info(f"No validation improvement for {stale} iterations; stopping")
                break
    return best, log


@dataclass(frozen=True)
class CompressResult:
    """
    Attributes:
        circuit: Smallest circuit within the log-likelihood budget
        rate: ``1 - |C| / |C_initial|``
        log: Training log of all steps
    """
    circuit: Circuit
    rate: float
    log: TrainLog


def compress(
    circuit: Circuit,
    train: Dataset,
    config: CompressConfig,
    em: EmConfig,
    valid: Optional[Dataset] = None,
) -> CompressResult:
    """
    Repeatedly prune a fraction of the edges and finetune.

    The loop keeps the last circuit whose training log-likelihood after
    finetuning is at least ``LL0 - ll_budget * |LL0|``, where ``LL0`` is the
    log-likelihood of the input circuit. A pruned circuit that gives some
    training row zero likelihood breaks the budget before finetuning. If the
    first step already breaks the budget, the input circuit is returned with
    rate 0.
    """
    log = TrainLog(circuit.num_vars)
    base = log_likelihood(circuit, train)
    floor = base - config.ll_budget * abs(base) - BUDGET_SLACK
    log.record("initial", base, circuit.size)
    current = circuit

    for step in range(1, config.max_steps + 1):
        if current.size < 2:
            break
        flows = aggregate_flows(current, train)
        pruned, _ = prune(current, PruneHeuristic.EFLOW, config.step_fraction, flows=flows)
        if pruned.size == current.size:
            logger.info(f"Step {step} removes no edges; stopping")
            break
        pruned_ll = log_likelihood(pruned, train)
        log.record("prune", pruned_ll, pruned.size, iteration=step, advance=False)
        if math.isinf(pruned_ll):
            logger.info(f"Step {step} breaks the budget (training rows with zero likelihood)")
            break
        tuning = em.model_copy(update={"seed": em.seed + step})
        tuned, tune_log = em_stochastic(pruned, train, tuning, valid=valid, iteration=step, phase="finetune")
        log.extend(tune_log)
        score = log_likelihood(tuned, train)
        if score < floor:
            logger.info(f"Step {step} breaks the budget (train LL {score:.6f} < {floor:.6f})")
            break
        current = tuned
        logger.info(f"Step {step}: {current.size} parameters, train LL {score:.6f}")

    rate = 1.0 - current.size / circuit.size if circuit.size else 0.0
    logger.info(f"Compressed {circuit.size} -> {current.size} parameters (rate {rate:.4f})")
    return CompressResult(circuit=current, rate=rate, log=log)
