"""Plateau-triggered learning-rate annealing with best-checkpoint restore.

A training loop reports an evaluation metric (higher is better, e.g. on a
0-100 scale) after each evaluation epoch.  The scheduler tracks the best
value seen; when no evaluation has beaten the best by more than a
significance margin (epsilon) for a full patience window, it orders a
restore of the best checkpoint with the learning rate cut by a fixed
factor.  Each reduction also halves epsilon and the patience window, so
later stages react faster to smaller gains.  After the reduction budget is
spent, the next stagnation stops training.  No optimization happens here;
the caller owns the training loop and checkpoint storage.
"""

import csv
import json
from dataclasses import dataclass, field


class OutOfWarmupError(ValueError):
    """Raised when the warmup schedule is asked about a step outside it."""


class OutOfOrderEpochError(ValueError):
    """Raised when observations arrive with non-increasing epoch numbers."""


@dataclass(frozen=True)
class AnnealingConfig:
    initial_lr: float = 0.02
    initial_patience: int = 38
    initial_epsilon: float = 5.0
    warmup_iterations: int = 1000
    max_reductions: int = 3
    reduction_factor: float = 10.0
    eval_period_epochs: int = 2

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if self.initial_patience < 1:
            raise ValueError("initial_patience must be >= 1")
        if self.initial_epsilon <= 0:
            raise ValueError("initial_epsilon must be positive")
        if self.warmup_iterations < 1:
            raise ValueError("warmup_iterations must be >= 1")
        if self.max_reductions < 1:
            raise ValueError("max_reductions must be >= 1")
        if self.reduction_factor <= 1:
            raise ValueError("reduction_factor must exceed 1")
        if self.eval_period_epochs < 1:
            raise ValueError("eval_period_epochs must be >= 1")


def warmup_lr(config: AnnealingConfig, iteration: int) -> float:
    """Linear ramp from 0 to the initial rate over the warmup span."""
    if not 0 <= iteration <= config.warmup_iterations:
        raise OutOfWarmupError(
            f"iteration {iteration} outside warmup span "
            f"[0, {config.warmup_iterations}]")
    return config.initial_lr * iteration / config.warmup_iterations


@dataclass(frozen=True)
class Decision:
    """Scheduler verdict for one observation.

    The lr/epsilon/patience fields carry the values in effect after the
    decision takes hold; restore decisions point at ``best_tag``, the
    checkpoint of the highest metric seen so far (ties keep the earliest).
    """

    action: str  # "continue", "reduce_and_restore", or "stop"
    epoch: int
    lr: float
    epsilon: float
    patience: int
    reductions: int
    best_metric: float
    best_tag: str

    def to_obj(self) -> dict:
        return {
            "action": self.action,
            "epoch": self.epoch,
            "lr": self.lr,
            "epsilon": self.epsilon,
            "patience": self.patience,
            "reductions": self.reductions,
            "best_metric": self.best_metric,
            "best_tag": self.best_tag,
        }


@dataclass
class AnnealingState:
    """Mutable scheduler; feed it evaluations in epoch order via observe()."""

    config: AnnealingConfig = field(default_factory=AnnealingConfig)
    reductions: int = 0
    best_metric: float = float("-inf")
    best_tag: str = ""
    last_progress_epoch: int | None = None
    last_epoch: int | None = None
    stopped: bool = False

    @property
    def lr(self) -> float:
        return self.config.initial_lr / \
            self.config.reduction_factor ** self.reductions

    @property
    def epsilon(self) -> float:
        return self.config.initial_epsilon / 2.0 ** self.reductions

    @property
    def patience(self) -> int:
        p = self.config.initial_patience
        for _ in range(self.reductions):
            p = max(1, p // 2)
        return p

    @property
    def phase(self) -> str:
        return "finished" if self.stopped else "training"

    def observe(self, epoch: int, metric: float, tag: str = "") -> Decision:
        """Record one evaluation and return the scheduler's decision.

        ``tag`` names the checkpoint written at this evaluation.  A metric
        beating the best by more than epsilon resets the stagnation window;
        any strict improvement still claims the best checkpoint.
        """
        if self.stopped:
            raise OutOfOrderEpochError("scheduler already stopped")
        if self.last_epoch is not None and epoch <= self.last_epoch:
            raise OutOfOrderEpochError(
                f"epoch {epoch} not after previous epoch {self.last_epoch}")
        self.last_epoch = epoch
        if self.last_progress_epoch is None:
            # The first observation opens the window and seeds the best.
            self.last_progress_epoch = epoch
            self.best_metric = metric
            self.best_tag = tag
            return self._decision("continue", epoch)

        if metric > self.best_metric + self.epsilon:
            self.last_progress_epoch = epoch
            self.best_metric = metric
            self.best_tag = tag
        elif metric > self.best_metric:
            self.best_metric = metric
            self.best_tag = tag

        if epoch - self.last_progress_epoch >= self.patience:
            if self.reductions >= self.config.max_reductions:
                self.stopped = True
                return self._decision("stop", epoch)
            self.reductions += 1
            self.last_progress_epoch = epoch
            return self._decision("reduce_and_restore", epoch)
        return self._decision("continue", epoch)

    def _decision(self, action: str, epoch: int) -> Decision:
        return Decision(
            action=action,
            epoch=epoch,
            lr=self.lr,
            epsilon=self.epsilon,
            patience=self.patience,
            reductions=self.reductions,
            best_metric=self.best_metric,
            best_tag=self.best_tag,
        )


def simulate(config: AnnealingConfig, trace) -> list:
    """Replay a (epoch, metric[, tag]) trace; returns all decisions.

    Stops consuming the trace after a stop decision.
    """
    state = AnnealingState(config=config)
    decisions = []
    for entry in trace:
        epoch, metric = int(entry[0]), float(entry[1])
        tag = str(entry[2]) if len(entry) > 2 else f"epoch_{epoch}"
        decision = state.observe(epoch, metric, tag)
        decisions.append(decision)
        if decision.action == "stop":
            break
    return decisions


def read_trace_csv(path) -> list:
    """Read (epoch, metric[, tag]) rows; a header row is skipped if present."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and not _is_number(row[0])):
                continue
            if len(row) < 2:
                raise ValueError(f"trace row {lineno} needs epoch and metric")
            entry = (int(row[0]), float(row[1]))
            if len(row) > 2 and row[2]:
                entry = entry + (row[2],)
            rows.append(entry)
    return rows


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_decision_log(decisions, path) -> None:
    """One JSON object per line, in observation order."""
    with open(path, "w", encoding="utf-8") as fh:
        for decision in decisions:
            fh.write(json.dumps(decision.to_obj(), ensure_ascii=False))
            fh.write("\n")
