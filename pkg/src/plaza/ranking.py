"""Bridging model: regularized matrix factorization over the vote matrix.

Each observed vote r_un is modeled as

    r_un ~ mu + i_u + i_n + f_u . f_n

where i_n (the statement intercept) is the bridging score: what is left of
a statement's support once the participant/statement alignment captured by
the latent factors has been explained away. Statements that only one side
of the opinion space likes end up with a large |f_n| and a small intercept;
statements liked across the space keep their support in i_n.

Fitting minimizes

    sum_obs (r - mu - i_u - i_n - f_u.f_n)^2
        + lambda_i (mu^2 + sum i_u^2 + sum i_n^2)
        + lambda_f (sum |f_u|^2 + sum |f_n|^2)

by alternating exact ridge updates over the parameter blocks
(mu, {i_u}, {i_n}, {f_u}, {f_n}), which makes every epoch decrease the
objective and keeps the fit fully deterministic for a given seed. Pass
votes are excluded from the observed set: a pass carries no agreement
signal and would only drag intercepts toward zero.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInput, EmptyMatrix, UnknownParticipant, UnknownStatement
from .model import VoteMatrix


@dataclass(frozen=True)
class BridgingConfig:
    latent_dim: int = 1
    lambda_intercept: float = 0.15
    lambda_factor: float = 0.03
    max_epochs: int = 1000
    tolerance: float = 1e-6
    seed: int = 0
    bridging_threshold: float = 0.40

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if not (self.lambda_intercept >= self.lambda_factor >= 0.0):
            raise ValueError("need lambda_intercept >= lambda_factor >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    def to_dict(self) -> dict:
        return {
            "latent_dim": self.latent_dim,
            "lambda_intercept": self.lambda_intercept,
            "lambda_factor": self.lambda_factor,
            "max_epochs": self.max_epochs,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "bridging_threshold": self.bridging_threshold,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BridgingConfig":
        return cls(**{k: data[k] for k in cls().to_dict() if k in data})


@dataclass(frozen=True)
class BridgingModel:
    mu: float
    participant_intercepts: Mapping[str, float]
    statement_intercepts: Mapping[str, float]
    participant_factors: Mapping[str, tuple[float, ...]]
    statement_factors: Mapping[str, tuple[float, ...]]
    training_loss: float
    epochs_run: int
    config: BridgingConfig
    loss_history: tuple[float, ...] = field(default_factory=tuple)


class RankStatus(str, Enum):
    BRIDGING = "Bridging"
    NEUTRAL = "Neutral"
    DIVISIVE = "Divisive"


@dataclass(frozen=True)
class RankedStatement:
    statement: str
    intercept: float
    factor_norm: float
    status: RankStatus


def _entity_seed(seed: int, kind: str, entity_id: str) -> int:
    """Stable 64-bit stream seed per entity.

    Tying initialization to the entity id (not its row/column position)
    makes the fit equivariant under row and column reordering.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<q", seed))
    h.update(kind.encode())
    h.update(entity_id.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def _init_factors(ids: Sequence[str], dim: int, seed: int, kind: str) -> np.ndarray:
    out = np.empty((len(ids), dim), dtype=np.float64)
    for i, entity_id in enumerate(ids):
        rng = np.random.default_rng(_entity_seed(seed, kind, entity_id))
        out[i] = rng.uniform(-0.1, 0.1, size=dim)
    return out


def _ridge_means(
    idx: np.ndarray, resid: np.ndarray, deg: np.ndarray, lam: float, n: int
) -> np.ndarray:
    """Exact intercept update: per-row residual sum over (count + lam)."""
    sums = np.bincount(idx, weights=resid, minlength=n)
    denom = deg + lam
    return np.divide(sums, denom, out=np.zeros(n), where=denom > 0)


def _solve_factor_block(
    rows: np.ndarray,
    other_factors: np.ndarray,
    resid: np.ndarray,
    n_rows: int,
    dim: int,
    lam: float,
    current: np.ndarray,
) -> np.ndarray:
    """Exact ridge update of one factor block, batched over rows.

    Solves (sum f f^T + lam I) x = sum f * resid per row; rows with no
    observations keep their current value when lam == 0 (the objective
    does not constrain them) and shrink to zero otherwise.
    """
    ata = np.zeros((n_rows, dim, dim), dtype=np.float64)
    atb = np.zeros((n_rows, dim), dtype=np.float64)
    outer = other_factors[:, :, None] * other_factors[:, None, :]
    np.add.at(ata, rows, outer)
    np.add.at(atb, rows, other_factors * resid[:, None])
    counts = np.bincount(rows, minlength=n_rows)
    ata += lam * np.eye(dim)[None, :, :]
    if lam == 0.0:
        holes = counts == 0
        if holes.any():
            ata[holes] = np.eye(dim)[None, :, :]
            atb[holes] = current[holes]
    return np.linalg.solve(ata, atb[:, :, None])[:, :, 0]


def fit_bridging_model(matrix: VoteMatrix, config: BridgingConfig | None = None) -> BridgingModel:
    """Fit the factorization on all non-Pass entries of the matrix.

    Deterministic: identical matrix + config + seed give a bit-identical
    model. Stops when the relative change of the full objective falls
    below ``config.tolerance`` or after ``config.max_epochs`` epochs.
    """
    config = config or BridgingConfig()
    n_p = len(matrix.participants)
    n_s = len(matrix.statements)
    if n_p < 2 or n_s < 2:
        raise DegenerateInput(f"need at least 2 participants and 2 statements, got {n_p}x{n_s}")
    rows, cols, vals = matrix.to_coo()
    observed = vals != 0.0
    rows, cols, vals = rows[observed], cols[observed], vals[observed]
    if len(vals) == 0:
        raise EmptyMatrix("no non-Pass entries to fit on")

    dim = config.latent_dim
    lam_i = config.lambda_intercept
    lam_f = config.lambda_factor
    mu = 0.0
    i_p = np.zeros(n_p)
    i_s = np.zeros(n_s)
    f_p = _init_factors(matrix.participants, dim, config.seed, "participant")
    f_s = _init_factors(matrix.statements, dim, config.seed, "statement")
    deg_p = np.bincount(rows, minlength=n_p)
    deg_s = np.bincount(cols, minlength=n_s)

    def factor_dot() -> np.ndarray:
        return np.einsum("ij,ij->i", f_p[rows], f_s[cols])

    def objective() -> float:
        resid = vals - mu - i_p[rows] - i_s[cols] - factor_dot()
        reg_i = lam_i * (mu * mu + float(i_p @ i_p) + float(i_s @ i_s))
        reg_f = lam_f * (float(np.sum(f_p * f_p)) + float(np.sum(f_s * f_s)))
        return float(resid @ resid) + reg_i + reg_f

    history: list[float] = []
    prev = np.inf
    epochs = 0
    for epoch in range(config.max_epochs):
        epochs = epoch + 1
        dots = factor_dot()
        mu = float(np.sum(vals - i_p[rows] - i_s[cols] - dots)) / (len(vals) + lam_i)

        resid = vals - mu - i_s[cols] - dots
        i_p = _ridge_means(rows, resid, deg_p, lam_i, n_p)

        resid = vals - mu - i_p[rows] - dots
        i_s = _ridge_means(cols, resid, deg_s, lam_i, n_s)

        resid = vals - mu - i_p[rows] - i_s[cols]
        f_p = _solve_factor_block(rows, f_s[cols], resid, n_p, dim, lam_f, f_p)
        f_s = _solve_factor_block(cols, f_p[rows], resid, n_s, dim, lam_f, f_s)

        loss = objective()
        history.append(loss)
        if np.isfinite(prev) and abs(prev - loss) < config.tolerance * max(abs(prev), 1e-12):
            break
        prev = loss

    return BridgingModel(
        mu=mu,
        participant_intercepts={p: float(i_p[i]) for i, p in enumerate(matrix.participants)},
        statement_intercepts={s: float(i_s[i]) for i, s in enumerate(matrix.statements)},
        participant_factors={p: tuple(f_p[i]) for i, p in enumerate(matrix.participants)},
        statement_factors={s: tuple(f_s[i]) for i, s in enumerate(matrix.statements)},
        training_loss=history[-1],
        epochs_run=epochs,
        config=config,
        loss_history=tuple(history),
    )


def predict(model: BridgingModel, participant_id: str, statement_id: str) -> float:
    if participant_id not in model.participant_intercepts:
        raise UnknownParticipant(participant_id)
    if statement_id not in model.statement_intercepts:
        raise UnknownStatement(statement_id)
    f_u = model.participant_factors[participant_id]
    f_n = model.statement_factors[statement_id]
    return (
        model.mu
        + model.participant_intercepts[participant_id]
        + model.statement_intercepts[statement_id]
        + sum(a * b for a, b in zip(f_u, f_n))
    )


def bridging_rank(model: BridgingModel, statements: Iterable[str]) -> list[RankedStatement]:
    """Statements ordered by intercept descending, ties by id ascending."""
    threshold = model.config.bridging_threshold
    ranked = []
    for sid in statements:
        if sid not in model.statement_intercepts:
            raise UnknownStatement(sid)
        intercept = model.statement_intercepts[sid]
        factor = model.statement_factors[sid]
        norm = float(np.sqrt(sum(x * x for x in factor)))
        if intercept >= threshold:
            status = RankStatus.BRIDGING
        elif intercept <= -threshold:
            status = RankStatus.DIVISIVE
        else:
            status = RankStatus.NEUTRAL
        ranked.append(RankedStatement(sid, intercept, norm, status))
    ranked.sort(key=lambda r: (-r.intercept, r.statement))
    return ranked


# -- audit export --------------------------------------------------------------


def model_to_dict(model: BridgingModel) -> dict:
    return {
        "mu": model.mu,
        "participant_intercepts": dict(model.participant_intercepts),
        "statement_intercepts": dict(model.statement_intercepts),
        "participant_factors": {k: list(v) for k, v in model.participant_factors.items()},
        "statement_factors": {k: list(v) for k, v in model.statement_factors.items()},
        "training_loss": model.training_loss,
        "epochs_run": model.epochs_run,
        "config": model.config.to_dict(),
        "loss_history": list(model.loss_history),
    }


def model_from_dict(data: Mapping) -> BridgingModel:
    return BridgingModel(
        mu=data["mu"],
        participant_intercepts=dict(data["participant_intercepts"]),
        statement_intercepts=dict(data["statement_intercepts"]),
        participant_factors={k: tuple(v) for k, v in data["participant_factors"].items()},
        statement_factors={k: tuple(v) for k, v in data["statement_factors"].items()},
        training_loss=data["training_loss"],
        epochs_run=data["epochs_run"],
        config=BridgingConfig.from_dict(data["config"]),
        loss_history=tuple(data.get("loss_history", ())),
    )


def export_model(model: BridgingModel) -> str:
    """Model as a JSON document for audit."""
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True)


def import_model(text: str) -> BridgingModel:
    return model_from_dict(json.loads(text))
