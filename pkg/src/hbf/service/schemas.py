"""Pydantic request/response models for the HTTP API.

Memories travel as base64 of the same binary format used on disk, so a
client can save a response blob verbatim and reload it later. Keys,
values, and labels are UTF-8 strings on the wire.
"""

from __future__ import annotations

import base64
import binascii
from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..errors import PersistenceError
from ..index import HbfMemory
from ..storage import deserialize_memory, serialize_memory


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str


class RecordIn(BaseModel):
    key: str = Field(min_length=1)
    value: str = Field(min_length=1)


class MemoryOut(BaseModel):
    blob: str
    dim: int
    rho: float
    item_count: int
    key_seed: int
    value_seed: int

    @classmethod
    def from_memory(cls, mem: HbfMemory) -> "MemoryOut":
        return cls(
            blob=base64.b64encode(serialize_memory(mem)).decode("ascii"),
            dim=mem.dim,
            rho=mem.gain,
            item_count=mem.item_count,
            key_seed=mem.key_seed,
            value_seed=mem.value_seed,
        )


def memory_from_blob(blob: str) -> HbfMemory:
    try:
        raw = base64.b64decode(blob, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise PersistenceError(f"memory blob is not valid base64: {exc}") from exc
    return deserialize_memory(raw)


class BuildRequest(BaseModel):
    records: list[RecordIn]
    dim: int = Field(ge=2)
    rho: Optional[float] = Field(default=None, gt=0)
    key_seed: int = Field(ge=0)
    value_seed: int = Field(ge=0)


class InsertRequest(BaseModel):
    memory: str
    key: str = Field(min_length=1)
    value: str = Field(min_length=1)


class DecoderModel(BaseModel):
    tau: float
    delta: float = Field(default=0.0, ge=0)
    top_k: int = Field(default=2, ge=2)


class QueryRequest(BaseModel):
    memory: str
    key: str = Field(min_length=1)
    labels: list[str] = Field(min_length=2)
    decoder: Optional[DecoderModel] = None
    # auto-calibration knobs, used only when decoder is omitted
    epsilon: float = Field(default=0.01, gt=0, lt=1)
    probe_count: int = Field(default=256, ge=100)
    seed: int = 0
    members: Optional[list[RecordIn]] = None


class ScoredLabel(BaseModel):
    label: str
    score: float


class QueryResponse(BaseModel):
    hit: bool
    label: Optional[str]
    best_score: float
    runner_up: float
    top: list[ScoredLabel]
    # None when nothing was stored, so no decoder could be calibrated
    decoder: Optional[DecoderModel]


class CalibrateRequest(BaseModel):
    memory: str
    labels: list[str] = Field(min_length=1)
    probe_count: int = Field(default=1000, ge=100)
    epsilon: float = Field(gt=0, lt=1)
    seed: int = 0
    members: Optional[list[RecordIn]] = None


class CalibrateResponse(BaseModel):
    tau: float
    delta: float
    top_k: int
    sigma_hat: float
    mu_hat: Optional[float]
    probe_count: int
    epsilon: float


class AmplifiedQueryRequest(BaseModel):
    memories: list[str] = Field(min_length=1)
    key: str = Field(min_length=1)
    labels: list[str] = Field(min_length=2)
    decoder: DecoderModel


class NoiseIn(BaseModel):
    kind: Literal["mem-flip", "mem-gauss", "key-hamming", "key-gauss"]
    amount: float


class ExperimentRequest(BaseModel):
    dim: int = Field(ge=2)
    items: int = Field(ge=0)
    labels: int = Field(ge=2)
    trials: int = Field(ge=1)
    seed: int = 0
    rho: Optional[float] = Field(default=None, gt=0)
    noise: list[NoiseIn] = Field(default_factory=list)
    decoder: Optional[DecoderModel] = None
    epsilon: float = Field(default=0.01, gt=0, lt=1)
    probe_count: int = Field(default=200, ge=100)


class CapacityRequest(ExperimentRequest):
    items: int = Field(default=0, ge=0)  # ignored; the grid drives the sweep
    items_grid: list[int] = Field(min_length=1)


class AmplifyRequest(ExperimentRequest):
    replicas: int = Field(default=3, ge=1)


class ExperimentResponse(BaseModel):
    summary: dict
    csv: str


class BaselineRequest(BaseModel):
    p: float = Field(gt=0, le=1)
    ell: int = Field(ge=1)
    hop_time: float = Field(gt=0)
    trials: int = Field(ge=1)
    seed: int = 0
    max_attempts: Optional[int] = Field(default=None, ge=1)
    hbf_accuracy: Optional[float] = Field(default=None, ge=0, le=1)
    hbf_trials: Optional[int] = Field(default=None, ge=1)


class BoundResponse(BaseModel):
    name: str
    value: float


class MarginBoundResponse(BaseModel):
    probability: float
    tau: float
    delta: float


class ErrorInfo(BaseModel):
    code: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorInfo
