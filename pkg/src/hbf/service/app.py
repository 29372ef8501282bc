"""FastAPI service wrapping the index, bounds, and experiment runners.

The service is stateless: memories travel inside requests as base64
blobs of the on-disk format, so any number of clients can share one
server (or run the app in process). Domain errors surface as
``{"error": {"code", "message"}}`` with 422 for bad arguments and 400
for malformed data or blobs.

Run with: uvicorn "hbf.service.app:create_app" --factory
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, bounds
from ..calibrate import calibrate_decoder
from ..chase import ChaseModel, HbfQueryStats
from ..errors import HbfError, InvalidArgumentError
from ..experiments import (
    ExperimentConfig,
    run_amplified_experiment,
    run_baseline_experiment,
    run_capacity_sweep,
    run_fn_experiment,
    run_fp_experiment,
    vote_outcomes,
)
from ..index import (
    DecodeOutcome,
    DecoderConfig,
    ValueScorer,
    build,
    correlate_query,
    decode,
    insert,
    ranked_from_scores,
)
from ..noise import NoiseSpec
from . import schemas


def _json_safe(value):
    """Replace non-finite floats with None so responses stay strict JSON."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _summary_dict(summary) -> dict:
    return _json_safe(dataclasses.asdict(summary))


def _decoder_config(model: schemas.DecoderModel) -> DecoderConfig:
    return DecoderConfig(tau=model.tau, delta=model.delta, top_k=model.top_k)


def _decoder_model(cfg: DecoderConfig) -> schemas.DecoderModel:
    return schemas.DecoderModel(tau=cfg.tau, delta=cfg.delta, top_k=cfg.top_k)


def _experiment_config(req: schemas.ExperimentRequest) -> ExperimentConfig:
    return ExperimentConfig(
        dim=req.dim,
        items=req.items,
        labels=req.labels,
        trials=req.trials,
        seed=req.seed,
        rho=req.rho,
        noise=tuple(NoiseSpec(n.kind, n.amount) for n in req.noise),
        decoder=None if req.decoder is None else _decoder_config(req.decoder),
        epsilon=req.epsilon,
        probe_count=req.probe_count,
    )


def _query_response(
    outcome: DecodeOutcome, decoder: Optional[schemas.DecoderModel]
) -> schemas.QueryResponse:
    return schemas.QueryResponse(
        hit=outcome.hit,
        label=None if outcome.label is None else outcome.label.decode("utf-8"),
        best_score=outcome.best_score,
        runner_up=outcome.runner_up,
        top=[
            schemas.ScoredLabel(label=label.decode("utf-8"), score=score)
            for label, score in outcome.top
        ],
        decoder=decoder,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="hbf",
        version=__version__,
        description="Superposed key-value index with correlation decoding",
    )

    @app.exception_handler(HbfError)
    async def hbf_error_handler(_: Request, exc: HbfError) -> JSONResponse:
        status = 422 if isinstance(exc, InvalidArgumentError) else 400
        body = schemas.ErrorResponse(
            error=schemas.ErrorInfo(code=exc.code, message=str(exc))
        )
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/index/build", response_model=schemas.MemoryOut)
    def index_build(req: schemas.BuildRequest) -> schemas.MemoryOut:
        mem = build(
            [(r.key, r.value) for r in req.records],
            req.dim,
            rho=req.rho,
            key_seed=req.key_seed,
            value_seed=req.value_seed,
        )
        return schemas.MemoryOut.from_memory(mem)

    @app.post("/index/insert", response_model=schemas.MemoryOut)
    def index_insert(req: schemas.InsertRequest) -> schemas.MemoryOut:
        mem = schemas.memory_from_blob(req.memory)
        return schemas.MemoryOut.from_memory(insert(mem, req.key, req.value))

    @app.post("/index/query", response_model=schemas.QueryResponse)
    def index_query(req: schemas.QueryRequest) -> schemas.QueryResponse:
        mem = schemas.memory_from_blob(req.memory)
        scorer = ValueScorer(mem.value_codebook(), req.labels)
        if req.decoder is not None:
            cfg = _decoder_config(req.decoder)
            echo = req.decoder
        elif mem.item_count == 0:
            # Nothing stored: no impostor scale to calibrate against, so
            # the query rejects unconditionally.
            z = correlate_query(mem, req.key)
            ranked = ranked_from_scores(scorer.labels, scorer.scores(z), 2)
            outcome = DecodeOutcome(
                label=None,
                best_score=ranked[0][1],
                runner_up=ranked[1][1],
                top=tuple(ranked),
            )
            return _query_response(outcome, None)
        else:
            members = (
                [(m.key, m.value) for m in req.members] if req.members else None
            )
            cal = calibrate_decoder(
                mem, scorer, req.probe_count, req.epsilon, req.seed,
                member_probes=members,
            )
            cfg = cal.decoder
            echo = _decoder_model(cfg)
        outcome = decode(mem, req.key, cfg, scorer)
        return _query_response(outcome, echo)

    @app.post("/index/calibrate", response_model=schemas.CalibrateResponse)
    def index_calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
        mem = schemas.memory_from_blob(req.memory)
        members = [(m.key, m.value) for m in req.members] if req.members else None
        cal = calibrate_decoder(
            mem, req.labels, req.probe_count, req.epsilon, req.seed,
            member_probes=members,
        )
        return schemas.CalibrateResponse(
            tau=cal.decoder.tau,
            delta=cal.decoder.delta,
            top_k=cal.decoder.top_k,
            sigma_hat=cal.sigma_hat,
            mu_hat=cal.mu_hat,
            probe_count=cal.probe_count,
            epsilon=cal.epsilon,
        )

    @app.post("/index/amplified-query", response_model=schemas.QueryResponse)
    def index_amplified_query(req: schemas.AmplifiedQueryRequest) -> schemas.QueryResponse:
        cfg = _decoder_config(req.decoder)
        outcomes = []
        for blob in req.memories:
            mem = schemas.memory_from_blob(blob)
            scorer = ValueScorer(mem.value_codebook(), req.labels)
            outcomes.append(decode(mem, req.key, cfg, scorer))
        return _query_response(vote_outcomes(outcomes), req.decoder)

    @app.get("/bounds/fp-bound", response_model=schemas.BoundResponse)
    def bounds_fp_bound(n: int, d: int, tau: float) -> schemas.BoundResponse:
        return schemas.BoundResponse(name="fp_bound", value=bounds.fp_bound(n, d, tau))

    @app.get("/bounds/fp-threshold", response_model=schemas.BoundResponse)
    def bounds_fp_threshold(n: int, d: int, eps: float) -> schemas.BoundResponse:
        return schemas.BoundResponse(name="tau", value=bounds.fp_threshold(n, d, eps))

    @app.get("/bounds/signal-mean", response_model=schemas.BoundResponse)
    def bounds_signal_mean(d: int, h: float, pe: float) -> schemas.BoundResponse:
        return schemas.BoundResponse(name="mu", value=bounds.signal_mean(d, h, pe))

    @app.get("/bounds/fn-bound", response_model=schemas.BoundResponse)
    def bounds_fn_bound(
        d: int, h: float, pe: float, n: int, t: Optional[float] = None
    ) -> schemas.BoundResponse:
        return schemas.BoundResponse(name="fn_bound", value=bounds.fn_bound(d, h, pe, n, t))

    @app.get("/bounds/margin-failure", response_model=schemas.MarginBoundResponse)
    def bounds_margin_failure(
        rho: float, d: int, c: float, m: int
    ) -> schemas.MarginBoundResponse:
        result = bounds.margin_failure_bound(rho, d, c, m)
        return schemas.MarginBoundResponse(
            probability=result.probability, tau=result.tau, delta=result.delta
        )

    @app.get("/bounds/inv-norm-cdf", response_model=schemas.BoundResponse)
    def bounds_inv_norm_cdf(p: float) -> schemas.BoundResponse:
        return schemas.BoundResponse(name="x", value=bounds.inv_norm_cdf(p))

    @app.get("/bounds/evt-exact", response_model=schemas.BoundResponse)
    def bounds_evt_exact(sigma: float, m: int, eps: float) -> schemas.BoundResponse:
        return schemas.BoundResponse(
            name="t_eps", value=bounds.evt_threshold_exact(sigma, m, eps)
        )

    @app.get("/bounds/evt-approx", response_model=schemas.BoundResponse)
    def bounds_evt_approx(
        sigma: float, m: int, order: str = "first"
    ) -> schemas.BoundResponse:
        return schemas.BoundResponse(
            name="t", value=bounds.evt_threshold_approx(sigma, m, order)
        )

    @app.post("/experiments/fp", response_model=schemas.ExperimentResponse)
    def experiments_fp(req: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
        result = run_fp_experiment(_experiment_config(req))
        return schemas.ExperimentResponse(summary=_summary_dict(result.summary), csv=result.csv)

    @app.post("/experiments/fn", response_model=schemas.ExperimentResponse)
    def experiments_fn(req: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
        result = run_fn_experiment(_experiment_config(req))
        return schemas.ExperimentResponse(summary=_summary_dict(result.summary), csv=result.csv)

    @app.post("/experiments/capacity", response_model=schemas.ExperimentResponse)
    def experiments_capacity(req: schemas.CapacityRequest) -> schemas.ExperimentResponse:
        cfg = _experiment_config(req)
        if cfg.items == 0 and req.items_grid:
            cfg = dataclasses.replace(cfg, items=req.items_grid[0])
        result = run_capacity_sweep(cfg, req.items_grid)
        return schemas.ExperimentResponse(summary=_summary_dict(result.summary), csv=result.csv)

    @app.post("/experiments/amplify", response_model=schemas.ExperimentResponse)
    def experiments_amplify(req: schemas.AmplifyRequest) -> schemas.ExperimentResponse:
        result = run_amplified_experiment(_experiment_config(req), req.replicas)
        return schemas.ExperimentResponse(summary=_summary_dict(result.summary), csv=result.csv)

    @app.post("/experiments/baseline", response_model=schemas.ExperimentResponse)
    def experiments_baseline(req: schemas.BaselineRequest) -> schemas.ExperimentResponse:
        model = ChaseModel(p=req.p, ell=req.ell, hop_time=req.hop_time)
        hbf_stats = None
        if req.hbf_accuracy is not None:
            hbf_stats = HbfQueryStats(
                accuracy=req.hbf_accuracy,
                trials=req.hbf_trials or req.trials,
                seed=req.seed,
            )
        result = run_baseline_experiment(
            model, req.trials, req.seed,
            max_attempts=req.max_attempts, hbf_stats=hbf_stats,
        )
        return schemas.ExperimentResponse(summary=_summary_dict(result.summary), csv=result.csv)

    return app
