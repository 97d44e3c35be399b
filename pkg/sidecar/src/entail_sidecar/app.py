"""HTTP surface: POST /v1/entail plus a readiness probe.

The response body carries exactly two fields, attributable and raw_label,
so any client speaking the wire contract can consume any verifier.
"""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .models import VerifierError
from .template import map_label

logger = logging.getLogger(__name__)


class EntailRequest(BaseModel):
    claim: str = Field(min_length=1)
    evidence: str = Field(min_length=1)
    question: str = ""
    model_id: str = ""


class EntailResponse(BaseModel):
    attributable: bool
    raw_label: str


def create_app(verifiers, warm_on_startup: bool = True) -> FastAPI:
    """Build the service around a list of verifiers keyed by name."""
    registry = {}
    for verifier in verifiers:
        if verifier.name in registry:
            raise ValueError(f"duplicate verifier name {verifier.name!r}")
        registry[verifier.name] = verifier
    if not registry:
        raise ValueError("create_app needs at least one verifier")

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        if warm_on_startup:
            for verifier in registry.values():
                verifier.load()
        yield

    app = FastAPI(title="entail-sidecar", lifespan=lifespan)

    @app.get("/healthz")
    def healthz():
        readiness = {name: v.ready() for name, v in registry.items()}
        if all(readiness.values()):
            return {"status": "ok", "models": readiness}
        return JSONResponse(
            status_code=503, content={"status": "warming", "models": readiness}
        )

    @app.post("/v1/entail", response_model=EntailResponse)
    def entail(request: EntailRequest) -> EntailResponse:
        if request.model_id:
            verifier = registry.get(request.model_id)
            if verifier is None:
                raise HTTPException(
                    status_code=422,
                    detail=f"unknown model_id {request.model_id!r};"
                    f" serving {sorted(registry)}",
                )
        elif len(registry) == 1:
            verifier = next(iter(registry.values()))
        else:
            raise HTTPException(
                status_code=422,
                detail=f"model_id required; serving {sorted(registry)}",
            )
        if not verifier.ready():
            raise HTTPException(
                status_code=503, detail=f"model {verifier.name!r} is still warming"
            )
        try:
            raw = verifier.label(request.claim, request.evidence, request.question)
        except VerifierError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return EntailResponse(attributable=map_label(raw), raw_label=raw)

    return app
