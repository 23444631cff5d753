"""FastAPI application exposing the embedding/NER wire contract.

Endpoints: POST /embed, POST /ner, GET /info, GET /healthz. Handlers are
stateless; models are immutable after startup, so concurrent requests are
safe up to the server's worker count.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .models import GazetteerNerModel, HashEmbeddingModel


class EmbedRequest(BaseModel):
    texts: list[str] = Field(min_length=1)
    model_id: str = "default"


class EmbedResponse(BaseModel):
    vectors: list[list[float]]
    dimension: int
    model_id: str


class NerRequest(BaseModel):
    text: str
    model_id: str = "default"


class EntitySpan(BaseModel):
    text: str
    label: str
    start: int
    end: int


class NerResponse(BaseModel):
    entities: list[EntitySpan]
    model_id: str


def create_app(embed_models: dict[str, HashEmbeddingModel] | None = None,
               ner_models: dict[str, GazetteerNerModel] | None = None) -> FastAPI:
    embed_models = embed_models or {"default": HashEmbeddingModel()}
    ner_models = ner_models or {"default": GazetteerNerModel()}
    app = FastAPI(title="fruskg-sidecar")

    def _model(models: dict, model_id: str):
        model = models.get(model_id)
        if model is None:
            raise HTTPException(status_code=400, detail=f"unknown model id {model_id!r}")
        return model

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest) -> EmbedResponse:
        model = _model(embed_models, request.model_id)
        for text in request.texts:
            if len(text) > model.max_length:
                raise HTTPException(status_code=400,
                                    detail=f"text exceeds max length {model.max_length}")
        return EmbedResponse(vectors=model.embed(request.texts),
                             dimension=model.dimension, model_id=model.model_id)

    @app.post("/ner", response_model=NerResponse)
    def ner(request: NerRequest) -> NerResponse:
        model = _model(ner_models, request.model_id)
        if len(request.text) > model.max_length:
            raise HTTPException(status_code=400,
                                detail=f"text exceeds max length {model.max_length}")
        return NerResponse(entities=[EntitySpan(**s) for s in model.annotate(request.text)],
                           model_id=model.model_id)

    @app.get("/info")
    def info() -> dict:
        default_ner = ner_models["default"]
        return {
            "schema_version": 1,
            "max_length": default_ner.max_length,
            "embed_models": {
                mid: {"dimension": m.dimension, "max_length": m.max_length,
                      "version_hash": m.info.version_hash}
                for mid, m in embed_models.items()
            },
            "ner_models": {
                mid: {"max_length": m.max_length,
                      "version_hash": m.info.version_hash}
                for mid, m in ner_models.items()
            },
        }

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    return app
