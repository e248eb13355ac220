"""HTTP service: datasets in, models out, explanations on demand.

Storage is a plain directory tree under the data root:

    datasets/<dataset_id>.csv           raw upload, id = sha256 of the bytes
    datasets/<dataset_id>.meta.json     target column, schema, row count
    models/<model_id>.json              model + discretization entry
    streams/<stream_id>/rows.csv        feature rows from the edge pipeline

Every document is canonical JSON written atomically, and ids are content
hashes, so re-creating the same thing is idempotent and a restarted server
serves byte-identical responses. Every non-2xx response carries
{"code", "message"} and optionally "detail"; code is one of bad_request,
not_found, conflict, unprocessable, internal.
"""

from __future__ import annotations

import datetime as _dt
import io
import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from .discretize import Discretization, disc_from_doc, disc_to_doc, fit_discretization
from .edge import (
    FeatureExtractor,
    SyntheticExtractor,
    decode_packets,
    packet_checksum_ok,
    parse_pgm,
)
from .errors import (
    MalformedPacket,
    MartlensError,
    NotFound,
    ParseError,
    SchemaError,
    SchemaMismatch,
    SingularMatrix,
)
from .explain import ExplainerConfig, explain, explanation_to_doc, render_text
from .linreg import (
    LinearModel,
    evaluate,
    model_from_doc,
    model_to_doc,
    predict,
    train_price_model,
)
from .mart_data import Dataset, load_csv, split_train_test
from .persist import atomic_write_bytes, atomic_write_text, canonical_dumps, content_id, sha256_hex

DATA_ROOT_ENV = "MARTLENS_DATA_ROOT"
DEFAULT_EXPLAIN_SEED = 42
DEFAULT_TRAIN_FRACTION = 0.8
DEFAULT_SPLIT_SEED = 0
ENTRY_FORMAT = "martlens-model-entry"


# ---------------------------------------------------------------------------
# error contract

_CODE_BY_STATUS = {400: "bad_request", 404: "not_found", 409: "conflict", 422: "unprocessable"}


def _api_error(status: int, message: str, detail=None) -> JSONResponse:
    body = {"code": _CODE_BY_STATUS.get(status, "internal"), "message": message}
    if detail is not None:
        body["detail"] = detail
    return JSONResponse(status_code=status, content=body)


class _HttpError(Exception):
    """Raised inside handlers to short-circuit into the error contract."""

    def __init__(self, status: int, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.message = message
        self.detail = detail


def _status_for(exc: MartlensError) -> int:
    if isinstance(exc, NotFound):
        return 404
    if isinstance(exc, MalformedPacket):
        return 400
    return 422


# ---------------------------------------------------------------------------
# request bodies

class TrainRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    dataset_id: str
    lam: float = Field(default=0.0, alias="lambda", ge=0.0)
    train_fraction: float = Field(default=DEFAULT_TRAIN_FRACTION, gt=0.0, lt=1.0)
    split_seed: int = DEFAULT_SPLIT_SEED
    n_bins: int = Field(default=4, ge=2)


class PredictRequest(BaseModel):
    instance: dict[str, float]


class ExplainRequest(BaseModel):
    instance: dict[str, float]
    num_samples: int = Field(default=5000, ge=10)
    num_features: int = Field(default=6, ge=1)
    seed: int = DEFAULT_EXPLAIN_SEED
    kernel_width: float | None = Field(default=None, gt=0.0)


class WhatIfRequest(ExplainRequest):
    overrides: dict[str, float]


# ---------------------------------------------------------------------------
# storage

class _Store:
    def __init__(self, root: Path):
        self.root = root
        self.datasets = root / "datasets"
        self.models = root / "models"
        self.streams = root / "streams"
        for p in (self.datasets, self.models, self.streams):
            p.mkdir(parents=True, exist_ok=True)
        self.write_lock = threading.Lock()
        self._stream_locks: dict[str, threading.Lock] = {}
        self._stream_guard = threading.Lock()
        self._model_cache: dict[str, tuple[LinearModel, Discretization, dict]] = {}

    def stream_lock(self, stream_id: str) -> threading.Lock:
        with self._stream_guard:
            return self._stream_locks.setdefault(stream_id, threading.Lock())

    # datasets ---------------------------------------------------------

    def dataset_paths(self, dataset_id: str) -> tuple[Path, Path]:
        return (
            self.datasets / f"{dataset_id}.csv",
            self.datasets / f"{dataset_id}.meta.json",
        )

    def load_dataset(self, dataset_id: str) -> Dataset:
        csv_path, meta_path = self.dataset_paths(dataset_id)
        if not csv_path.exists() or not meta_path.exists():
            raise NotFound(f"dataset {dataset_id} not found")
        meta = json.loads(meta_path.read_text())
        return load_csv(csv_path, meta["target_name"], units=meta.get("units"))

    # models -----------------------------------------------------------

    def model_path(self, model_id: str) -> Path:
        return self.models / f"{model_id}.json"

    def load_model(self, model_id: str) -> tuple[LinearModel, Discretization, dict]:
        cached = self._model_cache.get(model_id)
        if cached is not None:
            return cached
        path = self.model_path(model_id)
        if not path.exists():
            raise NotFound(f"model {model_id} not found")
        entry = json.loads(path.read_text())
        stored_id = content_id(entry["model"])
        if stored_id != model_id:
            raise _HttpError(
                500,
                "model store corrupted: content hash mismatch",
                {"model_id": model_id, "recomputed": stored_id},
            )
        model = model_from_doc(entry["model"])
        disc = disc_from_doc(entry["discretization"])
        self._model_cache[model_id] = (model, disc, entry)
        return model, disc, entry


# ---------------------------------------------------------------------------
# stream rows

def _stream_rows_path(store: _Store, stream_id: str) -> Path:
    return store.streams / stream_id / "rows.csv"


def _read_stream_rows(path: Path) -> tuple[list[str], dict[int, list[float]]]:
    """Returns (feature column names, rows keyed by seq)."""
    if not path.exists():
        return [], {}
    lines = path.read_text().splitlines()
    if not lines:
        return [], {}
    header = lines[0].split(",")
    names = header[1:]
    rows: dict[int, list[float]] = {}
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        rows[int(cells[0])] = [float(v) for v in cells[1:]]
    return names, rows


def _write_stream_rows(path: Path, names: list[str], rows: dict[int, list[float]]) -> None:
    buf = io.StringIO()
    buf.write(",".join(["seq"] + names) + "\n")
    for seq in sorted(rows):
        buf.write(",".join([str(seq)] + [repr(v) for v in rows[seq]]) + "\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, buf.getvalue())


def _highest_contiguous(seqs) -> int:
    have = set(seqs)
    n = -1
    while n + 1 in have:
        n += 1
    return n


# ---------------------------------------------------------------------------
# the app

def create_app(data_root: str | os.PathLike | None = None,
               extractor: FeatureExtractor | None = None) -> FastAPI:
    if data_root is None:
        data_root = os.environ.get(DATA_ROOT_ENV)
    if data_root is None:
        raise ValueError(f"data_root not given and {DATA_ROOT_ENV} is not set")
    store = _Store(Path(data_root))
    extract = extractor if extractor is not None else SyntheticExtractor()

    app = FastAPI(title="martlens", docs_url=None, redoc_url=None)
    app.state.store = store

    @app.exception_handler(_HttpError)
    async def _on_http_error(request: Request, exc: _HttpError):
        return _api_error(exc.status, exc.message, exc.detail)

    @app.exception_handler(MartlensError)
    async def _on_domain_error(request: Request, exc: MartlensError):
        detail = None
        if isinstance(exc, SchemaMismatch) and (exc.missing or exc.extra):
            detail = {"missing": list(exc.missing), "extra": list(exc.extra)}
        if isinstance(exc, ParseError) and exc.row is not None:
            detail = {"row": exc.row, "col": exc.col}
        return _api_error(_status_for(exc), str(exc), detail)

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": [str(p) for p in e.get("loc", ())], "msg": e.get("msg", "")}
            for e in exc.errors()
        ]
        return _api_error(400, "invalid request body", detail)

    @app.exception_handler(StarletteHTTPException)
    async def _on_starlette_error(request: Request, exc: StarletteHTTPException):
        return _api_error(exc.status_code, str(exc.detail))

    @app.exception_handler(Exception)
    async def _on_unexpected(request: Request, exc: Exception):
        return _api_error(500, f"internal error: {type(exc).__name__}: {exc}")

    # datasets -----------------------------------------------------------

    @app.post("/datasets")
    async def post_dataset(request: Request, target: str):
        raw = await request.body()
        if not raw:
            raise _HttpError(400, "empty dataset body")
        dataset_id = sha256_hex(raw)
        csv_path, meta_path = store.dataset_paths(dataset_id)

        with store.write_lock:
            if csv_path.exists() and meta_path.exists():
                meta = json.loads(meta_path.read_text())
                if meta["target_name"] != target:
                    raise _HttpError(
                        409,
                        "dataset already stored with a different target column",
                        {"stored_target": meta["target_name"], "requested": target},
                    )
                return JSONResponse(status_code=200, content={"dataset_id": dataset_id, **meta})

            # validate before anything lands on disk
            with tempfile.NamedTemporaryFile("wb", suffix=".csv", delete=False) as tmp:
                tmp.write(raw)
                tmp_path = tmp.name
            try:
                ds = load_csv(tmp_path, target)
            finally:
                os.unlink(tmp_path)
            meta = {
                "target_name": target,
                "feature_names": list(ds.schema.feature_names),
                "units": dict(ds.schema.units),
                "n_rows": len(ds.records),
            }
            atomic_write_bytes(csv_path, raw)
            atomic_write_text(meta_path, canonical_dumps(meta))
        return JSONResponse(status_code=201, content={"dataset_id": dataset_id, **meta})

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        _, meta_path = store.dataset_paths(dataset_id)
        if not meta_path.exists():
            raise NotFound(f"dataset {dataset_id} not found")
        return {"dataset_id": dataset_id, **json.loads(meta_path.read_text())}

    # models -------------------------------------------------------------

    @app.post("/models")
    def post_model(req: TrainRequest):
        ds = store.load_dataset(req.dataset_id)
        train, holdout = split_train_test(ds, req.train_fraction, req.split_seed)
        try:
            model = train_price_model(train, lam=req.lam)
        except SingularMatrix as exc:
            raise _HttpError(422, str(exc), {"hint": "raise lambda or drop a collinear column"})
        disc = fit_discretization(train, n_bins=req.n_bins)

        model_doc = model_to_doc(model)
        model_id = content_id(model_doc)
        entry = {
            "format": ENTRY_FORMAT,
            "model_id": model_id,
            "dataset_id": req.dataset_id,
            "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "lambda": req.lam,
            "train_fraction": req.train_fraction,
            "split_seed": req.split_seed,
            "n_bins": req.n_bins,
            "model": model_doc,
            "discretization": disc_to_doc(disc),
            "metrics": {
                "train": model.train_metrics.to_doc(),
                "holdout": evaluate(model, holdout).to_doc(),
            },
        }
        path = store.model_path(model_id)
        with store.write_lock:
            created = not path.exists()
            if created:
                atomic_write_text(path, canonical_dumps(entry))
        stored = json.loads(path.read_text())
        return JSONResponse(status_code=201 if created else 200, content=stored)

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        _, _, entry = store.load_model(model_id)
        return entry

    @app.post("/models/{model_id}/predict")
    def post_predict(model_id: str, req: PredictRequest):
        model, _, _ = store.load_model(model_id)
        value = predict(model, req.instance)
        return {"model_id": model_id, "predicted_value": value}

    def _run_explain(model_id: str, req: ExplainRequest, instance: Mapping[str, float]):
        model, disc, _ = store.load_model(model_id)
        cfg = ExplainerConfig(
            num_samples=req.num_samples,
            num_features=req.num_features,
            kernel_width=req.kernel_width,
            seed=req.seed,
        )
        return explain(model, disc, dict(instance), cfg)

    @app.post("/models/{model_id}/explain")
    def post_explain(model_id: str, req: ExplainRequest):
        exp = _run_explain(model_id, req, req.instance)
        return {
            "model_id": model_id,
            "explanation": explanation_to_doc(exp),
            "text": render_text(exp),
        }

    @app.post("/models/{model_id}/whatif")
    def post_whatif(model_id: str, req: WhatIfRequest):
        model, _, _ = store.load_model(model_id)
        unknown = tuple(k for k in req.overrides if k not in model.feature_names)
        if unknown:
            raise SchemaMismatch(
                f"overrides name unknown features: {', '.join(unknown)}", extra=unknown
            )
        base = _run_explain(model_id, req, req.instance)
        modified_instance = {**req.instance, **req.overrides}
        modified = _run_explain(model_id, req, modified_instance)
        return {
            "model_id": model_id,
            "base": explanation_to_doc(base),
            "modified": explanation_to_doc(modified),
            "delta": modified.predicted_value - base.predicted_value,
        }

    # edge ingest ----------------------------------------------------------

    @app.post("/ingest/frames")
    async def post_frames(request: Request):
        raw = await request.body()
        packets = decode_packets(raw)  # MalformedPacket -> 400
        results = []
        touched: set[str] = set()
        by_stream: dict[str, list] = {}
        for packet, crc in packets:
            by_stream.setdefault(packet.stream_id, []).append((packet, crc))

        for stream_id, items in by_stream.items():
            lock = store.stream_lock(stream_id)
            with lock:
                path = _stream_rows_path(store, stream_id)
                names, rows = _read_stream_rows(path)
                dirty = False
                for packet, crc in items:
                    key = {"stream_id": stream_id, "seq": packet.seq}
                    if not packet_checksum_ok(packet, crc):
                        results.append({**key, "status": "rejected", "reason": "checksum"})
                        continue
                    if packet.seq in rows:
                        results.append({**key, "status": "acked", "reason": "duplicate"})
                        continue
                    try:
                        if packet.kind == "frame":
                            features = extract.extract(parse_pgm(packet.payload))
                        else:
                            doc = json.loads(packet.payload.decode("utf-8"))
                            features = {str(k): float(v) for k, v in doc.items()}
                    except (ParseError, ValueError, UnicodeDecodeError,
                            json.JSONDecodeError, AttributeError) as exc:
                        results.append({**key, "status": "rejected",
                                        "reason": f"bad payload: {exc}"})
                        continue
                    row_names = sorted(features)
                    if not names:
                        names = row_names
                    if row_names != names:
                        results.append({**key, "status": "rejected", "reason": "schema"})
                        continue
                    rows[packet.seq] = [float(features[n]) for n in names]
                    dirty = True
                    results.append({**key, "status": "acked"})
                if dirty:
                    _write_stream_rows(path, names, rows)
                touched.add(stream_id)

        streams = {}
        for stream_id in sorted(touched):
            _, rows = _read_stream_rows(_stream_rows_path(store, stream_id))
            streams[stream_id] = _highest_contiguous(rows)
        return {"results": results, "streams": streams}

    @app.get("/animals")
    def get_animals():
        animals = []
        if store.streams.exists():
            for child in sorted(store.streams.iterdir()):
                path = child / "rows.csv"
                if not child.is_dir() or not path.exists():
                    continue
                names, rows = _read_stream_rows(path)
                if not rows:
                    continue
                n = len(rows)
                sums = [0.0] * len(names)
                for values in rows.values():
                    for i, v in enumerate(values):
                        sums[i] += v
                animals.append(
                    {
                        "stream_id": child.name,
                        "n_rows": n,
                        "last_seq": max(rows),
                        "features": {names[i]: sums[i] / n for i in range(len(names))},
                    }
                )
        return {"animals": animals}

    # health ---------------------------------------------------------------

    @app.get("/health")
    def get_health():
        try:
            probe = store.root / ".health-probe"
            probe.write_text("ok")
            probe.unlink()
        except OSError as exc:
            raise _HttpError(500, f"data root not writable: {exc}")
        return {
            "status": "ok",
            "datasets": len(list(store.datasets.glob("*.csv"))),
            "models": len(list(store.models.glob("*.json"))),
        }

    return app
