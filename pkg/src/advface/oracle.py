"""The black box F: embedding extraction, feature distance, verification.

Two backends: a deterministic toy embedder (seeded random linear map + tanh,
differentiable so finite-difference checks work) and a wire-protocol client
that talks newline-delimited JSON to an external model process over stdio
or TCP. Embeddings are unit-normalized by contract, so the decision
boundary d_b always lives in (0, 2).
"""

from __future__ import annotations

import base64
import json
import shlex
import socket
import subprocess
from dataclasses import dataclass, field

import numpy as np

from advface.imageops import ImageError, as_image
from advface.rng import normal_stream

Embedding = np.ndarray


class OracleError(Exception):
    """Transport or protocol failure talking to an external oracle."""


class QueryLedger:
    """Counts oracle embed calls charged to one attack. Monotone, +1 per call."""

    def __init__(self):
        self.count = 0

    def charge(self) -> None:
        self.count += 1


@dataclass(frozen=True)
class VerifierConfig:
    """Decision boundary on embedding l2 distance."""

    d_b: float = 1.14

    def __post_init__(self):
        if not (0.0 < self.d_b < 2.0):
            raise ValueError("d_b must lie in (0, 2) for unit embeddings")


@dataclass(frozen=True)
class ToyEmbedderSpec:
    seed: int
    input_dims: tuple  # (H, W, C)
    embed_dim: int = 128


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise OracleError("zero embedding cannot be normalized")
    return v / norm


def toy_embed_formula(spec: ToyEmbedderSpec, img) -> Embedding:
    """normalize(tanh(W x + b)) with W, b from the portable seeded stream.

    W (D x HWC, row-major) is drawn first, then b (D); every entry is a
    standard normal scaled by 1/sqrt(HWC).
    """
    img = as_image(img)
    h, w, c = spec.input_dims
    if img.shape != (h, w, c):
        raise ImageError(f"oracle expects {(h, w, c)}, got {img.shape}")
    n = h * w * c
    d = spec.embed_dim
    scale = 1.0 / np.sqrt(n)
    stream = normal_stream(spec.seed, d * n + d) * scale
    weights = stream[: d * n].reshape(d, n)
    bias = stream[d * n :]
    return _normalize(np.tanh(weights @ img.ravel() + bias))


class ToyEmbedder:
    """Deterministic stand-in for a face-recognition network.

    Same seed and dims give bit-identical weights, hence identical
    embeddings. Safe to query concurrently (pure function after init).
    """

    concurrency_safe = True

    def __init__(self, seed: int = 0, input_dims=(8, 8, 3), embed_dim: int = 128):
        self.spec = ToyEmbedderSpec(seed, tuple(input_dims), embed_dim)
        h, w, c = self.spec.input_dims
        n = h * w * c
        scale = 1.0 / np.sqrt(n)
        stream = normal_stream(seed, embed_dim * n + embed_dim) * scale
        self._weights = stream[: embed_dim * n].reshape(embed_dim, n)
        self._bias = stream[embed_dim * n :]

    @property
    def input_dims(self):
        return self.spec.input_dims

    @property
    def embed_dim(self):
        return self.spec.embed_dim

    def embed_raw(self, img: np.ndarray) -> Embedding:
        h, w, c = self.spec.input_dims
        if img.shape != (h, w, c):
            raise ImageError(f"oracle expects {(h, w, c)}, got {img.shape}")
        return _normalize(np.tanh(self._weights @ img.ravel() + self._bias))


class WireOracle:
    """Client for the newline-delimited JSON embedding protocol.

    Endpoints: ``cmd:<shell command>`` to spawn a stdio server, or
    ``tcp:<host>:<port>``. One request in flight per connection, so this
    backend is not concurrency-safe; give each worker its own instance.
    """

    concurrency_safe = False

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self._next_id = 0
        if endpoint.startswith("cmd:"):
            self._proc = subprocess.Popen(
                shlex.split(endpoint[4:]),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
            self._sock = None
            self._reader = self._proc.stdout
        elif endpoint.startswith("tcp:"):
            host, port = endpoint[4:].rsplit(":", 1)
            self._proc = None
            self._sock = socket.create_connection((host, int(port)), timeout=timeout)
            self._reader = self._sock.makefile("r")
        else:
            raise ValueError(f"unknown endpoint {endpoint!r}; use cmd:... or tcp:host:port")
        hello = self._roundtrip({"type": "hello"})
        if hello.get("type") != "hello":
            raise OracleError(f"bad handshake reply: {hello}")
        self.embed_dim = int(hello["embed_dim"])
        inp = hello["input"]
        self.input_dims = (int(inp["h"]), int(inp["w"]), int(inp["c"]))

    def _send(self, obj) -> None:
        line = json.dumps(obj) + "\n"
        if self._proc is not None:
            self._proc.stdin.write(line)
            self._proc.stdin.flush()
        else:
            self._sock.sendall(line.encode())

    def _roundtrip(self, obj) -> dict:
        self._send(obj)
        line = self._reader.readline()
        if not line:
            raise OracleError("oracle closed the connection")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise OracleError(f"malformed oracle reply: {line!r}") from exc

    def embed_raw(self, img: np.ndarray) -> Embedding:
        h, w, c = self.input_dims
        if img.shape != (h, w, c):
            raise ImageError(f"oracle expects {(h, w, c)}, got {img.shape}")
        self._next_id += 1
        req_id = self._next_id
        payload = base64.b64encode(
            img.astype("<f4").tobytes()
        ).decode("ascii")
        reply = self._roundtrip(
            {
                "type": "embed",
                "id": req_id,
                "image": {"h": h, "w": w, "c": c, "data_b64": payload},
            }
        )
        if reply.get("type") == "error":
            raise OracleError(f"oracle error: {reply.get('message')}")
        if reply.get("type") != "embedding" or reply.get("id") != req_id:
            raise OracleError(f"unexpected oracle reply: {reply}")
        return _normalize(np.asarray(reply["values"], dtype=np.float64))

    def close(self) -> None:
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        if self._sock is not None:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def embed(oracle, img, ledger: QueryLedger) -> Embedding:
    """Embed one image, charging exactly one query to the ledger."""
    e = oracle.embed_raw(as_image(img))
    ledger.charge()
    return e


def feature_distance(a: Embedding, b: Embedding) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"embedding dims differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def verify(oracle, pair, cfg: VerifierConfig, ledger: QueryLedger | None = None):
    """Decide MATCH / NOT-MATCH for a pair. Returns (is_match, distance).

    Uses a throwaway ledger unless one is supplied; verification queries
    are never charged to an attack.
    """
    ledger = ledger if ledger is not None else QueryLedger()
    ea = embed(oracle, pair.source, ledger)
    eb = embed(oracle, pair.target, ledger)
    dist = feature_distance(ea, eb)
    return dist < cfg.d_b, dist
