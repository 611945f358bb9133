"""Wire protocol and client transports for generator/evaluator workers.

Requests and responses are newline-delimited JSON records.  Generate:

    {"id": 1, "op": "generate", "input": "( ... )", "control": "[SQL]", "beam": 3}
    -> {"id": 1, "candidates": [{"text": "...", "score": -0.5}, ...]}

Evaluate:

    {"id": 2, "op": "evaluate", "logic": "SELECT ...", "text": "..."}
    -> {"id": 2, "gamma": 0.93}

Unknown response fields are ignored; missing required fields, duplicate or
unknown ids, and gamma outside [0, 1] are protocol errors.  Subprocess
transports speak the records over the worker's stdin/stdout; network
transports POST one record per request.
"""

from __future__ import annotations

import json
import os
import selectors
import shlex
import subprocess
import time
from typing import Callable

from .errors import WorkerProtocolError, WorkerTimeoutError

GENERATE = "generate"
EVALUATE = "evaluate"


def validate_response(response: dict, request: dict) -> dict:
    """Check one worker response against its request; returns the response."""
    if not isinstance(response, dict):
        raise WorkerProtocolError(f"response is not an object: {response!r}")
    if "error" in response:
        raise WorkerProtocolError(f"worker error: {response['error']}")
    if response.get("id") != request["id"]:
        raise WorkerProtocolError(
            f"response id {response.get('id')!r} does not match request {request['id']}"
        )
    if request["op"] == GENERATE:
        candidates = response.get("candidates")
        if not isinstance(candidates, list) or not candidates:
            raise WorkerProtocolError("generate response needs a non-empty 'candidates' list")
        for c in candidates:
            if not isinstance(c, dict) or "text" not in c or "score" not in c:
                raise WorkerProtocolError(f"malformed beam candidate: {c!r}")
            if not isinstance(c["text"], str):
                raise WorkerProtocolError("candidate 'text' must be a string")
            try:
                float(c["score"])
            except (TypeError, ValueError):
                raise WorkerProtocolError("candidate 'score' must be a number") from None
    else:
        gamma = response.get("gamma")
        if not isinstance(gamma, (int, float)) or isinstance(gamma, bool):
            raise WorkerProtocolError("evaluate response needs a numeric 'gamma'")
        if not (0.0 <= float(gamma) <= 1.0):
            raise WorkerProtocolError(f"gamma {gamma} outside [0, 1]")
    return response


class Worker:
    """Transport base: answer a batch of protocol requests, matched by id."""

    def request_many(self, requests: list[dict]) -> dict[int, dict]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BuiltinWorker(Worker):
    """In-process worker backed by a request-handling function."""

    def __init__(self, handler: Callable[[dict], dict]):
        self.handler = handler

    def request_many(self, requests: list[dict]) -> dict[int, dict]:
        out: dict[int, dict] = {}
        for request in requests:
            response = validate_response(self.handler(request), request)
            rid = request["id"]
            if rid in out:
                raise WorkerProtocolError(f"duplicate response id {rid}")
            out[rid] = response
        return out


class SubprocessWorker(Worker):
    """Pipelined newline-delimited JSON over a child process's stdio."""

    def __init__(self, command: str, timeout: float = 30.0, in_flight: int = 8):
        self.command = command
        self.timeout = timeout
        self.in_flight = max(1, in_flight)
        self.proc: subprocess.Popen | None = None
        self._buffer = b""

    def _ensure_started(self):
        if self.proc is None or self.proc.poll() is not None:
            self.proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=False,
            )
            self._buffer = b""

    def _read_line(self) -> bytes:
        deadline = time.monotonic() + self.timeout
        sel = selectors.DefaultSelector()
        sel.register(self.proc.stdout, selectors.EVENT_READ)
        try:
            while b"\n" not in self._buffer:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise WorkerTimeoutError(
                        f"worker {self.command!r} silent for {self.timeout}s"
                    )
                if not sel.select(timeout=remaining):
                    continue
                chunk = os.read(self.proc.stdout.fileno(), 65536)
                if not chunk:
                    raise WorkerProtocolError(
                        f"worker {self.command!r} closed its output mid-batch"
                    )
                self._buffer += chunk
        finally:
            sel.close()
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def request_many(self, requests: list[dict]) -> dict[int, dict]:
        if not requests:
            return {}
        self._ensure_started()
        by_id = {r["id"]: r for r in requests}
        if len(by_id) != len(requests):
            raise WorkerProtocolError("duplicate request ids in batch")
        responses: dict[int, dict] = {}
        pending: set[int] = set()
        queue = list(requests)
        sent = 0
        try:
            while len(responses) < len(requests):
                while sent < len(queue) and len(pending) < self.in_flight:
                    record = json.dumps(queue[sent], ensure_ascii=False) + "\n"
                    self.proc.stdin.write(record.encode("utf-8"))
                    self.proc.stdin.flush()
                    pending.add(queue[sent]["id"])
                    sent += 1
                line = self._read_line()
                if not line.strip():
                    continue
                try:
                    response = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise WorkerProtocolError(f"unparseable worker response: {exc}") from None
                rid = response.get("id") if isinstance(response, dict) else None
                if rid not in pending:
                    raise WorkerProtocolError(f"unexpected response id {rid!r}")
                validate_response(response, by_id[rid])
                pending.discard(rid)
                responses[rid] = response
        except BrokenPipeError:
            raise WorkerProtocolError(
                f"worker {self.command!r} closed its input mid-batch"
            ) from None
        return responses

    def close(self):
        if self.proc is not None:
            try:
                if self.proc.stdin:
                    self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
            self.proc = None


class HttpWorker(Worker):
    """POSTs one protocol record per request to a fixed endpoint."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout
        import requests  # deferred: only network mode needs it

        self._session = requests.Session()
        self._requests = requests

    def request_many(self, requests: list[dict]) -> dict[int, dict]:
        responses: dict[int, dict] = {}
        for request in requests:
            try:
                http = self._session.post(self.url, json=request, timeout=self.timeout)
            except self._requests.Timeout:
                raise WorkerTimeoutError(f"no response from {self.url} "
                                         f"within {self.timeout}s") from None
            except self._requests.RequestException as exc:
                raise WorkerProtocolError(f"transport failure: {exc}") from None
            try:
                response = http.json()
            except ValueError as exc:
                raise WorkerProtocolError(f"unparseable worker response: {exc}") from None
            responses[request["id"]] = validate_response(response, request)
        return responses

    def close(self):
        self._session.close()


def make_worker(spec: str, timeout: float = 30.0, in_flight: int = 8,
                builtin_handler: Callable[[dict], dict] | None = None) -> Worker:
    """Build a worker from a config spec.

    Specs: ``builtin``, ``subprocess:<command line>`` or ``http(s)://<url>``.
    """
    if spec == "builtin":
        if builtin_handler is None:
            raise WorkerProtocolError("no builtin handler available here")
        return BuiltinWorker(builtin_handler)
    if spec.startswith("subprocess:"):
        return SubprocessWorker(spec[len("subprocess:"):].strip(),
                                timeout=timeout, in_flight=in_flight)
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpWorker(spec, timeout=timeout)
    raise WorkerProtocolError(f"unknown worker spec {spec!r}")
