"""Request loop: newline-delimited JSON records on stdin/stdout.

Requests:

    {"id": 1, "op": "generate", "input": "...", "control": "[SQL]", "beam": 3}
    {"id": 2, "op": "evaluate", "logic": "...", "text": "..."}

Responses carry the request id with either a "candidates" list, a "gamma"
score, or an "error" message.  A bad record never stops the loop; end of
input does.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .session import WorkerSession


def _handle(session: WorkerSession, request: dict) -> dict:
    rid = request.get("id")
    op = request.get("op")
    if op == "generate":
        for field in ("input", "beam"):
            if field not in request:
                return {"id": rid, "error": f"generate request missing {field!r}"}
        candidates = session.generate(
            str(request["input"]),
            str(request.get("control", "")),
            int(request["beam"]),
        )
        return {"id": rid, "candidates": candidates}
    if op == "evaluate":
        for field in ("logic", "text"):
            if field not in request:
                return {"id": rid, "error": f"evaluate request missing {field!r}"}
        gamma = session.evaluate(str(request["logic"]), str(request["text"]))
        return {"id": rid, "gamma": gamma}
    return {"id": rid, "error": f"unknown or missing op: {op!r}"}


def serve(session: WorkerSession, stdin, stdout) -> None:
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        rid = None
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                response = {"id": None, "error": "request is not an object"}
            else:
                rid = request.get("id")
                response = _handle(session, request)
        except Exception as exc:  # noqa: BLE001 - keep serving after any bad record
            response = {"id": rid, "error": f"{type(exc).__name__}: {exc}"}
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="logicheck-bridge", description=__doc__)
    parser.add_argument("--generator", required=True,
                        help="Model id or path for the encoder-decoder generator.")
    parser.add_argument("--evaluator", required=True,
                        help="Model id or path for the consistency scorer.")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-input-length", type=int, default=512)
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING)
    session = WorkerSession(
        generator_model=args.generator,
        evaluator_model=args.evaluator,
        device=args.device,
        max_input_length=args.max_input_length,
    )
    serve(session, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
