"""Reference subprocess worker: serves the builtin generator and evaluator
over newline-delimited JSON on stdin/stdout.

    python3 -m logicheck.stdio_worker --dialect sql

Bad records produce an error record with the request id and the loop
continues; end of input ends the process.
"""

from __future__ import annotations

import argparse
import json
import sys

from .lexicon import load_lexicon
from .parse_core import Dialect
from .snowball import make_builtin_evaluate_handler, make_builtin_generate_handler
from .workers import EVALUATE, GENERATE


def serve(stdin, stdout, dialect: Dialect, lexicon_path=None, rng_seed: int = 0) -> None:
    lexicon = load_lexicon(lexicon_path)
    handlers = {
        GENERATE: make_builtin_generate_handler(rng_seed),
        EVALUATE: make_builtin_evaluate_handler(dialect, lexicon),
    }
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        rid = None
        try:
            request = json.loads(line)
            rid = request.get("id") if isinstance(request, dict) else None
            handler = handlers.get(request.get("op"))
            if handler is None:
                response = {"id": rid, "error": f"unknown op {request.get('op')!r}"}
            else:
                response = handler(request)
        except Exception as exc:  # noqa: BLE001 - one bad record must not kill the loop
            response = {"id": rid, "error": str(exc)}
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="logicheck.stdio_worker", description=__doc__)
    parser.add_argument("--dialect", default="sql", choices=["sql", "logic"])
    parser.add_argument("--lexicon", default=None)
    parser.add_argument("--rng-seed", type=int, default=0)
    args = parser.parse_args(argv)
    serve(sys.stdin, sys.stdout, Dialect(args.dialect), args.lexicon, args.rng_seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
