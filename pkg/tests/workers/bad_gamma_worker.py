"""Evaluator worker that violates the gamma range contract."""
import json
import sys

from logicheck.snowball import make_builtin_generate_handler

gen = make_builtin_generate_handler(0)
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    request = json.loads(line)
    if request.get("op") == "generate":
        print(json.dumps(gen(request)), flush=True)
    else:
        print(json.dumps({"id": request.get("id"), "gamma": 2.0}), flush=True)
