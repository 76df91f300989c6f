#!/usr/bin/env python3
"""Minimal conformant reachcast/1 forecaster: per-direction context-mean
template plus small seeded noise. Used to exercise the external transport
without the real adapter."""
import json
import random
import sys


def emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


emit({"protocol": "reachcast/1", "capabilities": ["noise_stub"]})

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    rng = random.Random(req["seed"])
    context = req["context"]
    dirs = req["context_dirs"]
    pools = {}
    for target in req["targets"]:
        d = target["dir"]
        matching = [c for c, cd in zip(context, dirs) if cd == d] or context
        template = [sum(col) / len(matching) for col in zip(*matching)]
        pool = []
        for _ in range(req["pool_size"]):
            pool.append([max(0.0, v + rng.gauss(0.0, 0.01)) for v in template])
        pools[str(d)] = pool
    emit({"id": req["id"], "pools": pools})
