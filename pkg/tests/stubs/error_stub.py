#!/usr/bin/env python3
import json
import sys

sys.stdout.write(json.dumps({"protocol": "reachcast/1", "capabilities": []}) + "\n")
sys.stdout.flush()
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    sys.stdout.write(json.dumps({"id": req["id"], "error": "backend unavailable"}) + "\n")
    sys.stdout.flush()
