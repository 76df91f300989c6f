#!/usr/bin/env python3
import json
import sys

sys.stdout.write(json.dumps({"protocol": "reachcast/1", "capabilities": []}) + "\n")
sys.stdout.flush()
sys.stdin.readline()
print("stub crashing on purpose", file=sys.stderr)
sys.exit(9)
