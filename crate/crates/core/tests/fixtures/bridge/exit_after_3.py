import json
import sys

# crash stub: echoes three responses, then exits
n = 0
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    request = json.loads(line)
    print(json.dumps({"id": request["id"], "text": request["text"]}), flush=True)
    n += 1
    if n == 3:
        sys.exit(1)
