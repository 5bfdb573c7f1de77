import json
import sys

# responds with an error object for every 5th request
n = 0
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    n += 1
    request = json.loads(line)
    if n % 5 == 0:
        print(json.dumps({"id": request["id"], "error": "injected failure"}), flush=True)
    else:
        print(json.dumps({"id": request["id"], "text": request["text"]}), flush=True)
