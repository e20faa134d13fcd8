"""Driving the HTTP session protocol like a witness would.

Starts the session service in-process, creates a session, and plays a few
selection rounds with a scripted "witness" that judges candidates by their
distance to a hidden target, finishing with a final-match declaration.
"""

import base64
import json
import threading
import urllib.request

import numpy as np

from facesearch import eigenspace, faceio, gaussmodel, search, server, synthetic

dataset = synthetic.synthetic_dataset(200, seed=5, asymmetry_range=(0.0, 0.4))
eig = eigenspace.fit_eigenmodel(dataset, K=20)
coords = np.stack([eigenspace.project(eig, f) for f in dataset.faces])
mvn = gaussmodel.fit_mvn(coords)
target_z = gaussmodel.standardize(mvn, coords[42])

service = server.SessionService(dataset, eig, mvn)
httpd = server.build_server(service, port=0)
threading.Thread(target=httpd.serve_forever, daemon=True).start()
base = f"http://{httpd.server_address[0]}:{httpd.server_address[1]}"
print(f"service at {base}")


def call(method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(base + path, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


def witness_judgement(candidates, threshold=1.0):
    """Decode each PNG the way a browser would and pick the similar ones."""
    losses = {}
    for cand in candidates:
        raw = base64.b64decode(cand["png_b64"])
        face = faceio.decode_image(raw, eig.width, eig.height)
        z = gaussmodel.standardize(mvn, eigenspace.project(eig, face))
        losses[cand["id"]] = float(np.linalg.norm(z - target_z) / np.sqrt(eig.K))
    return losses


created = call("POST", "/sessions", {"seed": 7,
                                     "config": {"initial_pool_size": 12,
                                                "candidates_per_iter": 6}})
sid = created["session_id"]
batch = created["candidates"]
print(f"session {sid[:8]}… opened with {len(batch)} pool faces")

best_id, best_loss = None, float("inf")
for round_no in range(6):
    losses = witness_judgement(batch)
    keep = [cid for cid, loss in losses.items() if loss < 1.0]
    round_best = min(losses, key=losses.get)
    if losses[round_best] < best_loss:
        best_id, best_loss = round_best, losses[round_best]
    print(f"round {round_no}: marked {len(keep)}/{len(batch)} similar, "
          f"best loss so far {best_loss:.3f}")
    if best_loss < 0.45:
        final = call("POST", f"/sessions/{sid}/selection",
                     {"accepted_ids": keep, "final_id": best_id})
        print(f"declared the match: status={final['status']}, "
              f"iterations={final['result']['iterations']}")
        break
    reply = call("POST", f"/sessions/{sid}/selection", {"accepted_ids": keep})
    if reply["status"] != "awaiting_selection":
        print(f"session ended: {reply['status']}")
        break
    batch = reply["candidates"]

state = call("GET", f"/sessions/{sid}")
print("final session state:", {k: state[k] for k in ("status", "t", "accepted_count")})
httpd.shutdown()
