"""Command-line entry points for the full pipeline.

    facesearch ingest  --dir faces/ --out corpus.npz --percentile 0.15
    facesearch fit     --dataset corpus.npz --k 100 --out models/
    facesearch stats   --dataset corpus.npz --models models/ --seed 7
    facesearch random  --models models/ -n 16 --out generated/ --seed 7
    facesearch search  --models models/ --dataset corpus.npz --target who.pgm \
                       --epsilon 1.0 --epsilon-star 0.3 --seed 7
    facesearch serve   --models models/ --dataset corpus.npz --bind 0.0.0.0:8710

All commands are deterministic given --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import eigenspace, faceio, gaussmodel, search, server, skewnormal

EIGEN_FILENAME = "eigen.model"
MVN_FILENAME = "mvn.model"


def load_models(models_dir: str):
    eig = eigenspace.load_model(os.path.join(models_dir, EIGEN_FILENAME))
    mvn = gaussmodel.load_mvn(os.path.join(models_dir, MVN_FILENAME))
    return eig, mvn


def cmd_ingest(args) -> int:
    errors: dict[str, str] = {}
    dataset = faceio.load_directory(args.dir, args.width, args.height, errors=errors)
    for name, msg in errors.items():
        print(f"skipping {name}: {msg}", file=sys.stderr)
    if len(dataset) == 0:
        print("error: no readable images found", file=sys.stderr)
        return 1
    scores = np.array([faceio.symmetry_index(f) for f in dataset.faces])
    kept = faceio.filter_symmetric(dataset, args.percentile)
    manifest = {
        "n_input": len(dataset),
        "n_kept": len(kept),
        "percentile": args.percentile,
        "symmetry": {
            "min": float(scores.min()),
            "mean": float(scores.mean()),
            "max": float(scores.max()),
        },
        "skipped": sorted(errors),
    }
    faceio.save_dataset(kept, args.out, manifest)
    print(json.dumps(manifest, indent=2))
    return 0


_TABLE_KS = (1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 70, 100, 150, 200, 300, 500)


def cmd_fit(args) -> int:
    dataset, _ = faceio.load_dataset(args.dataset)
    eig = eigenspace.fit_eigenmodel(dataset, args.k)
    coords = np.stack([eigenspace.project(eig, f) for f in dataset.faces])
    mvn = gaussmodel.fit_mvn(coords)
    os.makedirs(args.out, exist_ok=True)
    eigenspace.save_model(eig, os.path.join(args.out, EIGEN_FILENAME))
    gaussmodel.save_mvn(mvn, os.path.join(args.out, MVN_FILENAME))
    ks = sorted({k for k in _TABLE_KS if k < eig.K} | {eig.K})
    print("k\tcumulative_explained_variance")
    for k in ks:
        print(f"{k}\t{eigenspace.explained_variance(eig, k):.6f}")
    print(f"models written to {args.out}", file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    dataset, _ = faceio.load_dataset(args.dataset)
    eig, _ = load_models(args.models)
    coords = np.stack([eigenspace.project(eig, f) for f in dataset.faces])
    subsample = min(args.subsample, coords.shape[0])
    report = gaussmodel.bootstrap_normality(
        coords, args.bootstrap, subsample, args.seed
    )
    text = report.to_json_str()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_random(args) -> int:
    eig, mvn = load_models(args.models)
    os.makedirs(args.out, exist_ok=True)
    coords = gaussmodel.sample_mvn(mvn, args.n, args.seed)
    for i in range(args.n):
        face = eigenspace.reconstruct(eig, coords[i])
        path = os.path.join(args.out, f"face_{i:04d}.pgm")
        with open(path, "wb") as fh:
            fh.write(faceio.encode_image(face, "pgm"))
    print(f"wrote {args.n} faces to {args.out}")
    return 0


def cmd_search(args) -> int:
    eig, mvn = load_models(args.models)
    dataset, _ = faceio.load_dataset(args.dataset)
    with open(args.target, "rb") as fh:
        target_face = faceio.decode_image(fh.read(), eig.width, eig.height)
    target_z = gaussmodel.standardize(mvn, eigenspace.project(eig, target_face))
    oracle = search.SimulatedOracle(target_z, args.epsilon, args.epsilon_star)
    config = search.SearchConfig(
        epsilon=args.epsilon,
        epsilon_star=args.epsilon_star,
        bandwidth=args.bandwidth,
        zeta=args.zeta,
        candidates_per_iter=args.per_iter,
        initial_pool_size=args.pool_size,
        max_iters=args.max_iters,
    )
    try:
        state = search.init_session(dataset, eig, mvn, oracle, config, args.seed)
    except search.EmptyAcceptedSetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = search.run(state)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            fh.write(search.trace_to_csv(result))
    if args.trace_json:
        with open(args.trace_json, "w") as fh:
            fh.write(search.trace_to_json(result) + "\n")
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(faceio.encode_image(result.best_face, "pgm"))
    print(
        json.dumps(
            {
                "best_id": result.best_id,
                "best_loss": result.best_loss,
                "iterations": result.iterations,
                "converged": result.converged,
                "accepted_count": len(state.accepted),
            },
            indent=2,
        )
    )
    return 0


def cmd_serve(args) -> int:
    eig, mvn = load_models(args.models)
    dataset, _ = faceio.load_dataset(args.dataset)
    host, _, port = args.bind.rpartition(":")
    service = server.SessionService(
        dataset, eig, mvn, snapshot_dir=args.snapshot_dir
    )
    server.serve_forever(service, host or "127.0.0.1", int(port), ui_dir=args.ui)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facesearch", description="Face-space search pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="decode, symmetry-filter and archive a corpus")
    p.add_argument("--dir", required=True, help="directory of .pgm/.png faces")
    p.add_argument("--out", required=True, help="output dataset archive (.npz)")
    p.add_argument(
        "--percentile",
        type=float,
        default=faceio.DEFAULT_SYMMETRY_PERCENTILE,
        help="fraction of most-symmetric faces to keep (default 0.15)",
    )
    p.add_argument("--width", type=int, default=faceio.DEFAULT_WIDTH)
    p.add_argument("--height", type=int, default=faceio.DEFAULT_HEIGHT)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit eigenface basis and coordinate Gaussian")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=100, help="retained eigenfaces")
    p.add_argument("--out", required=True, help="output directory for model files")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("stats", help="normality diagnostics of the coordinates")
    p.add_argument("--dataset", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--bootstrap", type=int, default=100, help="replications B")
    p.add_argument("--subsample", type=int, default=1000, help="resample size m")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("random", help="generate faces from the Gaussian model")
    p.add_argument("--models", required=True)
    p.add_argument("-n", type=int, default=9)
    p.add_argument("--out", required=True, help="output directory for .pgm files")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("search", help="run the adaptive search with a simulated witness")
    p.add_argument("--models", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--target", required=True, help="target face image (pgm/png)")
    p.add_argument("--epsilon", type=float, required=True, help="local acceptance loss")
    p.add_argument("--epsilon-star", type=float, required=True, help="global acceptance loss")
    p.add_argument("--bandwidth", type=float, default=0.3)
    p.add_argument("--zeta", type=float, default=skewnormal.DEFAULT_ZETA)
    p.add_argument("--per-iter", type=int, default=9, help="candidates per iteration")
    p.add_argument("--pool-size", type=int, default=30, help="initial pool size")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write per-iteration trace CSV here")
    p.add_argument("--trace-json", help="write the trace as JSON here")
    p.add_argument("--out", help="write the best face as PGM here")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("serve", help="run the interactive session service")
    p.add_argument("--models", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--bind", default="127.0.0.1:8710", help="host:port")
    p.add_argument("--ui", help="directory of static UI files to serve")
    p.add_argument("--snapshot-dir", help="write per-session JSON snapshots here")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        faceio.ImageFormatError,
        eigenspace.ModelFormatError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
