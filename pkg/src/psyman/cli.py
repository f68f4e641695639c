"""Command-line front end: stats, heatmap, embeddings, overlays, and a demo.

Exit codes: 0 success, 2 usage or data error, 3 internal invariant failure.
Every output file gains a sibling ``<name>.manifest.json`` recording the
command, seed, resolved flags, and FNV-1a digests of the inputs. All
randomness in a command flows from its single --seed value: the command
seeds one PRNG stream and draws any sub-seeds from it.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import mininet
from ._version import VERSION
from .cluster import correlation_to_dissimilarity, leaf_order, reorder, ward_linkage
from .errors import DataError, PsymanError, ShapeError
from .gradcam import Cam, CamInput, compute_cam, overlay, upsample_bilinear, write_ppm
from .manifest import RunManifest, fnv1a64_file
from .rng import Xoshiro256StarStar
from .stats import correlation_matrix, predictive_power, silhouette, write_power_csv
from .stress import StressConfig, run_stress
from .svg import heatmap_svg, scatter_svg
from .tensor_io import (
    RatingsTable,
    Tensor,
    read_ratings_csv,
    read_tensor_file,
    write_ratings_csv,
    write_tensor_file,
)
from .tsne import TsneConfig, run_tsne
from .embedding import write_embedding_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3

_TSNE_DEFAULTS = {"iterations": 1000, "lr": 200.0}
_STRESS_DEFAULTS = {"iterations": 500, "lr": 0.01}


def _parse_seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must fit in u64, got {text}")
    return value


def _parse_view(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"--view takes 'azimuth,elevation' in degrees, got {text!r}"
        )
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _write_manifest(out_path: str, command: str, seed: int, flags: dict, inputs: list[str]) -> None:
    digests = {os.path.basename(p): fnv1a64_file(p) for p in inputs}
    RunManifest(command, seed, flags, digests, VERSION).write(out_path + ".manifest.json")


def _basename_flags(**flags) -> dict:
    """Manifest flag values; path-like entries keep only their basename."""
    out = {}
    for key, value in flags.items():
        if isinstance(value, str) and os.sep in value:
            value = os.path.basename(value)
        out[key] = value
    return out


def cmd_power(args) -> int:
    pred = read_ratings_csv(args.predictions)
    truth = read_ratings_csv(args.truth)
    table = predictive_power(pred, truth)
    write_power_csv(table, args.out)
    for name, r in zip(table.attribute_names, table.coefficients):
        print(f"{name} {r:.6f}")
    flags = _basename_flags(
        predictions=os.path.basename(args.predictions),
        truth=os.path.basename(args.truth),
        out=os.path.basename(args.out),
    )
    _write_manifest(args.out, "power", args.seed, flags, [args.predictions, args.truth])
    return EXIT_OK


def cmd_heatmap(args) -> int:
    table = read_ratings_csv(args.ratings)
    corr = correlation_matrix(table)
    dendro = ward_linkage(correlation_to_dissimilarity(corr))
    order = leaf_order(dendro)
    ordered = reorder(corr, order)
    text = heatmap_svg(ordered.values, ordered.names)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print("leaf order: " + " ".join(ordered.names))
    flags = _basename_flags(
        ratings=os.path.basename(args.ratings), out=os.path.basename(args.out)
    )
    _write_manifest(args.out, "heatmap", args.seed, flags, [args.ratings])
    return EXIT_OK


def _read_features(path: str) -> tuple[np.ndarray, tuple[str, ...] | None]:
    """Feature matrix from a 2-D .pst tensor or a ratings-schema CSV."""
    if path.endswith(".pst"):
        tensor = read_tensor_file(path)
        if len(tensor.dims) != 2:
            raise ShapeError(f"feature tensor must be 2-D, got dims {tensor.dims}")
        return tensor.array.astype(np.float64), None
    table = read_ratings_csv(path)
    return table.values.copy(), table.image_ids


def cmd_embed(args) -> int:
    features, feature_ids = _read_features(args.features)
    labels = read_ratings_csv(args.labels)
    attribute = args.attribute if args.attribute is not None else labels.attribute_names[0]
    if attribute not in labels.attribute_names:
        raise DataError(
            f"attribute {attribute!r} not in labels (have: "
            f"{', '.join(labels.attribute_names)})"
        )
    if feature_ids is not None:
        for i, (a, b) in enumerate(zip(feature_ids, labels.image_ids)):
            if a != b:
                raise DataError(f"row {i}: feature id {a!r} != label id {b!r}")
    if features.shape[0] != len(labels.image_ids):
        raise DataError(
            f"{features.shape[0]} feature rows vs {len(labels.image_ids)} label rows"
        )
    label_values = labels.values[:, labels.attribute_names.index(attribute)]
    out_dims = 3 if args.view is not None else 2
    defaults = _TSNE_DEFAULTS if args.method == "tsne" else _STRESS_DEFAULTS
    iterations = args.iterations if args.iterations is not None else defaults["iterations"]
    lr = args.lr if args.lr is not None else defaults["lr"]
    if args.method == "tsne":
        cfg = TsneConfig(
            perplexity=args.perplexity,
            out_dims=out_dims,
            iterations=iterations,
            learning_rate=lr,
            seed=args.seed,
        )
        emb = run_tsne(features, cfg)
    else:
        cfg = StressConfig(
            out_dims=out_dims,
            iterations=iterations,
            learning_rate=lr,
            neighbor_k=args.neighbor_k,
            seed=args.seed,
        )
        emb = run_stress(features, cfg)
    ids = feature_ids if feature_ids is not None else labels.image_ids
    write_embedding_csv(emb, ids, label_values, args.out_csv)
    text = scatter_svg(emb.coords, label_values, view=args.view)
    with open(args.out_svg, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(
        f"method={args.method} n={features.shape[0]} dims={out_dims} "
        f"final_objective={emb.final_objective:.6f}"
    )
    flags = _basename_flags(
        features=os.path.basename(args.features),
        labels=os.path.basename(args.labels),
        method=args.method,
        attribute=attribute,
        perplexity=args.perplexity,
        iterations=iterations,
        lr=lr,
        neighbor_k=args.neighbor_k,
        view=list(args.view) if args.view is not None else None,
        out_csv=os.path.basename(args.out_csv),
        out_svg=os.path.basename(args.out_svg),
    )
    inputs = [args.features, args.labels]
    _write_manifest(args.out_csv, "embed", args.seed, flags, inputs)
    _write_manifest(args.out_svg, "embed", args.seed, flags, inputs)
    return EXIT_OK


def _as_gray_image(tensor: Tensor) -> Tensor:
    """Accept (H, W) or (1, H, W) grayscale input tensors."""
    if len(tensor.dims) == 3 and tensor.dims[0] == 1:
        return Tensor(tensor.array[0])
    if len(tensor.dims) == 2:
        return tensor
    raise ShapeError(f"image must be (H, W) or (1, H, W), got dims {tensor.dims}")


def cmd_gradcam(args) -> int:
    acts = read_tensor_file(args.activations)
    grads = read_tensor_file(args.gradients)
    image = _as_gray_image(read_tensor_file(args.image))
    cam_input = CamInput(acts, grads, args.attribute or "target")
    cam = compute_cam(cam_input)
    h, w = image.dims
    up = upsample_bilinear(cam, h, w)
    blended = overlay(image, up, args.alpha)
    write_ppm(blended, args.out)
    print(f"cam max {float(cam.map.array.max()):.6f} -> {os.path.basename(args.out)}")
    flags = _basename_flags(
        activations=os.path.basename(args.activations),
        gradients=os.path.basename(args.gradients),
        image=os.path.basename(args.image),
        attribute=args.attribute,
        alpha=args.alpha,
        out=os.path.basename(args.out),
    )
    _write_manifest(
        args.out, "gradcam", args.seed, flags,
        [args.activations, args.gradients, args.image],
    )
    return EXIT_OK


class _StageFailure(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage} failed: {message}")
        self.stage = stage


def _demo_data(rng: Xoshiro256StarStar, n: int, size: int):
    """Synthetic two-class set: images lit on the left or on the right."""
    images = np.empty((n, 1, size, size), dtype=np.float32)
    labels = np.empty(n, dtype=np.int64)
    half = size // 2
    for i in range(n):
        label = i % 2
        amplitude = 0.5 + 0.4 * rng.random()
        base = 0.05 * np.abs(rng.normals(size * size)).reshape(size, size)
        img = 0.1 + base
        if label == 0:
            img[:, :half] += amplitude
        else:
            img[:, half:] += amplitude
        images[i, 0] = np.clip(img, 0.0, 1.0).astype(np.float32)
        labels[i] = label
    ids = tuple(f"img_{i:03d}" for i in range(n))
    lit_left = images[:, 0, :, :half].mean(axis=(1, 2)).astype(np.float64)
    lit_right = images[:, 0, :, half:].mean(axis=(1, 2)).astype(np.float64)
    truth = RatingsTable(ids, ("lit_left", "lit_right"), np.column_stack([lit_left, lit_right]))
    return images, labels, truth


def cmd_demo(args) -> int:
    out_dir = args.out_dir or tempfile.mkdtemp(prefix="psyman-demo-")
    os.makedirs(out_dir, exist_ok=True)
    path = lambda name: os.path.join(out_dir, name)  # noqa: E731
    rng = Xoshiro256StarStar(args.seed)
    stage = "data"
    try:
        n, size = 60, 16
        images, labels, truth = _demo_data(rng, n, size)
        write_ratings_csv(truth, path("truth.csv"))
        write_tensor_file(Tensor(images), path("images.pst"))
        write_tensor_file(Tensor(images.reshape(n, -1)), path("features.pst"))
        print(f"stage data: images={n} size={size}x{size} classes=2")

        stage = "train"
        net = mininet.init(rng.next_u64(), size, 2)
        net, losses = mininet.train_steps(net, images, labels, lr=0.05, steps=200)
        probs = np.stack([mininet.forward(net, images[i]).probs for i in range(n)])
        accuracy = float(np.mean(np.argmax(probs, axis=1) == labels))
        if accuracy < 0.95:
            raise _StageFailure(stage, f"training accuracy {accuracy:.3f} < 0.95")
        mininet.save_params(net, path("net.pst"), path("net.pst.idx"))
        print(
            f"stage train: steps=200 lr=0.05 loss={losses[-1]:.4f} "
            f"accuracy={accuracy:.3f}"
        )

        stage = "predict"
        pred = RatingsTable(truth.image_ids, ("lit_left", "lit_right"), probs.astype(np.float64))
        write_ratings_csv(pred, path("predictions.csv"))
        print(f"stage predict: rows={n} attributes=lit_left,lit_right")

        stage = "power"
        table = predictive_power(pred, truth)
        write_power_csv(table, path("power.csv"))
        if np.any(np.abs(table.coefficients) > 1.0):
            raise _StageFailure(stage, "coefficient outside [-1, 1]")
        _write_manifest(
            path("power.csv"), "demo", args.seed,
            {"stage": "power"}, [path("predictions.csv"), path("truth.csv")],
        )
        pairs = " ".join(
            f"{name}={r:.3f}" for name, r in zip(table.attribute_names, table.coefficients)
        )
        print(f"stage power: {pairs}")

        stage = "gradcam"
        trace = mininet.forward(net, images[0])
        _, fmap_grads = mininet.backward(net, images[0], int(labels[0]))
        acts = Tensor(trace.conv2_act.astype(np.float32))
        write_tensor_file(acts, path("activations.pst"))
        write_tensor_file(fmap_grads, path("gradients.pst"))
        write_tensor_file(Tensor(images[0, 0]), path("image.pst"))
        cam = compute_cam(CamInput(acts, fmap_grads, "lit_left"))
        up = upsample_bilinear(cam, size, size)
        blended = overlay(Tensor(images[0, 0]), up, 0.5)
        write_ppm(blended, path("overlay.ppm"))
        _write_manifest(
            path("overlay.ppm"), "demo", args.seed, {"stage": "gradcam", "alpha": 0.5},
            [path("activations.pst"), path("gradients.pst"), path("image.pst")],
        )
        print(f"stage gradcam: cam_max={float(cam.map.array.max()):.6f}")

        stage = "tsne"
        feats = images.reshape(n, -1).astype(np.float64)
        cfg = TsneConfig(perplexity=12.0, iterations=400, seed=rng.next_u64())
        emb = run_tsne(feats, cfg)
        label_values = truth.values[:, 0]
        write_embedding_csv(emb, truth.image_ids, label_values, path("embedding.csv"))
        with open(path("scatter.svg"), "w", encoding="utf-8") as fh:
            fh.write(scatter_svg(emb.coords, label_values))
        _write_manifest(
            path("embedding.csv"), "demo", args.seed, {"stage": "tsne"},
            [path("features.pst"), path("truth.csv")],
        )
        score = silhouette(emb.coords, labels)
        if not np.isfinite(emb.final_objective):
            raise _StageFailure(stage, "final KL is not finite")
        print(
            f"stage tsne: final_kl={emb.final_objective:.4f} "
            f"silhouette={score:.3f}"
        )
    except _StageFailure as exc:
        print(f"demo: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001  stage context beats a bare traceback
        print(f"demo: stage {stage} failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(f"demo outputs: {out_dir}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psyman",
        description="Explanation toolkit: predictive power, clustered heatmaps, "
        "activation overlays, and manifold embeddings.",
    )
    parser.add_argument("--version", action="version", version=f"psyman {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=_parse_seed, default=42, help="u64 PRNG seed")

    p = sub.add_parser("power", help="per-attribute Pearson of predictions vs truth")
    p.add_argument("predictions")
    p.add_argument("truth")
    p.add_argument("out")
    add_seed(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("heatmap", help="Ward-ordered correlation heatmap SVG")
    p.add_argument("ratings")
    p.add_argument("out")
    add_seed(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("embed", help="t-SNE or stress embedding to CSV + SVG")
    p.add_argument("features", help="2-D .pst tensor or ratings-schema CSV")
    p.add_argument("labels", help="ratings-schema CSV supplying point colors")
    p.add_argument("out_csv")
    p.add_argument("out_svg")
    p.add_argument("--method", choices=("tsne", "stress"), default="tsne")
    p.add_argument("--attribute", default=None, help="label column (default: first)")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--neighbor-k", dest="neighbor_k", type=int, default=None)
    p.add_argument(
        "--view", type=_parse_view, default=None,
        help="azimuth,elevation in degrees; requests a 3-D embedding",
    )
    add_seed(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("gradcam", help="class activation overlay PPM")
    p.add_argument("activations")
    p.add_argument("gradients")
    p.add_argument("image")
    p.add_argument("out")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--attribute", default=None, help="name recorded for the target")
    add_seed(p)
    p.set_defaults(func=cmd_gradcam)

    p = sub.add_parser("demo", help="end-to-end pipeline on synthetic data")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    add_seed(p)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (PsymanError, OSError) as exc:
        print(f"psyman {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001  anything else is an internal failure
        print(f"psyman {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
