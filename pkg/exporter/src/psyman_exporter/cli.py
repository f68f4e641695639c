"""Command-line front end for the exporter.

Subcommands cover the full round trip: ``demo-data`` renders a rated
synthetic-face set, ``train`` fits the rating head and saves a model
bundle, ``predict`` writes a ratings-schema CSV of model scores, and
``cam`` writes the activation/gradient/image triplet for one
attribution target.  The outputs are meant to be fed straight to the
``psyman`` tools (``power``, ``gradcam``).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np
import torch

from .export import ExportManifest, export_cam_inputs, export_predictions
from .faces import face_dataset, save_png
from .model import Preprocess, build_model, fine_tune_head, load_image


def _write_ratings_csv(path: str, ids: list[str], attributes: list[str], values: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("image_id," + ",".join(attributes) + "\n")
        for image_id, row in zip(ids, values):
            fh.write(image_id + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _read_ratings_csv(path: str) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "image_id" or len(header) < 2:
            raise ValueError(f"{path}: expected an image_id header plus attribute columns")
        ids, rows = [], []
        for row in reader:
            if len(row) != len(header):
                raise ValueError(f"{path}: row {len(ids) + 1} has {len(row)} cells")
            ids.append(row[0])
            rows.append([float(cell) for cell in row[1:]])
    return ids, header[1:], np.asarray(rows, dtype=np.float64)


def _load_bundle(path: str):
    """Rebuild a trained model from a head-only bundle.

    The backbone is reproducible from its init seed and is never
    trained, so the bundle stores only the rating-head weights.
    """
    bundle = torch.load(path, map_location="cpu", weights_only=True)
    attributes = list(bundle["attributes"])
    model = build_model(len(attributes), seed=int(bundle["model_seed"]))
    model.classifier[6].load_state_dict(bundle["head_state"])
    pre_desc = bundle["preprocess"]
    pre = Preprocess(
        size=int(pre_desc["size"]),
        mean=tuple(pre_desc["mean"]),
        std=tuple(pre_desc["std"]),
    )
    return model, attributes, pre, str(bundle["model_id"])


def cmd_demo_data(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    images, attributes, ratings = face_dataset(args.count, seed=args.seed, size=args.size)
    ids = [f"face_{i:03d}" for i in range(args.count)]
    for image_id, image in zip(ids, images):
        save_png(os.path.join(args.out_dir, image_id + ".png"), image)
    _write_ratings_csv(os.path.join(args.out_dir, "ratings.csv"), ids, attributes, ratings)
    print(f"wrote {args.count} faces + ratings.csv to {args.out_dir}")
    return 0


def cmd_train(args) -> int:
    ids, attributes, ratings = _read_ratings_csv(args.ratings)
    pre = Preprocess(size=args.size)
    tensors, targets = [], []
    for image_id, row in zip(ids, ratings):
        path = os.path.join(args.images_dir, image_id + ".png")
        tensors.append(pre.apply(load_image(path)))
        targets.append(row)
    images = torch.stack(tensors)
    target_tensor = torch.tensor(np.asarray(targets), dtype=torch.float32)

    model = build_model(len(attributes), seed=args.model_seed)
    record = fine_tune_head(
        model,
        images,
        target_tensor,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
        augment=not args.no_augment,
    )
    model_id = f"vgg16-seed{args.model_seed}-tuned"
    bundle = {
        "head_state": model.classifier[6].state_dict(),
        "attributes": attributes,
        "preprocess": pre.describe(),
        "training": record.describe(),
        "model_seed": args.model_seed,
        "model_id": model_id,
    }
    torch.save(bundle, args.out)
    manifest = ExportManifest(
        model_id=model_id,
        images=[i + ".png" for i in ids],
        preprocessing=pre.describe(),
        training=record.describe(),
    )
    manifest.add_file(args.out)
    manifest.write(args.out + ".export.manifest.json")
    print(f"trained head on {len(ids)} images, final loss {record.losses[-1]:.4f} -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model, attributes, pre, model_id = _load_bundle(args.model)
    names = sorted(n for n in os.listdir(args.images_dir) if n.lower().endswith(".png"))
    paths = [os.path.join(args.images_dir, n) for n in names]
    if not paths:
        raise ValueError(f"no .png images found in {args.images_dir}")
    manifest = export_predictions(model, paths, attributes, args.out, pre, model_id)
    print(f"predicted {len(manifest.images)} images -> {args.out}")
    return 0


def cmd_cam(args) -> int:
    model, attributes, pre, model_id = _load_bundle(args.model)
    image = load_image(args.image)
    export_cam_inputs(
        model, image, args.attribute, attributes, args.layer, args.out_dir, pre, model_id
    )
    print(f"wrote activations/gradients/image triplet for {args.attribute!r} to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psyman-exporter",
        description="Export VGG16 rating predictions and attribution inputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-data", help="render rated synthetic faces")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=224)
    p.set_defaults(func=cmd_demo_data)

    p = sub.add_parser("train", help="fine-tune the rating head and save a bundle")
    p.add_argument("--images-dir", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=24)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=0, help="training shuffle/augment seed")
    p.add_argument("--model-seed", type=int, default=42, help="backbone init seed")
    p.add_argument("--size", type=int, default=224, help="preprocess resize target")
    p.add_argument("--no-augment", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a directory of images to CSV")
    p.add_argument("--images-dir", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cam", help="export an attribution triplet as .pst files")
    p.add_argument("--image", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--attribute", required=True)
    p.add_argument("--layer", default="features.3")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_cam)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, OSError, KeyError) as exc:
        print(f"psyman-exporter: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
