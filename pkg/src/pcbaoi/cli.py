"""Batch command-line front end: inspect, inject, eval, nms.

Exit codes follow a strict contract so shell pipelines can branch on the
verdict: 0 = clean (no faults), 2 = faults found (inspect only), 1 = any
error. Errors print a single diagnostic line on stderr.

A config file of ``key = value`` lines (# comments allowed) may set the
default for any flag; explicit flags win over the config, the config wins
over built-ins. Keys match the long flag names, e.g. ``subtract-mode =
absolute`` or ``color-inductor = 255,105,180``.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from PIL import Image

from .detect import (
    DEFAULT_IOU_THRESHOLD,
    DEFAULT_SCORE_THRESHOLD,
    ComponentClass,
    Detection,
    load_detections,
    nms,
    parse_detections_json,
    save_detections,
)
from .diffcore import extract_diff_pixels, subtract, threshold_diff
from .errors import DetectionParseError, PcbAoiError
from .evalkit import DEFAULT_MATCH_IOU, evaluation_report, match_predictions
from .faultgen import build_test_set, find_bare_patch
from .matcher import FlaggedDetection, classify_missing
from .raster import RasterImage, binarize, decode_image, encode_image

DEFAULT_COLORS = {
    ComponentClass.IC: (255, 255, 0),
    ComponentClass.CAPACITOR: (0, 255, 0),
    ComponentClass.INDUCTOR: (255, 105, 180),
    ComponentClass.RESISTOR: (255, 0, 0),
}

STROKE_WIDTH = 2


@dataclass(frozen=True)
class ClassColorMap:
    """RGB color per component class, used when rendering annotated output."""

    colors: Mapping[ComponentClass, tuple[int, int, int]] = field(
        default_factory=lambda: dict(DEFAULT_COLORS)
    )

    def __post_init__(self) -> None:
        missing = [c.label for c in ComponentClass if c not in self.colors]
        if missing:
            raise ValueError(f"color map missing classes: {', '.join(missing)}")
        if len(set(self.colors.values())) != len(self.colors):
            raise ValueError("class colors must be distinct")
        for c, rgb in self.colors.items():
            if len(rgb) != 3 or any(not (0 <= v <= 255) for v in rgb):
                raise ValueError(f"invalid RGB triple {rgb!r} for {c.label}")

    def for_class(self, component: ComponentClass) -> tuple[int, int, int]:
        return self.colors[component]


def render_missing(
    test: RasterImage,
    missing: Sequence[FlaggedDetection],
    colors: ClassColorMap | None = None,
) -> np.ndarray:
    """Test image as RGB with a 2-pixel class-colored rectangle per missing box.

    Strokes are drawn just inside each (clipped) box, so pixels outside the
    rectangles are bit-identical to the grayscale input.
    """
    colors = colors or ClassColorMap()
    rgb = np.repeat(test.pixels[:, :, None], 3, axis=2).copy()
    for flagged in missing:
        box = flagged.detection.bbox.clip(test.width, test.height)
        if box is None:
            continue
        color = colors.for_class(flagged.detection.component)
        t = STROKE_WIDTH
        rgb[box.y : min(box.y + t, box.y2), box.x : box.x2] = color
        rgb[max(box.y2 - t, box.y) : box.y2, box.x : box.x2] = color
        rgb[box.y : box.y2, box.x : min(box.x + t, box.x2)] = color
        rgb[box.y : box.y2, max(box.x2 - t, box.x) : box.x2] = color
    return rgb


def _encode_rgb_png(rgb: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment; keys are normalized."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().lower().replace("_", "-")] = value.strip().strip("\"'")
    return out


class _Settings:
    """Effective option values: flag > config > built-in default."""

    def __init__(self, args: argparse.Namespace, config: Mapping[str, str]):
        self._args = args
        self._config = config

    def get(self, flag: str, builtin, parse=str):
        attr = flag.replace("-", "_")
        value = getattr(self._args, attr, None)
        if value is not None:
            return value
        if flag in self._config:
            return parse(self._config[flag])
        return builtin

    def color_map(self) -> ClassColorMap:
        colors = dict(DEFAULT_COLORS)
        for component in ComponentClass:
            key = f"color-{component.label.lower()}"
            if key in self._config:
                parts = [p for p in self._config[key].replace(",", " ").split() if p]
                if len(parts) != 3:
                    raise ValueError(f"config {key}: expected 'R,G,B', got {self._config[key]!r}")
                colors[component] = tuple(int(p) for p in parts)  # type: ignore[assignment]
        return ClassColorMap(colors)


def _parse_binarize_threshold(value: str):
    if value.strip().lower() == "mean":
        return "mean"
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"binarize threshold must be 'mean' or an integer, got {value!r}"
        ) from None
    if not (0 <= n <= 255):
        raise argparse.ArgumentTypeError(f"binarize threshold {n} outside [0, 255]")
    return n


def _parse_image_size(value: str) -> tuple[int, int]:
    parts = value.lower().replace("x", " ").split()
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {value!r}")
    w, h = (int(p) for p in parts)
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"image size {value!r} must be positive")
    return (w, h)


def _infer_format(path: str, forced: str | None) -> str:
    if forced:
        return forced
    suffix = Path(path).suffix.lower()
    if suffix == ".txt":
        return "darknet"
    if suffix == ".json":
        return "json"
    raise DetectionParseError(
        f"cannot infer detections format from {path!r}; pass --format darknet|json"
    )


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise PcbAoiError(f"cannot read {path}: {exc}") from exc


def _load_image(path: str) -> RasterImage:
    return decode_image(_read_bytes(path))


def _load_detection_file(
    path: str, forced_format: str | None, image_dims: tuple[int, int] | None
) -> list[Detection]:
    fmt = _infer_format(path, forced_format)
    return load_detections(_read_bytes(path), fmt, image_dims)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcbaoi",
        description="Missing-component PCB inspection via binary subtraction "
        "and bounding-box pixel matching.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="config file of key = value defaults")
        p.add_argument("--out", help="write the machine-readable report here")

    p_inspect = sub.add_parser(
        "inspect",
        help="classify missing components on an aligned design/test image pair",
        description="Detections are assumed to be post-NMS; run the nms "
        "subcommand first if they are raw detector output.",
    )
    p_inspect.add_argument("design", help="design (golden) image, PNG or PGM")
    p_inspect.add_argument("test", help="test image, PNG or PGM")
    p_inspect.add_argument("detections", help="component detections (.txt darknet / .json)")
    p_inspect.add_argument(
        "--subtract-mode", choices=["saturating", "absolute"], help="difference mode"
    )
    p_inspect.add_argument(
        "--binarize-threshold",
        type=_parse_binarize_threshold,
        help="'mean' (default) or a fixed integer threshold",
    )
    p_inspect.add_argument(
        "--min-diff-pixels", type=int, help="diff pixels inside a box required to flag it"
    )
    p_inspect.add_argument("--format", choices=["darknet", "json"], help="detections format")
    p_inspect.add_argument("--annotate", help="write annotated test image PNG here")
    add_common(p_inspect)

    p_inject = sub.add_parser(
        "inject", help="synthesize test images with k components erased"
    )
    p_inject.add_argument("image", help="source board image, PNG or PGM")
    p_inject.add_argument("detections", help="component detections (.txt darknet / .json)")
    p_inject.add_argument("--k", type=int, required=True, help="components to erase per image")
    p_inject.add_argument("--seed", type=int, help="sampling seed (recorded in the sidecar)")
    p_inject.add_argument("--out-dir", default=".", help="directory for generated files")
    p_inject.add_argument(
        "--binarize-threshold",
        type=_parse_binarize_threshold,
        help="threshold used when scanning for bare patches",
    )
    p_inject.add_argument("--format", choices=["darknet", "json"], help="detections format")
    p_inject.add_argument("--config", help="config file of key = value defaults")

    p_eval = sub.add_parser(
        "eval", help="score predictions against ground truth (TP/FP/FN per class)"
    )
    p_eval.add_argument("predictions", help="detections JSON or inspect report JSON")
    p_eval.add_argument("truth", help="ground-truth detections JSON")
    p_eval.add_argument("--iou-threshold", type=float, help="match threshold (default 0.5)")
    add_common(p_eval)

    p_nms = sub.add_parser("nms", help="apply non-maximum suppression to a detections file")
    p_nms.add_argument("detections", help="detections file (.txt darknet / .json)")
    p_nms.add_argument("--iou-threshold", type=float, help="suppress above this IoU (default 0.45)")
    p_nms.add_argument("--score-threshold", type=float, help="drop below this score (default 0.25)")
    p_nms.add_argument("--format", choices=["darknet", "json"], help="detections format")
    p_nms.add_argument(
        "--image-size",
        type=_parse_image_size,
        help="WIDTHxHEIGHT, required for darknet input",
    )
    add_common(p_nms)

    return parser


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_inspect(args: argparse.Namespace, settings: _Settings) -> int:
    mode = settings.get("subtract-mode", "saturating")
    threshold = settings.get("binarize-threshold", "mean", _parse_binarize_threshold)
    min_diff = settings.get("min-diff-pixels", 1, int)
    fmt = settings.get("format", None)

    design = _load_image(args.design)
    test = _load_image(args.test)
    thr = None if threshold == "mean" else threshold
    design_b = binarize(design, thr)
    test_b = binarize(test, thr)
    diff = extract_diff_pixels(threshold_diff(subtract(design_b, test_b, mode)))
    detections = _load_detection_file(args.detections, fmt, design.dims)

    report = classify_missing(
        design,
        detections,
        diff,
        min_diff_pixels=min_diff,
        parameters={
            "subtract_mode": mode,
            "binarize_threshold": threshold,
            "detections_format": _infer_format(args.detections, fmt),
        },
    )
    _emit(report.to_json(), args.out)
    if args.annotate:
        Path(args.annotate).write_bytes(
            _encode_rgb_png(render_missing(test, report.missing, settings.color_map()))
        )
    return 2 if report.missing else 0


def cmd_inject(args: argparse.Namespace, settings: _Settings) -> int:
    threshold = settings.get("binarize-threshold", "mean", _parse_binarize_threshold)
    seed = settings.get("seed", None, int)
    fmt = settings.get("format", None)

    img = _load_image(args.image)
    detections = _load_detection_file(args.detections, fmt, img.dims)
    finder = partial(find_bare_patch, binarize_threshold=None if threshold == "mean" else threshold)
    try:
        cases = build_test_set(img, detections, args.k, finder, seed=seed)
    except ValueError as exc:
        raise PcbAoiError(str(exc)) from exc

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    manifest: list[dict[str, Any]] = []
    for idx, case in enumerate(cases):
        name = f"{stem}_missing{args.k}_{idx:03d}.png"
        (out_dir / name).write_bytes(encode_image(case.image, "png"))
        manifest.append({"file": name, "erased": [d.to_dict() for d in case.erased]})
        print(out_dir / name)
    sidecar = {
        "source_image": Path(args.image).name,
        "image": {"width": img.width, "height": img.height},
        "k": args.k,
        "seed": seed,
        "cases": manifest,
    }
    sidecar_path = out_dir / f"{stem}_missing{args.k}_truth.json"
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    print(sidecar_path)
    return 0


def _load_predictions(path: str) -> tuple[tuple[int, int], list[Detection]]:
    """Accept either a detections JSON document or an inspect report."""
    text = _read_bytes(path).decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DetectionParseError(f"{path}: invalid JSON: {exc}") from None
    if isinstance(doc, dict) and "missing" in doc:
        image = doc.get("image", {})
        dims = (int(image.get("width", 0)), int(image.get("height", 0)))
        return dims, [Detection.from_dict(entry) for entry in doc["missing"]]
    return parse_detections_json(text)


def cmd_eval(args: argparse.Namespace, settings: _Settings) -> int:
    iou_thr = settings.get("iou-threshold", DEFAULT_MATCH_IOU, float)
    pred_dims, predicted = _load_predictions(args.predictions)
    truth_dims, truth = parse_detections_json(_read_bytes(args.truth).decode("utf-8"))
    if predicted and truth and pred_dims != truth_dims:
        raise PcbAoiError(
            f"prediction frame {pred_dims[0]}x{pred_dims[1]} does not match "
            f"truth frame {truth_dims[0]}x{truth_dims[1]}"
        )
    stats = match_predictions(predicted, truth, iou_thr)
    report = evaluation_report(stats)

    header = f"{'Class':<12}{'TP':>6}{'FP':>6}{'FN':>6}{'Total':>8}{'Accuracy':>10}"
    print(header)
    for row in report["classes"]:
        print(
            f"{row['class']:<12}{row['tp']:>6}{row['fp']:>6}{row['fn']:>6}"
            f"{row['total']:>8}{row['accuracy']:>10.2f}"
        )
    agg = report["aggregate"]
    if agg is not None:
        print(
            f"{'All':<12}{agg['tp']:>6}{agg['fp']:>6}{agg['fn']:>6}"
            f"{agg['total']:>8}{agg['accuracy']:>10.2f}"
        )
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_nms(args: argparse.Namespace, settings: _Settings) -> int:
    iou_thr = settings.get("iou-threshold", DEFAULT_IOU_THRESHOLD, float)
    score_thr = settings.get("score-threshold", DEFAULT_SCORE_THRESHOLD, float)
    fmt = _infer_format(args.detections, settings.get("format", None))

    data = _read_bytes(args.detections)
    if fmt == "darknet":
        dims = args.image_size
        if dims is None:
            raise PcbAoiError("--image-size WIDTHxHEIGHT is required for darknet input")
        detections = load_detections(data, "darknet", dims)
    else:
        dims, detections = parse_detections_json(data.decode("utf-8"))
        if args.image_size is not None and args.image_size != dims:
            raise PcbAoiError(
                f"--image-size {args.image_size[0]}x{args.image_size[1]} conflicts with "
                f"the document's {dims[0]}x{dims[1]}"
            )
    kept = nms(detections, iou_threshold=iou_thr, score_threshold=score_thr)
    _emit(save_detections(kept, dims), args.out)
    return 0


_COMMANDS = {
    "inspect": cmd_inspect,
    "inject": cmd_inject,
    "eval": cmd_eval,
    "nms": cmd_nms,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config: dict[str, str] = {}
    if getattr(args, "config", None):
        try:
            config = parse_config(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    settings = _Settings(args, config)
    try:
        return _COMMANDS[args.command](args, settings)
    except (PcbAoiError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
