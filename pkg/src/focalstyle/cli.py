"""Command-line frontend: ``focalstyle mask|stylize|classify``.

Option values resolve with the precedence command-line flag > config-file
key > built-in default.  The config file is flat ``key = value`` text
where each key is a long option name without the leading dashes
(``alpha-min = 2.5``).  Exit codes: 0 success, 1 runtime failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .backends import BACKEND_NAMES, get_backend
from .errors import FocalStyleError
from .imagecore import (
    AlphaMap,
    ImageTensor,
    load_image,
    read_alphamap,
    resize_image,
    resize_partition_nearest,
    save_image,
    save_mask_png,
    write_alphamap,
)
from .saliency import (
    DEFAULT_ALPHA_MAX,
    DEFAULT_ALPHA_MIN,
    MaskMethodConfig,
    generate_mask,
    load_segmentation,
)
from .styler import StyleConfig, stylize, write_trace

MAX_WORKING_SIDE = 512

_METHOD_BY_FLAG = {
    "patch": "patch",
    "patch-avg": "patch-averaged",
    "superpixel": "superpixel",
    "segmentation": "segmentation",
}


def _parse_shifts(text: str) -> tuple[tuple[int, int], ...]:
    """Parse ``"dy,dx;dy,dx"`` into grid offsets."""
    shifts = []
    for part in text.split(";"):
        fields = part.split(",")
        if len(fields) != 2:
            raise ValueError(f"expected 'dy,dx' pairs separated by ';', got {text!r}")
        shifts.append((int(fields[0]), int(fields[1])))
    return tuple(shifts)


def _parse_superpixel_params(text: str) -> tuple[tuple[int, float], ...]:
    """Parse ``"n,c;n,c"`` into (segment count, compactness) pairs."""
    params = []
    for part in text.split(";"):
        fields = part.split(",")
        if len(fields) != 2:
            raise ValueError(f"expected 'n,c' pairs separated by ';', got {text!r}")
        params.append((int(fields[0]), float(fields[1])))
    return tuple(params)


def _parse_fill_color(text: str) -> tuple[float, float, float]:
    """Parse ``"r,g,b"`` with channels in [0, 1]."""
    fields = text.split(",")
    if len(fields) != 3:
        raise ValueError(f"expected 'r,g,b', got {text!r}")
    color = tuple(float(f) for f in fields)
    if any(not 0.0 <= v <= 1.0 for v in color):
        raise ValueError(f"fill color channels must be in [0, 1], got {text!r}")
    return color


def _choice(options: tuple[str, ...]):
    def convert(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {text!r}")
        return text

    return convert


# option name -> (converter, built-in default, help); used for both flag
# parsing and config-file values so the two sources behave identically.
_MASK_OPTIONS: dict[str, tuple] = {
    "content": (str, None, "input image (PNG or JPEG)"),
    "output": (str, None, "output path; writes <base>.alphamap and <base>.png"),
    "method": (
        _choice(tuple(_METHOD_BY_FLAG)),
        "patch-avg",
        "mask construction: patch, patch-avg, superpixel, or segmentation",
    ),
    "patch-size": (int, None, "occlusion patch side in pixels (default: min(H,W)//8)"),
    "shifts": (_parse_shifts, None, "grid offsets 'dy,dx;dy,dx' (default: half-patch shifts)"),
    "superpixel-params": (
        _parse_superpixel_params,
        None,
        "sweeps 'count,compactness;...' (default: 50,10;100,10;200,20)",
    ),
    "fill-color": (
        _parse_fill_color,
        None,
        "occlusion fill 'r,g,b' in [0,1] (default: image mean color)",
    ),
    "alpha-min": (float, DEFAULT_ALPHA_MIN, "strength given to the least important region"),
    "alpha-max": (float, DEFAULT_ALPHA_MAX, "strength given to the most important region"),
    "segmentation-map": (str, None, "label image used by --method segmentation"),
    "backend": (_choice(BACKEND_NAMES), "toy", f"classifier backend: {', '.join(BACKEND_NAMES)}"),
}

_STYLIZE_OPTIONS: dict[str, tuple] = {
    **_MASK_OPTIONS,
    "output": (str, None, "stylized image output path (PNG)"),
    "style": (str, None, "style image (PNG or JPEG)"),
    "mask": (str, None, "read the strength map from this .alphamap file"),
    "save-mask": (str, None, "also write the generated mask to <base>.alphamap/.png"),
    "uniform-alpha": (float, None, "one constant strength everywhere instead of a mask"),
    "iterations": (int, 500, "optimizer steps"),
    "step-size": (float, 0.02, "Adam learning rate"),
    "style-weight": (float, 1.0, "multiplier on the style term of the objective"),
    "init": (
        _choice(("content", "random")),
        "content",
        "start from the content image or from seeded noise",
    ),
    "seed": (int, 0, "RNG seed for --init random"),
    "trace": (str, None, "write per-iteration losses to this CSV file"),
}

_CLASSIFY_OPTIONS: dict[str, tuple] = {
    "content": (str, None, "input image (PNG or JPEG)"),
    "backend": (_choice(BACKEND_NAMES), "toy", f"classifier backend: {', '.join(BACKEND_NAMES)}"),
    "topk": (int, 5, "number of classes to print"),
}

_COMMAND_OPTIONS = {
    "mask": _MASK_OPTIONS,
    "stylize": _STYLIZE_OPTIONS,
    "classify": _CLASSIFY_OPTIONS,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="focalstyle",
        description="Style transfer with spatially varying strength driven by "
        "occlusion-based object importance.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "mask": "generate a stylization-strength mask from one image",
        "stylize": "optimize a stylized image from content + style inputs",
        "classify": "print the backend's top-k classes for an image",
    }
    subs: dict[str, argparse.ArgumentParser] = {}
    for command, options in _COMMAND_OPTIONS.items():
        sub = subparsers.add_parser(command, help=descriptions[command])
        for name, (converter, _default, help_text) in options.items():
            sub.add_argument(f"--{name}", type=converter, default=None, help=help_text)
        sub.add_argument(
            "--config",
            type=str,
            default=None,
            help="flat 'key = value' file supplying defaults for any option",
        )
        subs[command] = sub
    return parser, subs


def _read_config_file(path: str, options: dict[str, tuple], fail) -> dict[str, object]:
    """Parse a flat ``key = value`` config file with the option converters."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        fail(f"cannot read config file: {exc}")
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            fail(f"config line {lineno}: expected 'key = value', got {raw_line!r}")
        key = key.strip().replace("_", "-")
        value = value.strip()
        if key not in options:
            fail(f"config line {lineno}: unknown option {key!r}")
        converter = options[key][0]
        try:
            values[key] = converter(value)
        except ValueError as exc:
            fail(f"config line {lineno}: invalid value for {key!r}: {exc}")
    return values


def _merge_options(args: argparse.Namespace, command: str, fail) -> dict[str, object]:
    options = _COMMAND_OPTIONS[command]
    from_config: dict[str, object] = {}
    if args.config is not None:
        from_config = _read_config_file(args.config, options, fail)
    merged: dict[str, object] = {}
    for name, (_converter, default, _help) in options.items():
        flag_value = getattr(args, name.replace("-", "_"))
        if flag_value is not None:
            merged[name] = flag_value
        elif name in from_config:
            merged[name] = from_config[name]
        else:
            merged[name] = default
    return merged


def _require(merged: dict[str, object], names: tuple[str, ...], fail) -> None:
    for name in names:
        if merged[name] is None:
            fail(f"--{name} is required")


def _working_image(path: str) -> ImageTensor:
    """Load an image and cap its longest side at the working resolution."""
    image = load_image(path)
    longest = max(image.height, image.width)
    if longest <= MAX_WORKING_SIDE:
        return image
    scale = MAX_WORKING_SIDE / longest
    th = max(1, round(image.height * scale))
    tw = max(1, round(image.width * scale))
    resized = resize_image(image, th, tw)
    print(
        f"working resolution {tw}x{th} (resized from {image.width}x{image.height})",
        file=sys.stderr,
    )
    return resized


def _output_base(path: str) -> str:
    """Strip a trailing .alphamap/.png so both artifacts share one base name."""
    for suffix in (".alphamap", ".png"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def _mask_config(merged: dict[str, object]) -> MaskMethodConfig:
    return MaskMethodConfig(
        method=_METHOD_BY_FLAG[merged["method"]],
        patch_size=merged["patch-size"],
        grid_shifts=merged["shifts"],
        superpixel_params=merged["superpixel-params"],
        fill_color=merged["fill-color"],
        alpha_min=merged["alpha-min"],
        alpha_max=merged["alpha-max"],
    )


def _generate_inline_mask(backend, content: ImageTensor, merged: dict[str, object]):
    segmentation = None
    if merged["method"] == "segmentation":
        segmentation = resize_partition_nearest(
            load_segmentation(merged["segmentation-map"]), content.height, content.width
        )
    return generate_mask(backend, content, _mask_config(merged), segmentation)


def _validate_mask_flags(merged: dict[str, object], fail) -> None:
    if merged["method"] == "segmentation" and merged["segmentation-map"] is None:
        fail("--method segmentation requires --segmentation-map")
    if merged["method"] != "segmentation" and merged["segmentation-map"] is not None:
        fail("--segmentation-map is only valid with --method segmentation")


def cmd_mask(merged: dict[str, object], fail) -> int:
    _require(merged, ("content", "output"), fail)
    _validate_mask_flags(merged, fail)
    content = _working_image(merged["content"])
    backend = get_backend(merged["backend"])
    mask, scores = _generate_inline_mask(backend, content, merged)

    base = _output_base(merged["output"])
    write_alphamap(mask, base + ".alphamap")
    save_mask_png(mask, base + ".png")

    values = [s.score for s in scores]
    best = max(scores, key=lambda s: s.score)
    print(f"regions: {len(scores)}")
    print(f"score range: {min(values):.6f} .. {max(values):.6f}")
    print(f"max region: {best.label} (score {best.score:.6f})")
    return 0


def cmd_stylize(merged: dict[str, object], fail) -> int:
    _require(merged, ("content", "style", "output"), fail)
    if merged["mask"] is not None and merged["uniform-alpha"] is not None:
        fail("--mask and --uniform-alpha are mutually exclusive")
    if merged["uniform-alpha"] is not None and merged["uniform-alpha"] < 0:
        fail("--uniform-alpha must be >= 0")
    inline = merged["mask"] is None and merged["uniform-alpha"] is None
    if inline:
        _validate_mask_flags(merged, fail)

    content = _working_image(merged["content"])
    style = _working_image(merged["style"])
    backend = get_backend(merged["backend"])

    if merged["mask"] is not None:
        alpha = read_alphamap(merged["mask"])
        if (alpha.height, alpha.width) != (content.height, content.width):
            raise ValueError(
                f"mask dimensions {alpha.width}x{alpha.height} do not match "
                f"working image {content.width}x{content.height}"
            )
    elif merged["uniform-alpha"] is not None:
        alpha = AlphaMap(
            np.full((content.height, content.width), merged["uniform-alpha"], dtype=np.float32)
        )
    else:
        alpha, _scores = _generate_inline_mask(backend, content, merged)

    if merged["save-mask"] is not None:
        base = _output_base(merged["save-mask"])
        write_alphamap(alpha, base + ".alphamap")
        save_mask_png(alpha, base + ".png")

    config = StyleConfig(
        style_weight=merged["style-weight"],
        iterations=merged["iterations"],
        step_size=merged["step-size"],
        init_mode=merged["init"],
        random_seed=merged["seed"],
    )
    result = stylize(backend, content, style, alpha, config)
    save_image(result.image, merged["output"])
    if merged["trace"] is not None:
        write_trace(merged["trace"], result.trace)
    return 0


def cmd_classify(merged: dict[str, object], fail) -> int:
    _require(merged, ("content",), fail)
    if merged["topk"] < 1:
        fail("--topk must be >= 1")
    image = _working_image(merged["content"])
    backend = get_backend(merged["backend"])
    distribution = backend.classify(image)
    k = min(merged["topk"], distribution.class_count)
    for rank, (index, prob) in enumerate(distribution.top_k(k), start=1):
        print(f"{rank}. {backend.class_name(index)} {prob:.6f}")
    return 0


_COMMANDS = {"mask": cmd_mask, "stylize": cmd_stylize, "classify": cmd_classify}


def main(argv: list[str] | None = None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    sub = subs[args.command]
    merged = _merge_options(args, args.command, sub.error)
    try:
        return _COMMANDS[args.command](merged, sub.error)
    except (FocalStyleError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
