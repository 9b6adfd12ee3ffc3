"""Command-line entry point: ``tcsynth <command> ...``.

Exit codes: 0 success, 1 other failure, 2 bad config or usage, 3 missing or
unusable resource.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from PIL import Image

from .config import load_config
from .errors import ConfigError, ResourceError, TcsynthError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


def _positive(value: str) -> int:
    n = int(value)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {n}")
    return n


def _non_negative(value: str) -> int:
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {n}")
    return n


def cmd_generate(args: argparse.Namespace) -> int:
    from .pipeline import build_resources, generate_dataset

    config = load_config(args.config)
    if args.output:
        config = config.replace(output_dir=Path(args.output).resolve())
    res = build_resources(config)
    if res.rejected_words:
        print(f"rejected words: {len(res.rejected_words)}")
    print(res.plan.describe())
    if args.dry_run:
        return EXIT_OK
    manifest = generate_dataset(config, workers=args.workers, resources=res)
    print(f"wrote {len(manifest):,} samples to {manifest.output_dir}")
    print(f"images/minute: {manifest.report.images_per_minute:,.0f}")
    return EXIT_OK


def cmd_preview(args: argparse.Namespace) -> int:
    from .pipeline import build_resources, render_preview

    res = build_resources(load_config(args.config))
    sheet, records = render_preview(res, args.count, args.columns)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(sheet, mode="L").save(out, format="PNG")
    for r in records:
        print(f"{r.index}\t{r.background_kind}\t{r.label}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    print(f"{args.config}: ok (units simple={config.units_simple} wild={config.units_wild}, seed={config.seed})")
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    from .curation import split_balanced
    from .pipeline import read_manifest

    rows = read_manifest(args.manifest)
    plan = split_balanced([label for _, label in rows], args.test_fraction, tolerance=args.tolerance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, idx in (("train.tsv", plan.train), ("test.tsv", plan.test)):
        with open(out / name, "w", encoding="utf-8", newline="\n") as f:
            f.writelines(f"{rows[i][0]}\t{rows[i][1]}\n" for i in idx)
    (out / "balance.tsv").write_text(plan.balance_report(), encoding="utf-8")
    print(f"train: {len(plan.train)}  test: {len(plan.test)}  ({plan.test_fraction:.2%} test)")
    return EXIT_OK


def cmd_augment(args: argparse.Namespace) -> int:
    from .curation import augment, write_augmented
    from .pipeline import read_manifest, resolve_workers

    manifest = Path(args.manifest)
    rows = read_manifest(manifest)
    aug = augment(rows, args.scales, args.distort, args.stretch, args.perspective, seed=args.seed)
    print(f"records: {len(rows):,}  variants per record: {aug.per_record}  total: {len(aug):,}")
    if args.dry_run:
        return EXIT_OK
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(out / "manifest.tsv", "w", encoding="utf-8", newline="\n") as f:
        for rel, label in write_augmented(aug, manifest.parent, out, workers=resolve_workers(args.workers)):
            f.write(f"{rel}\t{label}\n")
            n += 1
    print(f"wrote {n:,} images to {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from .evalkit import mismatches, read_pairs, word_accuracy

    pred, ref = read_pairs(args.predictions), read_pairs(args.references)
    acc = word_accuracy(pred, ref)
    print(f"word accuracy: {float(acc) * 100:.2f}% ({int(acc * len(ref))}/{len(ref)})")
    wrong = mismatches(pred, ref)
    for key, p, r in wrong[: args.show]:
        print(f"{key}\tpred={p}\tref={r}")
    if len(wrong) > args.show:
        print(f"... {len(wrong) - args.show} more mismatches")
    return EXIT_OK


def cmd_fonts_list(args: argparse.Namespace) -> int:
    from .typography import FontRegistry

    font_dir = args.dir or load_config(args.config).fonts
    for f in FontRegistry.from_dir(font_dir).fonts:
        print(f"{f.font_id}\t{f.family}\t{len(f.coverage)}")
    return EXIT_OK


def cmd_pool_stats(args: argparse.Namespace) -> int:
    from .scene import build_pool

    if args.config:
        cfg = load_config(args.config)
        simple, wild, exclude = cfg.simple_backgrounds, cfg.wild_backgrounds, cfg.exclusion_list
    else:
        simple, wild, exclude = args.simple, args.wild, args.exclude
    pool = build_pool(simple, wild, exclude)
    for k, v in pool.stats().items():
        print(f"{k}: {v}")
    for p in pool.excluded_paths:
        print(f"  excluded {p.name}")
    return EXIT_OK


def cmd_lexicon_dump(args: argparse.Namespace) -> int:
    from .lexicon import dump_lexicon, load_lexicon

    lex = load_lexicon(args.paths)
    stats = f"words: {len(lex.words)}\ncharacters: {len(lex.charset)}\n"
    if args.output:
        dump_lexicon(lex, args.output)
        sys.stdout.write(stats)
    else:
        sys.stdout.write("".join(w + "\n" for w in lex.words))
        sys.stderr.write(stats)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tcsynth", description="Synthetic Traditional Chinese scene-text data engine.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render a dataset from a config file")
    g.add_argument("config")
    g.add_argument("--workers", type=_non_negative, default=1, help="0 = one per CPU core")
    g.add_argument("--dry-run", action="store_true", help="print the mix plan and counts only")
    g.add_argument("--output", help="override output.dir")
    g.set_defaults(func=cmd_generate)

    pv = sub.add_parser("preview", help="render the first samples into a contact sheet")
    pv.add_argument("config")
    pv.add_argument("--count", type=_positive, default=12)
    pv.add_argument("--columns", type=_positive, default=4)
    pv.add_argument("--out", default="preview.png")
    pv.set_defaults(func=cmd_preview)

    v = sub.add_parser("validate-config", help="parse and check a config file")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("split", help="character-balanced train/test split of a manifest")
    s.add_argument("manifest")
    s.add_argument("--test-fraction", type=float, default=0.5)
    s.add_argument("--tolerance", type=float, default=0.02)
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_split)

    a = sub.add_parser("augment", help="expand a manifest with distort/stretch/perspective variants")
    a.add_argument("manifest")
    a.add_argument("--out", default="augmented")
    a.add_argument("--scales", type=_non_negative, default=7)
    a.add_argument("--distort", type=_non_negative, default=24)
    a.add_argument("--stretch", type=_non_negative, default=24)
    a.add_argument("--perspective", type=_non_negative, default=6)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--workers", type=_non_negative, default=1)
    a.add_argument("--dry-run", action="store_true")
    a.set_defaults(func=cmd_augment)

    e = sub.add_parser("eval", help="word accuracy of predictions against references")
    e.add_argument("predictions")
    e.add_argument("references")
    e.add_argument("--show", type=_non_negative, default=20, help="mismatches to print")
    e.set_defaults(func=cmd_eval)

    fonts = sub.add_parser("fonts", help="font registry tools").add_subparsers(dest="fonts_command", required=True)
    fl = fonts.add_parser("list", help="list fonts with glyph coverage")
    src = fl.add_mutually_exclusive_group(required=True)
    src.add_argument("dir", nargs="?")
    src.add_argument("--config")
    fl.set_defaults(func=cmd_fonts_list)

    pool = sub.add_parser("pool", help="background pool tools").add_subparsers(dest="pool_command", required=True)
    ps = pool.add_parser("stats", help="count backgrounds and exclusions")
    ps.add_argument("--config")
    ps.add_argument("--simple")
    ps.add_argument("--wild")
    ps.add_argument("--exclude")
    ps.set_defaults(func=cmd_pool_stats)

    lex = sub.add_parser("lexicon", help="word list tools").add_subparsers(dest="lexicon_command", required=True)
    ld = lex.add_parser("dump", help="write the deduplicated word list and print stats")
    ld.add_argument("paths", nargs="+")
    ld.add_argument("-o", "--output")
    ld.set_defaults(func=cmd_lexicon_dump)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceError, OSError) as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (TcsynthError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
