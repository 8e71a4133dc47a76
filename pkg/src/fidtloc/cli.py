"""Command-line front end: ``fidtloc <subcommand> ...``.

Directory inputs are processed file by file with a thread pool; per-file
outputs are written independently and reports are merged in sorted file
order, so results do not depend on ``--jobs``.
"""
import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as fio
from .boxes import BoxParams, generate_boxes
from .distance import distance_transform
from .evaluation import (
    SCENE_LABELS,
    SigmaPolicy,
    counting_errors,
    match_points,
    precision_recall_f1,
    scene_level_report,
)
from .fidt import FidtParams, fidt_map, fidt_profile, idt_map, is_idt
from .lmds import LmdsParams, detect
from .losses import SsimParams, finite_difference_gradient, max_relative_error, total_loss
from .types import PointSet

JOBS_ENV = "FIDTLOC_JOBS"
MAP_SUFFIX = ".fidt"
GRAD_CHECK_LIMIT = 1e-3


class CliError(Exception):
    pass


def default_jobs():
    env = os.environ.get(JOBS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def _num(v):
    return fio.format_number(v)


def _collect(path, suffix):
    """Input files for ``path``: the file itself or the sorted ``*suffix`` files of a directory."""
    p = Path(path)
    if p.is_dir():
        return sorted(p.glob(f"*{suffix}")), True
    if not p.exists():
        raise CliError(f"{p}: no such file or directory")
    return [p], False


def _output_path(out, src, suffix, many):
    out = Path(out)
    if many or out.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        return out / (src.stem + suffix)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _run(jobs, fn, items):
    """Apply ``fn`` to ``items`` in parallel; returns ``(item, result, error)`` in input order."""
    def safe(item):
        try:
            return item, fn(item), None
        except (ValueError, OSError, CliError) as exc:
            return item, None, exc

    if jobs <= 1 or len(items) <= 1:
        return [safe(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(safe, items))


def _report_errors(results):
    failed = [(item, err) for item, _, err in results if err is not None]
    for item, err in failed:
        print(f"error: {item}: {err}", file=sys.stderr)
    return 1 if failed else 0


def cmd_gen_gt(args):
    params = FidtParams(args.alpha, args.beta, args.c)
    files, many = _collect(args.ann, ".json")

    def work(src):
        ann = fio.read_annotations(src, strict=not args.lenient)
        dist = distance_transform(ann)
        if args.mode == "dt":
            values, kind = dist, fio.MapKind.DISTANCE
        elif args.mode == "idt" or is_idt(params):
            values, kind = idt_map(dist, params.c), fio.MapKind.IDT
        else:
            values, kind = fidt_map(dist, params), fio.MapKind.FIDT
        dst = _output_path(args.out, src, MAP_SUFFIX, many)
        fio.write_map(values, kind, dst)
        return dst

    return _report_errors(_run(args.jobs, work, files))


def cmd_detect(args):
    params = LmdsParams(args.threshold_ratio, args.negative_cutoff, dedup_plateaus=args.dedup_plateaus)
    files, many = _collect(args.map, MAP_SUFFIX)

    def work(src):
        values, _ = fio.read_map(src)
        res = detect(values.astype(np.float64), params)
        fio.write_points_csv(res.coordinates, _output_path(args.out, src, ".csv", many))
        return f"{src.stem},{res.count},{'true' if res.is_negative else 'false'}"

    results = _run(args.jobs, work, files)
    lines = [r for _, r, err in results if err is None]
    for line in lines:
        print(line)
    if args.summary:
        Path(args.summary).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return _report_errors(results)


def cmd_boxes(args):
    pts = fio.read_points_csv(args.points)
    ps = PointSet(args.img_w, args.img_h, pts)
    # a negative sample has no heads and therefore no boxes
    boxes = generate_boxes(ps, BoxParams(args.k, args.f)) if len(ps) else []
    if args.out:
        fio.write_boxes_csv(boxes, args.out)
    else:
        fio.write_boxes_csv(boxes, sys.stdout)
    return 0


def _fmt_loss(v):
    return format(v, ".10g")


def cmd_loss(args):
    pred, _ = fio.read_map(args.pred)
    gt, _ = fio.read_map(args.gt)
    ann = fio.read_annotations(args.ann, strict=not args.lenient)
    pred = pred.astype(np.float64)
    gt = gt.astype(np.float64)
    rep = total_loss(pred, gt, ann, SsimParams(), want_gradient=args.grad_check)
    issim = "skipped(N=0)" if rep.issim is None else _fmt_loss(rep.issim)
    print(f"mse={_fmt_loss(rep.mse)} issim={issim} total={_fmt_loss(rep.total)}")
    if not args.grad_check:
        return 0
    h, w = pred.shape
    pixels = [(r, c) for r in range(h) for c in range(w)]
    if len(pixels) > args.grad_pixels:
        rng = np.random.default_rng(0)
        idx = np.sort(rng.choice(len(pixels), size=args.grad_pixels, replace=False))
        pixels = [pixels[i] for i in idx]
    fd = finite_difference_gradient(pred, gt, ann, SsimParams(), step=args.step, pixels=pixels)
    err = max_relative_error(rep.gradient, fd)
    print(f"grad_check max_rel_err={err:.3e} pixels={len(pixels)}")
    return 0 if err <= GRAD_CHECK_LIMIT else 1


def _pair_by_stem(pred_path, gt_path, pred_suffix):
    preds, pmany = _collect(pred_path, pred_suffix)
    gts, gmany = _collect(gt_path, ".json")
    if not pmany and not gmany:
        return [(preds[0], gts[0])], []
    if pmany != gmany:
        raise CliError("--pred and --gt must both be files or both be directories")
    pmap = {p.stem: p for p in preds}
    gmap = {g.stem: g for g in gts}
    errors = [f"{s}: prediction without ground truth" for s in sorted(set(pmap) - set(gmap))]
    errors += [f"{s}: ground truth without prediction" for s in sorted(set(gmap) - set(pmap))]
    return [(pmap[s], gmap[s]) for s in sorted(set(pmap) & set(gmap))], errors


def cmd_eval_loc(args):
    pairs, errors = _pair_by_stem(args.pred, args.gt, ".csv")
    if args.sweep:
        lo, _, hi = args.sweep.partition(":")
        sigmas = list(range(int(lo), int(hi) + 1))
        if not sigmas:
            raise CliError(f"empty sweep range {args.sweep}")
        policies = [SigmaPolicy(fixed_sigma=s) for s in sigmas]
    elif args.sigma_mode:
        policies = [SigmaPolicy(mode=args.sigma_mode.replace("-", "_"))]
    else:
        policies = [SigmaPolicy(fixed_sigma=args.sigma)]

    def work(pair):
        pred_file, gt_file = pair
        pred = fio.read_points_csv(pred_file)
        gt = fio.read_annotations(gt_file, strict=not args.lenient)
        reps = [match_points(pred, gt, pol, args.matching) for pol in policies]
        return [(r.true_positives, r.false_positives, r.false_negatives) for r in reps]

    results = _run(args.jobs, work, pairs)
    ok = [(pair, tallies) for pair, tallies, err in results if err is None]
    totals = np.zeros((len(policies), 3), dtype=np.int64)
    for _, tallies in ok:
        totals += np.array(tallies, dtype=np.int64)

    if args.sweep:
        print("sigma,tp,fp,fn,precision,recall,f1")
        ps, rs = [], []
        for pol, (tp, fp, fn) in zip(policies, totals):
            p, r, f = precision_recall_f1(tp, fp, fn)
            ps.append(p)
            rs.append(r)
            print(f"{_num(pol.fixed_sigma)},{tp},{fp},{fn},{p:.6f},{r:.6f},{f:.6f}")
        p, r = float(np.mean(ps)), float(np.mean(rs))
        f = 2 * p * r / (p + r) if p + r else 0.0
        print(f"av_precision={p:.6f} av_recall={r:.6f} f_measure={f:.6f}")
    else:
        print("image_id,tp,fp,fn,precision,recall,f1")
        for (pred_file, _), tallies in ok:
            tp, fp, fn = tallies[0]
            p, r, f = precision_recall_f1(tp, fp, fn)
            print(f"{pred_file.stem},{tp},{fp},{fn},{p:.6f},{r:.6f},{f:.6f}")
        tp, fp, fn = totals[0]
        p, r, f = precision_recall_f1(tp, fp, fn)
        print(f"tp={tp} fp={fp} fn={fn} precision={p:.6f} recall={r:.6f} f1={f:.6f}")

    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    return max(_report_errors(results), 1 if errors else 0)


def _read_count_table(path):
    """``image_id -> count`` from ``image_id,count[,...]`` lines."""
    counts = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) < 2:
            raise fio.CsvFormatError("expected image_id,count", path, line=lineno)
        try:
            counts[fields[0]] = int(fields[1])
        except ValueError:
            raise fio.CsvFormatError(f"bad count {fields[1]!r}", path, line=lineno) from None
    return counts


def cmd_eval_count(args):
    pred = Path(args.pred)
    if pred.is_dir():
        preds = {p.stem: len(fio.read_points_csv(p)) for p in sorted(pred.glob("*.csv"))}
    else:
        preds = _read_count_table(pred)
    gts, _ = _collect(args.gt, ".json")
    results = _run(args.jobs, lambda g: fio.read_annotations(g, strict=not args.lenient), gts)
    truth = {}
    for g, ann, err in results:
        if err is None:
            truth[g.stem] = len(ann)
    rc = _report_errors(results)
    ids = sorted(set(preds) & set(truth))
    for s in sorted(set(preds) ^ set(truth)):
        print(f"error: {s}: {'no ground truth' if s in preds else 'no prediction'}", file=sys.stderr)
        rc = 1
    if not ids:
        raise CliError("no images to evaluate")
    mae, mse = counting_errors([preds[i] for i in ids], [truth[i] for i in ids])
    print(f"images={len(ids)} mae={mae:.6f} mse={mse:.6f}")
    if args.scene_report:
        table = scene_level_report([(preds[i], truth[i]) for i in ids])
        cells = ["-" if table[k] is None else f"{table[k]:.6f}" for k in SCENE_LABELS]
        print("avg," + ",".join(SCENE_LABELS))
        print(f"{table['avg']:.6f}," + ",".join(cells))
    return rc


def cmd_profile(args):
    rows = fidt_profile(FidtParams(args.alpha, args.beta, args.c), args.max_d, args.step)
    text = "distance,idt,fidt\n" + "".join(f"{_num(d)},{_num(i)},{_num(f)}\n" for d, f, i in rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fidtloc", description=__doc__.splitlines()[0])
    parser.add_argument("--jobs", type=int, default=None,
                        help=f"worker threads (default: ${JOBS_ENV} or the core count)")
    sub = parser.add_subparsers(dest="command", required=True)

    def fidt_flags(p):
        p.add_argument("--alpha", type=float, default=0.02)
        p.add_argument("--beta", type=float, default=0.75)
        p.add_argument("--c", type=float, default=1.0)

    p = sub.add_parser("gen-gt", help="ground-truth maps from annotation JSON")
    p.add_argument("--ann", required=True, help="annotation file or directory of *.json")
    p.add_argument("--out", required=True, help="map file or directory")
    p.add_argument("--mode", choices=("dt", "idt", "fidt"), default="fidt")
    fidt_flags(p)
    p.add_argument("--lenient", action="store_true", help="ignore unknown annotation keys")
    p.set_defaults(func=cmd_gen_gt)

    p = sub.add_parser("detect", help="local maxima detection on map files")
    p.add_argument("--map", required=True, help=f"map file or directory of *{MAP_SUFFIX}")
    p.add_argument("--out", required=True, help="point CSV file or directory")
    p.add_argument("--threshold-ratio", type=float, default=100 / 255.0)
    p.add_argument("--negative-cutoff", type=float, default=0.10)
    p.add_argument("--dedup-plateaus", action="store_true")
    p.add_argument("--summary", help="also write the image_id,count,is_negative lines here")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("boxes", help="pseudo boxes from a point CSV")
    p.add_argument("--points", required=True)
    p.add_argument("--img-w", type=int, required=True)
    p.add_argument("--img-h", type=int, required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--f", type=float, default=0.1)
    p.add_argument("--out", help="box CSV (default: stdout)")
    p.set_defaults(func=cmd_boxes)

    p = sub.add_parser("loss", help="MSE + I-SSIM between two maps")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--ann", required=True)
    p.add_argument("--grad-check", action="store_true")
    p.add_argument("--grad-pixels", type=int, default=4096, help="max pixels sampled by --grad-check")
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("eval-loc", help="localization precision / recall / F1")
    p.add_argument("--pred", required=True, help="point CSV or directory of *.csv")
    p.add_argument("--gt", required=True, help="annotation JSON or directory")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sigma", type=float)
    g.add_argument("--sigma-mode", choices=("box-small", "box-large"))
    g.add_argument("--sweep", metavar="A:B")
    p.add_argument("--matching", choices=("optimal", "greedy"), default="optimal")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_eval_loc)

    p = sub.add_parser("eval-count", help="counting MAE / MSE")
    p.add_argument("--pred", required=True, help="image_id,count CSV or directory of point CSVs")
    p.add_argument("--gt", required=True, help="annotation JSON or directory")
    p.add_argument("--scene-report", action="store_true")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_eval_count)

    p = sub.add_parser("profile", help="IDT / FIDT response along a distance axis")
    fidt_flags(p)
    p.add_argument("--max-d", type=float, default=100.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs is None:
        args.jobs = default_jobs()
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
