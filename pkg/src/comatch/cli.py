"""Command-line entry point: ``comatch {match,eval-pose,eval-homography,synth,gradcheck,selftest}``.

Exit codes: 0 success, 1 a check failed, 2 usage or I/O error.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import evaluate, io, synth
from . import geometry as geo
from .config import FEATURE_MODES, load_config
from .errors import DegenerateGeometryError, ShapeError, TensorFormatError
from .matcher import covisibility_history, match_pipeline
from .model import build_model, load_model
from .selftest import GRAD_TOL, run_gradcheck, run_selftest
from .tensor import bilinear_resize

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or inputs; reported with exit code 2."""


# -- helpers ----------------------------------------------------------------------------------


def _config(args):
    flags = {
        "seed": args.seed,
        "feature_mode": args.feature_mode,
        "output": args.output,
        "theta_c": args.theta_c,
        "tau": args.tau,
        "L": args.L,
        "s": args.s,
        "d": args.d,
        "heads": args.heads,
        "ransac_iters": args.ransac_iters,
        "ransac_thresh_px": args.ransac_thresh_px,
    }
    return load_config(args.config, flags)


def _model(cfg, weights=None):
    return load_model(weights) if weights else build_model(cfg)


def _scene_dir(path):
    p = Path(path)
    if not p.is_dir():
        raise FileNotFoundError(2, "scene directory not found", str(p))
    return synth.load_scene(p)


def _run(cfg, scene=None, images=None, model=None):
    """Match one pair under ``cfg.feature_mode``."""
    if scene is not None:
        images = (scene.image_A, scene.image_B)
    if cfg.feature_mode == "oracle":
        if scene is None:
            raise UsageError("oracle feature mode needs a scene directory (--scene)")
        oracle = synth.oracle_features(scene, d=cfg.d, seed=cfg.seed)
        return match_pipeline(*images, theta_c=cfg.theta_c, oracle=oracle)
    return match_pipeline(*images, model=model, theta_c=cfg.theta_c)


def covis_visualizations(image, maps):
    """Upsample each per-token score map to the image size and multiply it into the image."""
    H, W = image.shape
    out = []
    for m in maps:
        up = bilinear_resize(np.asarray(m, np.float32)[..., None], H, W)[..., 0]
        out.append(np.clip(up, 0.0, 1.0) * image)
    return out


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(v):
    return f"{v:.6f}" if np.isfinite(v) else "inf"


# -- commands ---------------------------------------------------------------------------------


def cmd_match(args, cfg):
    if args.scene:
        scene = _scene_dir(args.scene)
        images = (scene.image_A, scene.image_B)
    elif args.images and len(args.images) == 2:
        scene = None
        images = tuple(io.read_pgm(p) for p in args.images)
    else:
        raise UsageError("match: give --scene DIR or two PGM images")
    model = _model(cfg, args.weights)
    res = _run(cfg, scene, images, model)

    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    f = res.fine
    io.write_matches_csv(out / "matches.csv", f.xA, f.xB, f.score)

    # learned maps in either mode: oracle features carry no covisibility of their own
    history = res.covis_history or covisibility_history(*images, model)
    for ell, (cA, cB) in enumerate(history, start=2):
        vA, vB = covis_visualizations(images[0], [cA.scores]), covis_visualizations(images[1], [cB.scores])
        io.write_pgm(out / f"covis_layer{ell}_A.pgm", vA[0])
        io.write_pgm(out / f"covis_layer{ell}_B.pgm", vB[0])

    stats = {
        "feature_mode": cfg.feature_mode,
        "seed": cfg.seed,
        "image_shape": list(images[0].shape),
        "grid_A": list(res.grid_A),
        "grid_B": list(res.grid_B),
        "n_coarse": len(res.coarse),
        "n_fine": len(f),
        "n_border": int(f.border.sum()),
        "n_fallback": int(f.fallback.sum()),
        "covis_layers": list(range(2, 2 + len(history))),
    }
    if scene is not None:
        e1 = evaluate.epipolar_or_transfer_error(scene, f.xA_pix.astype(np.float64), f.xB_pix.astype(np.float64))
        e2 = evaluate.epipolar_or_transfer_error(scene, f.xA, f.xB)
        stats["mean_epipolar_error_stage1"] = float(e1.mean()) if len(e1) else None
        stats["mean_epipolar_error"] = float(e2.mean()) if len(e2) else None
    io.write_json(out / "stats.json", stats)
    io.write_json(out / "timing.json", {"timing": res.timing})
    print(f"{len(f)} matches -> {out}")
    return EXIT_OK


def _scene_list(paths):
    if not paths:
        raise UsageError("no scene directories given")
    return [(str(p), _scene_dir(p)) for p in paths]


def cmd_eval_pose(args, cfg):
    scenes = _scene_list(args.scenes)
    model = _model(cfg, args.weights) if cfg.feature_mode != "oracle" else None
    rows, errors = [], []
    for name, scene in scenes:
        res = _run(cfg, scene, model=model)
        o = evaluate.pose_for_result(scene, res, cfg.ransac_iters, cfg.ransac_thresh_px, cfg.seed)
        if not o.ok:
            print(f"warning: {name}: {o.reason}; scored {evaluate.WORST_POSE_ERROR:g} deg", file=sys.stderr)
        errors.append(o.error)
        rows.append([name, _fmt(o.err_R), _fmt(o.err_t), _fmt(o.error), o.n_matches, o.n_inliers, int(o.ok)])
    auc = geo.pose_auc(np.array(errors), (5, 10, 20))
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "pose_errors.csv", ["scene", "err_R", "err_t", "error", "n_matches", "n_inliers", "ok"], rows)
    summary = {"auc5": auc[0], "auc10": auc[1], "auc20": auc[2], "n": len(errors)}
    io.write_json(out / "auc.json", summary)
    print(" ".join(f"{k}={v:.4f}" for k, v in summary.items() if k != "n") + f" n={len(errors)}")
    return EXIT_OK


def cmd_eval_homography(args, cfg):
    scenes = _scene_list(args.scenes)
    model = _model(cfg, args.weights) if cfg.feature_mode != "oracle" else None
    rows, errors = [], []
    for name, scene in scenes:
        if scene.homography is None:
            print(f"warning: {name}: not a planar scene, skipped", file=sys.stderr)
            continue
        res = _run(cfg, scene, model=model)
        err = evaluate.homography_for_result(scene, res, cfg.ransac_iters, cfg.homography_thresh_px, cfg.seed)
        errors.append(err)
        rows.append([name, _fmt(err), len(res.fine)])
    if not errors:
        raise UsageError("no planar scenes to evaluate")
    auc = geo.error_auc(np.array(errors), (3, 5, 10))
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "corner_errors.csv", ["scene", "corner_error", "n_matches"], rows)
    summary = {"auc3": auc[0], "auc5": auc[1], "auc10": auc[2], "n": len(errors)}
    io.write_json(out / "auc.json", summary)
    print(" ".join(f"{k}={v:.4f}" for k, v in summary.items() if k != "n") + f" n={len(errors)}")
    return EXIT_OK


def cmd_synth(args, cfg):
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    out = Path(cfg.output)
    kw = {}
    if args.height is not None:
        kw["H"] = args.height
    if args.width is not None:
        kw["W"] = args.width
    if args.texture is not None:
        kw["texture"] = args.texture
    for k in range(args.count):
        scene = synth.make_scene(args.kind, cfg.seed + k, **kw)
        synth.save_scene(scene, out / f"{args.kind}_{cfg.seed + k:04d}")
    print(f"wrote {args.count} {args.kind} scene(s) under {out}")
    return EXIT_OK


def cmd_gradcheck(args, cfg):
    results = run_gradcheck(cfg.seed, args.n)
    for name, err, ok in results:
        print(f"{name:<20s} max rel err {err:.3e}  {'PASS' if ok else 'FAIL'} (tol {GRAD_TOL:g})")
    return EXIT_OK if all(ok for _, _, ok in results) else EXIT_CHECK


def cmd_selftest(args, cfg):
    results = run_selftest(cfg.seed)
    for name, ok, detail, secs in results:
        print(f"{name:<16s} {'PASS' if ok else 'FAIL'}  {detail}  ({secs:.2f}s)")
    return EXIT_OK if all(r[1] for r in results) else EXIT_CHECK


# -- parser -----------------------------------------------------------------------------------


def _common(p):
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="JSON config file; flags override it")
    g.add_argument("--seed", type=int, help="model / RNG seed (also COMATCH_SEED)")
    g.add_argument("--feature-mode", choices=FEATURE_MODES)
    g.add_argument("-o", "--output", help="output directory")
    g.add_argument("--theta-c", type=float, help="coarse match threshold")
    g.add_argument("--tau", type=float, help="correlation temperature")
    g.add_argument("--L", type=int, help="number of transformer blocks")
    g.add_argument("--s", type=int, help="token condensing kernel")
    g.add_argument("--d", type=int, help="coarse feature width")
    g.add_argument("--heads", type=int)
    g.add_argument("--ransac-iters", type=int)
    g.add_argument("--ransac-thresh-px", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="comatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="match one image pair")
    p.add_argument("images", nargs="*", help="imageA.pgm imageB.pgm")
    p.add_argument("--scene", help="scene directory written by `comatch synth`")
    p.add_argument("--weights", help="weight bundle directory (default: seeded random init)")
    p.set_defaults(func=cmd_match)

    for name, fn, hlp in (
        ("eval-pose", cmd_eval_pose, "relative pose AUC over scene directories"),
        ("eval-homography", cmd_eval_homography, "homography corner-error AUC over planar scenes"),
    ):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("scenes", nargs="*")
        p.add_argument("--weights")
        p.set_defaults(func=fn)

    p = sub.add_parser("synth", help="render synthetic scene directories")
    p.add_argument("--kind", default="planar", choices=sorted(synth.SCENE_KINDS))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--texture", choices=["value-noise", "checker"])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--n", type=int, default=100, help="instances per suite")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selftest", help="reduced-size oracle suites")
    p.set_defaults(func=cmd_selftest)

    for action in sub.choices.values():
        _common(action)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except FileNotFoundError as exc:
        where = exc.filename or str(exc)
        print(f"comatch: error: {where}: no such file or directory", file=sys.stderr)
    except (UsageError, ShapeError, TensorFormatError, DegenerateGeometryError, ValueError) as exc:
        print(f"comatch: error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"comatch: error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
