"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""

import argparse
import csv
import datetime
import json
import math
import os
import platform
import sys

from ._validation import DataError

OUTPUT_ENV = "HOLOCGH_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError()


def _packaged_config():
    from importlib.resources import files

    return str(files("holocgh") / "data" / "prototype.cfg")


def _load(path):
    from .io.config import load_config

    return load_config(path or _packaged_config())


def _output_dir(args, run=None):
    out = (getattr(args, "output", None) or os.environ.get(OUTPUT_ENV)
           or (run.output_dir if run is not None else None) or "holocgh-out")
    os.makedirs(out, exist_ok=True)
    return out


def _versions():
    import numpy
    import scipy

    from . import __version__

    return {"holocgh": __version__, "python": platform.python_version(),
            "numpy": numpy.__version__, "scipy": scipy.__version__}


def _manifest(out, args, argv, run=None, seed=None, extra=None):
    from .io.config import dump_config

    data = {
        "command": args.command if not getattr(args, "sub", None) else f"{args.command} {args.sub}",
        "argv": list(argv),
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": seed,
        "versions": _versions(),
        "config": dump_config(run) if run is not None else None,
    }
    if extra:
        data.update(extra)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(data, fh, indent=2)


def _seeded(run, args):
    if getattr(args, "seed", None) is None:
        return run
    from dataclasses import replace

    return replace(run, optimizer=replace(run.optimizer, seed=args.seed))


# -- optimize ----------------------------------------------------------------

def _build_spec(run):
    import numpy as np

    from .io.assets import load_lightfield, load_rgbd
    from .losses import focal_stack_spec, light_field_spec, multiplane_spec
    from .optics import plane_depths
    from .targets import closest_distance_masks, focal_stack_from_lf, focal_stack_from_rgbd

    cfg, sup = run.optics, run.supervision
    planes = np.array([p.diopters for p in plane_depths(cfg, sup.planes)])
    if sup.source == "rgbd":
        dmax = cfg.d_ncp if sup.depth_max is None else sup.depth_max
        tgt = load_rgbd(sup.image, sup.depth, (sup.depth_min, dmax))
        if tgt.amplitude.shape[1:] != cfg.shape:
            raise DataError(f"target {tgt.amplitude.shape[1:]} does not match SLM {cfg.shape}")
        if tgt.amplitude.shape[0] != cfg.n_channels:
            raise DataError(f"image has {tgt.amplitude.shape[0]} channels, config has "
                            f"{cfg.n_channels} wavelengths")
        if sup.mode == "2.5d":
            return multiplane_spec(tgt.amplitude, closest_distance_masks(tgt.depth, planes), cfg)
        return focal_stack_spec(focal_stack_from_rgbd(tgt, planes, sup.pupil_diameter, cfg), cfg)
    lf = load_lightfield(sup.lightfield, cfg, sup.window, sup.hop)
    if sup.mode == "3d":
        return focal_stack_spec(focal_stack_from_lf(lf, planes, cfg), cfg)
    return light_field_spec(lf, cfg, sup.window, sup.hop)


def cmd_optimize(args, argv):
    import numpy as np

    from .io.hologram import write_hologram
    from .io.images import write_pfm
    from .losses import SupervisionLoss
    from .optimizer import optimize

    run = _seeded(_load(args.config), args)
    if args.iterations is not None:
        from dataclasses import replace

        run = replace(run, optimizer=replace(run.optimizer, iterations=args.iterations))
    if run.supervision is None:
        raise DataError("config has no [supervision] section")
    spec = _build_spec(run)
    out = _output_dir(args, run)
    res = optimize(run.optics, spec, run.optimizer)
    write_hologram(os.path.join(out, "hologram.hbin"), res.frames)
    with open(os.path.join(out, "loss.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "loss"] + [f"s{c}" for c in range(res.scale_trace.shape[1])])
        for k, (l, s) in enumerate(zip(res.loss_trace, res.scale_trace)):
            w.writerow([k, repr(float(l))] + [repr(float(x)) for x in s])
    amp = SupervisionLoss(spec, run.optics).amplitude(res.frames.astype(float))
    scale = np.asarray(res.final_scale).reshape((-1,) + (1,) * (amp.ndim - 1))
    amp = amp * scale
    if spec.mode == "4d":
        for v in range(amp.shape[1]):
            for u in range(amp.shape[2]):
                img = amp[:, v, u]
                write_pfm(os.path.join(out, f"view_{v:02d}_{u:02d}.pfm"),
                          img[0] if img.shape[0] == 1 else img)
    else:
        for k in range(amp.shape[1]):
            img = amp[:, k]
            write_pfm(os.path.join(out, f"recon_plane{k:02d}.pfm"),
                      img[0] if img.shape[0] == 1 else img)
    _manifest(out, args, argv, run, run.optimizer.seed,
              {"final_loss": res.final_loss, "initial_loss": float(res.loss_trace[0])})
    print(f"initial loss {res.loss_trace[0]:.6g}, final loss {res.final_loss:.6g}")
    print(f"wrote {out}")
    return 0


# -- reconstruct / lf-extract --------------------------------------------------

def _read_pupils(path):
    from .viewer import PupilState

    states = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                vals = [float(x) for x in row[:4]]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise DataError(f"{path}:{lineno}: non-numeric pupil row") from None
            if len(vals) != 4:
                raise DataError(f"{path}:{lineno}: expected x, y, diameter, focal_diopters")
            apod = row[4].strip() if len(row) > 4 and row[4].strip() else "diffraction"
            states.append(PupilState((vals[0], vals[1]), vals[2], apod, focal_diopters=vals[3]))
    if not states:
        raise DataError(f"{path}: no pupil rows")
    return states


def _hologram_frames(path, cfg):
    from .io.hologram import read_hologram

    q = read_hologram(path)
    if q.shape[0] != cfg.n_channels or q.shape[-2:] != cfg.shape:
        raise DataError(f"hologram {q.shape} does not match config "
                        f"(C={cfg.n_channels}, H, W={cfg.shape})")
    return q.astype(float)


def cmd_reconstruct(args, argv):
    from .io.images import write_pfm, write_png
    from .viewer import PupilState, retinal_image

    run = _load(args.config)
    cfg = run.optics
    q = _hologram_frames(args.hologram, cfg)
    states = _read_pupils(args.pupil_csv) if args.pupil_csv else [PupilState((0.0, 0.0), 3.0)]
    out = _output_dir(args, run)
    with open(os.path.join(out, "index.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x", "y", "diameter", "focal_diopters", "apodization",
                    "vignetted", "file"])
        for i, st in enumerate(states):
            img = retinal_image(q, cfg, st)
            name = f"retina_{i:03d}"
            inten = img.intensity[0] if img.intensity.shape[0] == 1 else img.intensity
            write_pfm(os.path.join(out, name + ".pfm"), inten)
            write_png(os.path.join(out, name + ".png"), inten)
            w.writerow([i, st.center[0], st.center[1], st.diameter, img.focal_diopters,
                        st.apodization, int(img.vignetted), name + ".pfm"])
    _manifest(out, args, argv, run, getattr(args, "seed", None))
    print(f"wrote {len(states)} retinal image(s) to {out}")
    return 0


def cmd_lf_extract(args, argv):
    import numpy as np

    from .io.images import write_pfm
    from .propagation import AsmPropagator, FieldStack
    from .stft import stft_light_field

    run = _load(args.config)
    cfg = run.optics
    q = _hologram_frames(args.hologram, cfg)
    out = _output_dir(args, run)
    rows = []
    for c, lam in enumerate(cfg.wavelengths):
        prop = AsmPropagator(cfg.shape, cfg.pixel_pitch, lam, [cfg.wrp_distance], cfg.sideband)
        u = prop.forward(q[c])[:, 0]
        lf, energy = stft_light_field(FieldStack(u, cfg.pixel_pitch, lam), tuple(args.views),
                                      args.window, args.hop, cfg.sideband)
        for v in range(lf.views.shape[1]):
            for uu in range(lf.views.shape[2]):
                write_pfm(os.path.join(out, f"ch{c}_view_{v:02d}_{uu:02d}.pfm"),
                          lf.views[0, v, uu])
                rows.append([c, v, uu, lf.angles_y[v], lf.angles_x[uu], energy[v, uu]])
    total = np.array([r[-1] for r in rows])
    with open(os.path.join(out, "energies.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["channel", "row", "col", "angle_y", "angle_x", "energy", "normalized"])
        for r, e in zip(rows, total / max(total.max(), 1e-300)):
            w.writerow(r + [e])
    _manifest(out, args, argv, run, getattr(args, "seed", None))
    print(f"wrote {len(rows)} views to {out}")
    return 0


# -- analyze -------------------------------------------------------------------

def cmd_geometry(args, argv):
    from .optics import display_geometry

    run = _load(args.config)
    cfg = run.optics
    g = display_geometry(cfg)
    print(f"eyebox {g.eyebox_size[0] * 1e3:.2f} x {g.eyebox_size[1] * 1e3:.2f} mm "
          f"(reference wavelength {cfg.eyebox_wavelength * 1e9:.0f} nm)")
    print(f"FoV {g.fov[0]:.1f} x {g.fov[1]:.1f} deg")
    print(f"max resolution {g.max_cpd:.1f} cpd")
    print(f"depth range 0 to {g.d_ncp:.2f} D")
    for lam, th, eb in zip(cfg.wavelengths, g.theta_diff, g.eyeboxes):
        print(f"  {lam * 1e9:.0f} nm: diffraction angle {math.degrees(th):.3f} deg, "
              f"eyebox {eb[0] * 1e3:.3f} x {eb[1] * 1e3:.3f} mm")
    _manifest(_output_dir(args, run), args, argv, run, getattr(args, "seed", None))
    return 0


def cmd_sampling(args, argv):
    from .sampling import bandwidth_from_cpd, max_depth_range, required_views, sampling_table

    run = _load(args.config)
    cfg = run.optics
    f = args.focal_length or cfg.eyepiece_focal_length
    lam = args.wavelength
    req = required_views(args.depth_range, f, lam, cpd=args.cpd, pixel_pitch=cfg.pixel_pitch)
    print(f"{req.views} horizontal views (raw {req.raw:.3f}) for {args.cpd:g} cpd over "
          f"{args.depth_range:g} D at f={f * 1e3:g} mm, {lam * 1e9:g} nm")
    dmax = max_depth_range(req.views, bandwidth_from_cpd(args.cpd, f), f, lam)
    print(f"{req.views} views support up to {dmax:.3f} D")
    if args.table:
        rows = sampling_table(args.table_cpds, [x * 1e-3 for x in args.table_focal_mm],
                              [0.5 * i for i in range(0, 21)], lam, cfg.pixel_pitch)
        with open(args.table, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["focal_length_mm", "cpd", "depth_range_D", "views", "raw"])
            for f_, c, d, n, raw in rows:
                w.writerow([f_ * 1e3, c, d, n, raw])
        print(f"wrote {args.table}")
    _manifest(_output_dir(args, run), args, argv, run, getattr(args, "seed", None))
    return 0


def cmd_parallax(args, argv):
    from .io.assets import read_image
    from .parallax import ParallaxModel, mar, parallax_detection_rate, parallax_threshold

    run = _load(args.config)
    model = ParallaxModel.for_display(run.optics)
    if args.eccentricity is not None:
        e = args.eccentricity
        print(f"MAR {float(mar(e, model)):.4f} deg, parallax threshold "
              f"{float(parallax_threshold(e, model)):.4f} D at {e:g} deg")
    if args.frames1 or args.frames2:
        if len(args.frames1 or []) != len(args.frames2 or []):
            raise UsageError("--frames1 and --frames2 need the same number of files")
        f1 = [read_image(p) for p in args.frames1]
        f2 = [read_image(p) for p in args.frames2]
        rate = parallax_detection_rate(f1, f2, model)
        print(f"parallax detection rate {rate:.4f}")
    elif args.eccentricity is None:
        raise UsageError("give --eccentricity and/or --frames1/--frames2")
    _manifest(_output_dir(args, run), args, argv, run, getattr(args, "seed", None))
    return 0


def cmd_luminance(args, argv):
    from .metrics import LuminanceInput, luminance
    from .optics import display_geometry

    run = _load(args.config)
    cfg = run.optics
    g = display_geometry(cfg)
    wl = args.wavelengths or list(cfg.wavelengths)
    if len(wl) != len(args.powers):
        raise UsageError("need one power per wavelength")
    area = args.area or g.eyebox_size[0] * g.eyebox_size[1]
    hx, hy = (math.radians(a) / 2 for a in g.fov)
    omega = args.solid_angle or 4 * math.asin(math.sin(hx) * math.sin(hy))
    nits = luminance(LuminanceInput(args.powers, wl, area, omega))
    print(f"luminance {nits:.4g} cd/m^2 (S={area:.4g} m^2, Omega={omega:.4g} sr)")
    _manifest(_output_dir(args, run), args, argv, run, getattr(args, "seed", None))
    return 0


# -- jod -----------------------------------------------------------------------

def _write_matrix(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_jod(args, argv):
    import numpy as np

    from .jod import bootstrap_ci, jod_ztest, read_votes_csv, scale_jod, screen_outliers

    options, observers, votes = read_votes_csv(args.votes)
    out = _output_dir(args)
    if args.exclude_outliers:
        flagged = screen_outliers(votes)
        if flagged:
            print("excluded outliers: " + ", ".join(observers[i] for i in flagged))
            votes = np.delete(votes, flagged, axis=0)
    res = scale_jod(votes)
    seed = None
    if args.sub == "scale":
        _write_matrix(os.path.join(out, "scores.csv"), ["option", "jod"],
                      [[o, repr(float(s))] for o, s in zip(options, res.scores)])
        _write_matrix(os.path.join(out, "covariance.csv"), [""] + options,
                      [[o] + [repr(float(x)) for x in row] for o, row in zip(options, res.covariance)])
        for o, s in zip(options, res.scores):
            print(f"{o}\t{s:+.3f}")
    elif args.sub == "test":
        a, b = args.pair
        for name in (a, b):
            if name not in options:
                raise DataError(f"unknown option {name!r}; known: {options}")
        z, p = jod_ztest(res, options.index(a), options.index(b))
        print(f"z = {z:.4f}, p = {p:.4g} (two-tailed)")
    else:
        seed = args.seed if args.seed is not None else 0
        lo, hi = bootstrap_ci(votes, args.samples, seed)
        _write_matrix(os.path.join(out, "ci.csv"), ["option", "jod", "ci_low", "ci_high"],
                      [[o, repr(float(s)), repr(float(l)), repr(float(h))]
                       for o, s, l, h in zip(options, res.scores, lo, hi)])
        for o, s, l, h in zip(options, res.scores, lo, hi):
            print(f"{o}\t{s:+.3f}\t[{l:+.3f}, {h:+.3f}]")
    _manifest(out, args, argv, seed=seed)
    return 0


# -- parser --------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="holocgh", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, config=True, config_required=False):
        if config:
            sp.add_argument("--config", required=config_required,
                            help="run config (defaults to the packaged prototype config)")
        sp.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV})")
        sp.add_argument("--seed", type=int, help="override the config seed")

    sp = sub.add_parser("optimize", help="optimize binary SLM frames from a config")
    sp.add_argument("config")
    sp.add_argument("--iterations", type=int)
    common(sp, config=False)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("reconstruct", help="simulate retinal images for pupil states")
    sp.add_argument("hologram")
    sp.add_argument("--pupil-csv", help="rows of x, y, diameter, focal_diopters[, apodization]")
    common(sp)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("lf-extract", help="extract the STFT light field of a hologram")
    sp.add_argument("hologram")
    sp.add_argument("--views", type=int, nargs=2, default=(9, 9), metavar=("U", "V"))
    sp.add_argument("--window", type=int, default=16)
    sp.add_argument("--hop", type=int, default=16)
    common(sp)
    sp.set_defaults(func=cmd_lf_extract)

    an = sub.add_parser("analyze", help="closed-form and image analyses")
    asub = an.add_subparsers(dest="sub", parser_class=_Parser)
    sp = asub.add_parser("geometry", help="eyebox, field of view and resolution")
    common(sp)
    sp.set_defaults(func=cmd_geometry)
    sp = asub.add_parser("sampling", help="views required for a resolution and depth range")
    sp.add_argument("--cpd", type=float, required=True)
    sp.add_argument("--depth-range", type=float, required=True, help="diopters")
    sp.add_argument("--wavelength", type=float, default=532e-9)
    sp.add_argument("--focal-length", type=float, help="meters; defaults to the config")
    sp.add_argument("--table", help="also write a views table CSV here")
    sp.add_argument("--table-cpds", type=float, nargs="+", default=[10, 20, 30])
    sp.add_argument("--table-focal-mm", type=float, nargs="+", default=[25, 40, 50])
    common(sp)
    sp.set_defaults(func=cmd_sampling)
    sp = asub.add_parser("parallax", help="threshold models and parallax detection rate")
    sp.add_argument("--eccentricity", type=float, help="degrees")
    sp.add_argument("--frames1", nargs="+", help="images from pupil state 1, one per focal state")
    sp.add_argument("--frames2", nargs="+", help="images from pupil state 2")
    common(sp)
    sp.set_defaults(func=cmd_parallax)
    sp = asub.add_parser("luminance", help="luminance from per-line optical power")
    sp.add_argument("--powers", type=float, nargs="+", required=True, help="watts per line")
    sp.add_argument("--wavelengths", type=float, nargs="+")
    sp.add_argument("--area", type=float, help="m^2; defaults to the eyebox area")
    sp.add_argument("--solid-angle", type=float, help="sr; defaults to the FoV solid angle")
    common(sp)
    sp.set_defaults(func=cmd_luminance)

    jd = sub.add_parser("jod", help="pairwise-comparison scaling")
    jsub = jd.add_subparsers(dest="sub", parser_class=_Parser)
    for name, helptext in (("scale", "JOD scores and covariance"),
                           ("test", "two-tailed z-test between two options"),
                           ("bootstrap", "bootstrap confidence intervals")):
        sp = jsub.add_parser(name, help=helptext)
        sp.add_argument("votes", help="CSV of observer, option_i, option_j, chosen")
        sp.add_argument("--exclude-outliers", action="store_true")
        if name == "test":
            sp.add_argument("--pair", nargs=2, required=True, metavar=("A", "B"))
        if name == "bootstrap":
            sp.add_argument("--samples", type=int, default=500)
        common(sp, config=False)
        sp.set_defaults(func=cmd_jod)
    return p, {"analyze": an, "jod": jd}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, groups = build_parser()
    try:
        if not argv:
            parser.print_usage(sys.stderr)
            return 1
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            groups.get(args.command, parser).print_usage(sys.stderr)
            return 1
        return args.func(args, argv)
    except UsageError as exc:
        if str(exc):
            sys.stderr.write(f"holocgh: {exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    except (DataError, OSError, ValueError) as exc:
        sys.stderr.write(f"holocgh: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
