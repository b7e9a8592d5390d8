"""INI-style run configuration.

Sections: ``[optics]`` (required), ``[supervision]`` (needed to optimize),
``[optimizer]`` and ``[output]``. Relative asset paths are resolved against the
directory of the config file, so a parsed config always carries absolute
paths.
"""

import configparser
from dataclasses import asdict, dataclass, fields
import io
import os

from .._validation import DataError
from ..optics import OpticalConfig
from ..optimizer import OptimizerConfig

__all__ = ["SupervisionConfig", "RunConfig", "parse_config", "load_config", "dump_config"]

OPTICS_KEYS = {f.name for f in fields(OpticalConfig)}
OPT_KEYS = {f.name for f in fields(OptimizerConfig)}


@dataclass(frozen=True)
class SupervisionConfig:
    mode: str
    source: str = "rgbd"
    image: str = None
    depth: str = None
    lightfield: str = None
    depth_min: float = 0.0
    depth_max: float = None
    planes: int = 9
    views: tuple = (9, 9)
    window: int = 16
    hop: int = 16
    pupil_diameter: float = 4.4e-3

    def __post_init__(self):
        if self.mode not in ("2.5d", "3d", "4d"):
            raise DataError(f"supervision mode must be 2.5d, 3d or 4d, got {self.mode!r}")
        if self.source not in ("rgbd", "lightfield"):
            raise DataError(f"supervision source must be rgbd or lightfield, got {self.source!r}")
        if self.mode == "2.5d" and self.source != "rgbd":
            raise DataError("2.5d supervision needs an rgbd source")
        if self.mode == "4d" and self.source != "lightfield":
            raise DataError("4d supervision needs a lightfield source")
        if self.source == "rgbd":
            for key in ("image", "depth"):
                path = getattr(self, key)
                if not path:
                    raise DataError(f"[supervision] {key} is required for an rgbd source")
                if not os.path.isfile(path):
                    raise DataError(f"[supervision] {key} file not found: {path}")
        else:
            if not self.lightfield:
                raise DataError("[supervision] lightfield is required for a lightfield source")
            if not os.path.isdir(self.lightfield):
                raise DataError(f"[supervision] lightfield directory not found: {self.lightfield}")


@dataclass(frozen=True)
class RunConfig:
    optics: OpticalConfig
    supervision: SupervisionConfig = None
    optimizer: OptimizerConfig = OptimizerConfig()
    output_dir: str = None


def _tuple(text, cast):
    return tuple(cast(t) for t in text.replace(",", " ").split())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise DataError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _section(cp, name, allowed):
    if not cp.has_section(name):
        return None
    sec = dict(cp.items(name))
    unknown = set(sec) - allowed
    if unknown:
        raise DataError(f"[{name}] unknown keys: {sorted(unknown)}")
    return sec


def _optics(sec):
    conv = {
        "wavelengths": lambda t: _tuple(t, float),
        "slm_resolution": lambda t: _tuple(t, int),
        "active_resolution": lambda t: _tuple(t, int),
        "num_frames": int,
        "sideband": _bool,
        "eyebox_wavelength": _opt_float,
    }
    kw = {k: conv.get(k, float)(v) for k, v in sec.items()}
    return OpticalConfig(**kw)


def _supervision(sec, base):
    kw = dict(sec)
    if "mode" not in kw:
        raise DataError("[supervision] mode is required")
    kw["mode"] = kw["mode"].strip().lower()
    for key in ("image", "depth", "lightfield"):
        if kw.get(key):
            kw[key] = os.path.normpath(os.path.join(base, os.path.expanduser(kw[key])))
    for key in ("depth_min", "pupil_diameter"):
        if key in kw:
            kw[key] = float(kw[key])
    if "depth_max" in kw:
        kw["depth_max"] = _opt_float(kw["depth_max"])
    for key in ("planes", "window", "hop"):
        if key in kw:
            kw[key] = int(kw[key])
    if "views" in kw:
        kw["views"] = _tuple(kw["views"], int)
    return SupervisionConfig(**kw)


def _optimizer(sec):
    conv = {"learning_rate": _opt_float, "iterations": int, "seed": int,
            "surrogate": str.strip, "precision": str.strip}
    return OptimizerConfig(**{k: conv.get(k, float)(v) for k, v in sec.items()})


def parse_config(text, base_dir="."):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise DataError(f"cannot parse config: {exc}") from None
    unknown = set(cp.sections()) - {"optics", "supervision", "optimizer", "output"}
    if unknown:
        raise DataError(f"unknown config sections: {sorted(unknown)}")
    try:
        osec = _section(cp, "optics", OPTICS_KEYS)
        if osec is None:
            raise DataError("config needs an [optics] section")
        optics = _optics(osec)
        ssec = _section(cp, "supervision", {f.name for f in fields(SupervisionConfig)})
        sup = _supervision(ssec, base_dir) if ssec is not None else None
        psec = _section(cp, "optimizer", OPT_KEYS)
        opt = _optimizer(psec) if psec is not None else OptimizerConfig()
        out = _section(cp, "output", {"directory"})
    except (ValueError, TypeError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"invalid config value: {exc}") from None
    out_dir = None
    if out and out.get("directory"):
        out_dir = os.path.normpath(os.path.join(base_dir, os.path.expanduser(out["directory"])))
    return RunConfig(optics, sup, opt, out_dir)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def _fmt(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(run):
    cp = configparser.ConfigParser(interpolation=None)
    cp["optics"] = {k: _fmt(v) for k, v in asdict(run.optics).items()}
    if run.supervision is not None:
        cp["supervision"] = {k: _fmt(v) for k, v in asdict(run.supervision).items()
                             if v is not None}
    cp["optimizer"] = {k: _fmt(v) for k, v in asdict(run.optimizer).items()}
    if run.output_dir:
        cp["output"] = {"directory": run.output_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
