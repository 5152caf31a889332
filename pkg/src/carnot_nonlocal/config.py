"""INI experiment configuration.

Schema (every key optional unless noted)::

    [run]
    experiments = grad_convergence, reconstruction   ; required
    seed = 0
    out = results

    [group]
    id = heisenberg        ; euclidean | heisenberg | file
    n = 2                  ; euclidean only
    path = my_group.json   ; file only, relative to the config file

    [norm]
    id = koranyi           ; euclidean | lq | koranyi | gauge
    q = 4                  ; lq
    scales = 1, 2          ; lq
    coeffs = 1, 1, 1       ; gauge

    [mollifier]
    family = ball          ; ball | fractional
    R = 1.0                ; fractional

    [field]
    id = bump              ; bump | poly_cutoff | ball_indicator | smooth_ball
    radius = 1.0
    center = 0, 0, 0
    a = 1, 0.5             ; poly_cutoff
    r = 1.0                ; ball_indicator / smooth_ball
    width = 0.125          ; smooth_ball

    [nonlocal]
    p = 2
    eps = 0.25, 0.125      ; explicit grid, or:
    eps0 = 0.25            ; default: support radius of the field / 4
    levels = 6

    [quad]
    n_radial = 8
    sphere_resolution = 32
    x_resolution = 40
    mc_samples = 1000000

A section ``[<experiment name>]`` overrides ``[nonlocal]``/``[quad]`` keys
for that experiment only and carries its own options.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import fields as F
from . import groups as grp
from . import norms as nrm
from .mollifiers import MollifierFamily, ball_family, default_eps_grid, fractional_family

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "build_group",
           "build_norm", "build_field", "build_family"]


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from exc


def build_group(sec, base_dir: Path = Path(".")) -> grp.GroupSpec:
    gid = sec.get("id", "heisenberg").strip().lower()
    if gid in ("euclidean", "rn"):
        return grp.euclidean(sec.getint("n", 2))
    if gid in ("heisenberg", "h1"):
        return grp.heisenberg()
    if gid == "file":
        path = sec.get("path")
        if not path:
            raise ConfigError("[group] id = file needs a path")
        p = Path(path)
        return grp.load_group(p if p.is_absolute() else base_dir / p)
    raise ConfigError(f"unknown group id {gid!r}")


def build_norm(sec, G: grp.GroupSpec) -> nrm.NormSpec:
    nid = sec.get("id", "koranyi" if G.layer_dims == (2, 1) else "euclidean").strip().lower()
    try:
        if nid == "euclidean":
            return nrm.euclidean_norm(G)
        if nid == "lq":
            scales = _floats(sec["scales"]) if "scales" in sec else None
            return nrm.lq_norm(G, sec.getfloat("q", 2.0), scales)
        if nid == "koranyi":
            return nrm.koranyi(G)
        if nid == "gauge":
            coeffs = _floats(sec["coeffs"]) if "coeffs" in sec else None
            return nrm.gauge_norm(G, coeffs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown norm id {nid!r}")


def build_field(sec, G: grp.GroupSpec, N: nrm.NormSpec) -> F.ScalarField:
    fid = sec.get("id", "bump").strip().lower()
    center = _floats(sec["center"]) if "center" in sec else None
    if center is not None and len(center) != G.n:
        raise ConfigError(f"[field] center needs {G.n} coordinates")
    try:
        if fid == "bump":
            return F.bump(G, center, sec.getfloat("radius", 1.0), sec.getfloat("amplitude", 1.0))
        if fid == "poly_cutoff":
            a = _floats(sec.get("a", ",".join(["1"] * G.m1)))
            return F.poly_cutoff(G, a, sec.getfloat("radius", 1.0), center)
        if fid == "ball_indicator":
            return F.ball_indicator(G, N, center, sec.getfloat("r", 1.0))
        if fid == "smooth_ball":
            return F.smooth_ball(G, N, center, sec.getfloat("r", 1.0), sec.getfloat("width", 0.125))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown field id {fid!r}")


def build_family(sec, G, N, p: float) -> MollifierFamily:
    fam = sec.get("family", "ball").strip().lower()
    if fam == "ball":
        return ball_family(G, N)
    if fam == "fractional":
        return fractional_family(G, N, p, sec.getfloat("R", 1.0))
    raise ConfigError(f"unknown mollifier family {fam!r}")


def field_radius(f: F.ScalarField) -> float:
    """Support radius used for the default eps grid."""
    params = f.params or {}
    for key in ("radius", "r"):
        if key in params:
            return float(params[key])
    box = np.asarray(f.support_box)
    return float(0.5 * (box[:, 1] - box[:, 0]).max())


@dataclass
class ExperimentConfig:
    experiments: list[str]
    seed: int
    out: Optional[str]
    parser: configparser.ConfigParser = field(repr=False)
    base_dir: Path = Path(".")
    path: Optional[str] = None

    def section(self, name: str, experiment: Optional[str] = None) -> dict:
        """Keys of ``[name]`` overlaid with ``[experiment]`` overrides."""
        out = dict(self.parser[name]) if self.parser.has_section(name) else {}
        if experiment and self.parser.has_section(experiment):
            out.update(self.parser[experiment])
        return out

    def options(self, experiment: str) -> configparser.SectionProxy:
        """A proxy with typed getters that resolves experiment > nonlocal > quad keys."""
        merged = {}
        for name in ("quad", "nonlocal", experiment):
            if self.parser.has_section(name):
                merged.update(self.parser[name])
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_dict({"opts": merged})
        return cp["opts"]

    def sub(self, name: str, experiment: str) -> configparser.SectionProxy:
        """Section ``[name]`` with ``[experiment.name]`` keys overlaid (e.g. ``[ludwig.field]``)."""
        merged = self.section(name)
        key = f"{experiment}.{name}"
        if self.parser.has_section(key):
            merged.update(self.parser[key])
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_dict({"s": merged})
        return cp["s"]

    def group(self, experiment: str = "") -> grp.GroupSpec:
        return build_group(self.sub("group", experiment), self.base_dir)

    def norm(self, G, experiment: str = "") -> nrm.NormSpec:
        return build_norm(self.sub("norm", experiment), G)

    def field(self, G, N, experiment: str = "") -> F.ScalarField:
        return build_field(self.sub("field", experiment), G, N)

    def family(self, G, N, p, experiment: str = "") -> MollifierFamily:
        return build_family(self.sub("mollifier", experiment), G, N, p)

    def eps_grid(self, experiment: str, f: Optional[F.ScalarField] = None,
                 default_eps0: Optional[float] = None) -> np.ndarray:
        opts = self.options(experiment)
        if "eps" in opts:
            eps = np.array(_floats(opts["eps"]))
        else:
            if "eps0" in opts:
                eps0 = opts.getfloat("eps0")
            elif default_eps0 is not None:
                eps0 = default_eps0
            elif f is not None:
                eps0 = field_radius(f) / 4
            else:
                eps0 = 0.25
            eps = default_eps_grid(eps0, opts.getint("levels", 6))
        if len(eps) == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
            raise ConfigError("the eps grid must be positive and strictly decreasing")
        return eps


def parse_config(text: str, base_dir: Path = Path("."), path: Optional[str] = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if not cp.has_section("run") or "experiments" not in cp["run"]:
        raise ConfigError("[run] experiments = ... is required")
    exps = [e.strip() for e in cp["run"]["experiments"].split(",") if e.strip()]
    from .experiments import EXPERIMENTS

    unknown = [e for e in exps if e not in EXPERIMENTS]
    if unknown:
        raise ConfigError(f"unknown experiments: {', '.join(unknown)}")
    try:
        seed = cp["run"].getint("seed", 0)
    except ValueError as exc:
        raise ConfigError("seed must be an integer") from exc
    cfg = ExperimentConfig(exps, seed, cp["run"].get("out"), cp, base_dir, path)
    # resolve the shared ids early so that typos fail before any work is done
    G = cfg.group()
    N = cfg.norm(G)
    cfg.field(G, N)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), p.parent, str(p))
