"""INI-style run configuration: parsing, canonical emission (so that
parse(emit(cfg)) == cfg), and run manifests with output digests.

Sections: [bundle] holds the drift-equation parameters and integration
window, [forcing] the rotational Fourier table as (m, re, im) triples,
[h1]..[hn] one inhomogeneity family per site, [scan] the parameter grid,
[rdas] the PDE run.  Every key has a default equal to the reference
experiment, so an empty [rdas] section reproduces it.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass

from .bundle import BundleParams, HFamily, PerturbationSpec
from .errors import ConfigurationError
from .fourier import FourierSeries
from .rdas import RdasConfig

TWO_PI = 2.0 * math.pi


def _parse_complex(text, where):
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError as exc:
        raise ConfigurationError(f"{where}: cannot parse complex number {text!r}") from exc


def _parse_floats(text, where):
    items = [s for s in (piece.strip() for piece in text.split(",")) if s]
    try:
        return tuple(float(s) for s in items)
    except ValueError as exc:
        raise ConfigurationError(f"{where}: cannot parse float list {text!r}") from exc


def _parse_complexes(text, where):
    items = [s for s in (piece.strip() for piece in text.split(",")) if s]
    return tuple(_parse_complex(s, where) for s in items)


def _parse_forcing_table(text, where):
    """Multiline 'm re im' triples -> {m: complex}."""
    modes = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigurationError(f"{where}: expected 'm re im' triple, got {line!r}")
        try:
            m = int(parts[0])
            modes[m] = complex(float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ConfigurationError(f"{where}: bad triple {line!r}") from exc
    return modes


def _parse_mu_rows(text, where):
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        try:
            rows.append(tuple(float(s) for s in line.split()))
        except ValueError as exc:
            raise ConfigurationError(f"{where}: bad mu row {line!r}") from exc
    return tuple(rows)


def read_ini(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        cp.read_file(fh, source=str(path))
    return cp


def parse_ini_text(text):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(text)
    return cp


# ---------------------------------------------------------------------------
# Bundle + forcing + families


@dataclass(frozen=True)
class BundleRun:
    params: BundleParams
    spec: PerturbationSpec
    p0: complex = 0j
    t0: float = 0.0
    t1: float = TWO_PI
    tol: float = 1e-10
    samples: int = 513


def _families_from(cp, n_sites):
    families = []
    for j in range(1, n_sites + 1):
        section = f"h{j}"
        if not cp.has_section(section):
            raise ConfigurationError(
                f"mu declares {n_sites} site(s) but section [{section}] is missing"
            )
        sec = cp[section]
        kind = sec.get("kind", "linear").strip()
        coeffs = _parse_complexes(sec.get("coefficients", ""), f"[{section}] coefficients")
        scale = float(sec.get("scale", "1.0"))
        power = sec.get("power", "").strip()
        families.append(
            HFamily(
                kind=kind,
                coefficients=coeffs,
                saturation_scale=scale,
                decay_power=int(power) if power else None,
            )
        )
    return tuple(families)


def _forcing_from(cp, jstar):
    if cp.has_section("forcing"):
        sec = cp["forcing"]
        modes = _parse_forcing_table(sec.get("table", ""), "[forcing] table")
        trunc = sec.get("truncation", "").strip()
        truncation = int(trunc) if trunc else None
        return FourierSeries.from_modes(modes, jstar, truncation)
    return FourierSeries.zeros(0, jstar)


def bundle_run_from(cp):
    if not cp.has_section("bundle"):
        raise ConfigurationError("config has no [bundle] section")
    sec = cp["bundle"]
    jstar = int(sec.get("jstar", "1"))
    mu = _parse_floats(sec.get("mu", ""), "[bundle] mu")
    xi = _parse_complexes(sec.get("xi", ""), "[bundle] xi")
    params = BundleParams(
        v=_parse_complex(sec.get("v", "1+0j"), "[bundle] v"),
        epsilon=float(sec.get("epsilon", "0.0")),
        mu=mu,
        xi=xi,
        jstar=jstar,
    )
    spec = PerturbationSpec(G=_forcing_from(cp, jstar), H=_families_from(cp, len(mu)))
    return BundleRun(
        params=params,
        spec=spec,
        p0=_parse_complex(sec.get("p0", "0j"), "[bundle] p0"),
        t0=float(sec.get("t0", "0.0")),
        t1=float(sec.get("t1", repr(TWO_PI))),
        tol=float(sec.get("tol", "1e-10")),
        samples=int(sec.get("samples", "513")),
    )


# ---------------------------------------------------------------------------
# Scan


@dataclass(frozen=True)
class ScanRun:
    epsilons: tuple
    mu_rows: tuple
    site: int = 0  # zero-based
    newton_tol: float = 1e-10
    eta: float = 1e-6
    integ_tol: float = 1e-12
    truncation: int = 32


def scan_run_from(cp):
    if not cp.has_section("scan"):
        raise ConfigurationError("config has no [scan] section")
    sec = cp["scan"]
    eps = _parse_floats(sec.get("epsilon", ""), "[scan] epsilon")
    mu_rows = _parse_mu_rows(sec.get("mu", ""), "[scan] mu")
    return ScanRun(
        epsilons=eps,
        mu_rows=mu_rows,
        site=int(sec.get("site", "1")) - 1,
        newton_tol=float(sec.get("newton_tol", "1e-10")),
        eta=float(sec.get("eta", "1e-6")),
        integ_tol=float(sec.get("integ_tol", "1e-12")),
        truncation=int(sec.get("truncation", "32")),
    )


# ---------------------------------------------------------------------------
# RDAS


def rdas_config_from(cp):
    """[rdas] section with every key optional; an absent section yields the
    reference experiment configuration."""
    defaults = RdasConfig()
    if not cp.has_section("rdas"):
        return defaults
    sec = cp["rdas"]

    def getf(key, fallback):
        return float(sec.get(key, repr(fallback)))

    tip_v_raw = sec.get("tip_v", "auto").strip()
    center = _parse_floats(sec.get("bump_center", ""), "[rdas] bump_center") or defaults.bump_center
    cross = _parse_floats(sec.get("init_cross", ""), "[rdas] init_cross") or defaults.init_cross
    if len(center) != 2 or len(cross) != 2:
        raise ConfigurationError("[rdas] bump_center and init_cross take two floats")
    return RdasConfig(
        L=getf("L", defaults.L),
        N=int(sec.get("N", str(defaults.N))),
        dt=getf("dt", defaults.dt),
        varsigma=getf("varsigma", defaults.varsigma),
        beta=getf("beta", defaults.beta),
        gamma=getf("gamma", defaults.gamma),
        a1=getf("a1", defaults.a1),
        c_phi=getf("c_phi", defaults.c_phi),
        bump_amplitude=getf("bump_amplitude", defaults.bump_amplitude),
        bump_decay=getf("bump_decay", defaults.bump_decay),
        bump_center=center,
        phi_mode=sec.get("phi_mode", defaults.phi_mode).strip(),
        t_end=getf("t_end", defaults.t_end),
        record_stride=int(sec.get("record_stride", str(defaults.record_stride))),
        tip_u=getf("tip_u", defaults.tip_u),
        tip_v=None if tip_v_raw == "auto" else float(tip_v_raw),
        init_cross=cross,
        init_v_excited=getf("init_v_excited", defaults.init_v_excited),
        advection_boundary=sec.get("advection_boundary", defaults.advection_boundary).strip(),
        laplacian_ghost=sec.get("laplacian_ghost", defaults.laplacian_ghost).strip(),
        snapshot_stride=int(sec.get("snapshot_stride", str(defaults.snapshot_stride))),
    )


# ---------------------------------------------------------------------------
# Canonical emission (resolved configs; parse(emit(x)) == x)


def _emit_section(name, pairs):
    lines = [f"[{name}]"]
    for key, value in pairs:
        if "\n" in value:
            lines.append(f"{key} =")
            for row in value.splitlines():
                lines.append(f"    {row}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def emit_bundle(run):
    p = run.params
    out = _emit_section(
        "bundle",
        [
            ("v", repr(p.v)),
            ("epsilon", repr(p.epsilon)),
            ("jstar", str(p.jstar)),
            ("mu", ", ".join(repr(m) for m in p.mu)),
            ("xi", ", ".join(repr(x) for x in p.xi)),
            ("p0", repr(run.p0)),
            ("t0", repr(run.t0)),
            ("t1", repr(run.t1)),
            ("tol", repr(run.tol)),
            ("samples", str(run.samples)),
        ],
    )
    g = run.spec.G
    table = "\n".join(
        f"{m} {g.coeff(m).real!r} {g.coeff(m).imag!r}" for m in range(-g.truncation, g.truncation + 1)
    )
    out += "\n" + _emit_section(
        "forcing", [("truncation", str(g.truncation)), ("table", table)]
    )
    for j, fam in enumerate(run.spec.H, start=1):
        pairs = [
            ("kind", fam.kind),
            ("coefficients", ", ".join(repr(c) for c in fam.coefficients)),
            ("scale", repr(fam.saturation_scale)),
        ]
        if fam.decay_power is not None:
            pairs.append(("power", str(fam.decay_power)))
        out += "\n" + _emit_section(f"h{j}", pairs)
    return out


def emit_scan(run):
    return _emit_section(
        "scan",
        [
            ("epsilon", ", ".join(repr(e) for e in run.epsilons)),
            ("mu", "\n".join(" ".join(repr(m) for m in row) for row in run.mu_rows)),
            ("site", str(run.site + 1)),
            ("newton_tol", repr(run.newton_tol)),
            ("eta", repr(run.eta)),
            ("integ_tol", repr(run.integ_tol)),
            ("truncation", str(run.truncation)),
        ],
    )


def emit_rdas(cfg):
    return _emit_section(
        "rdas",
        [
            ("L", repr(cfg.L)),
            ("N", str(cfg.N)),
            ("dt", repr(cfg.dt)),
            ("varsigma", repr(cfg.varsigma)),
            ("beta", repr(cfg.beta)),
            ("gamma", repr(cfg.gamma)),
            ("a1", repr(cfg.a1)),
            ("c_phi", repr(cfg.c_phi)),
            ("bump_amplitude", repr(cfg.bump_amplitude)),
            ("bump_decay", repr(cfg.bump_decay)),
            ("bump_center", ", ".join(repr(c) for c in cfg.bump_center)),
            ("phi_mode", cfg.phi_mode),
            ("t_end", repr(cfg.t_end)),
            ("record_stride", str(cfg.record_stride)),
            ("tip_u", repr(cfg.tip_u)),
            ("tip_v", "auto" if cfg.tip_v is None else repr(cfg.tip_v)),
            ("init_cross", ", ".join(repr(c) for c in cfg.init_cross)),
            ("init_v_excited", repr(cfg.init_v_excited)),
            ("advection_boundary", cfg.advection_boundary),
            ("laplacian_ghost", cfg.laplacian_ghost),
            ("snapshot_stride", str(cfg.snapshot_stride)),
        ],
    )


# ---------------------------------------------------------------------------
# Manifests


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, subcommand, resolved_config, outputs, duration_seconds, version):
    """JSON manifest: subcommand, resolved config text, artifact version,
    wall-clock duration, and sha256 digests of the emitted files."""
    manifest = {
        "subcommand": subcommand,
        "version": version,
        "duration_seconds": duration_seconds,
        "config": resolved_config,
        "outputs": {name: file_digest(p) for name, p in outputs.items()},
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
