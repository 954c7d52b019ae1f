"""Run configuration, CSV/JSON emission and run bookkeeping.

A run is fully determined by its configuration document, the seed and the
subcommand.  Floats are written with Python's shortest round-trip ``repr``
and line endings are always ``\\n``, so identical inputs give identical
bytes.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .core import (
    BE9_MASS,
    ELEMENTARY_CHARGE,
    DriveParams,
    MotionalState,
    NoiseModel,
    ScanResult,
    TrapParams,
    hz_to_rad,
    radial_confinement,
)
from .errors import ConfigError, DomainError
from .spin_squeezing import DecoherenceRates

PRESETS = ("fig2b", "fig3c", "fig4cde", "fig5", "fig6abc")

DEFAULTS = {
    "trap": {
        "omega_z_hz": 1.59e6,
        "omega_c_hz": 7.6e6,
        "omega_r_hz": 180e3,
        "n_ions": 1,
        "mass_kg": BE9_MASS,
        "charge_c": ELEMENTARY_CHARGE,
    },
    "drive": {
        "f_rad_s": 0.0,
        "phi_odf_rad": 0.0,
        "delta_hz": 0.0,
        "gamma_per_s": 0.0,
        "tau_s": 1e-3,
        "t_pi_s": 50e-6,
        "g_hz": 0.0,
        "theta_rad": 0.0,
        "delta_phi_rad": 0.0,
        "delta_phi_c_rad": math.pi / 2,
    },
    "motion": {"nbar": 0.0, "beta_re": 0.0, "beta_im": 0.0, "r": 0.0},
    "noise": {"sigma_hz": 0.0, "n_samples": 4000, "seed": 0},
    "scan": {
        "t_s": 0.0,
        "phase_points": 64,
        "delta_start_hz": 500.0,
        "delta_stop_hz": 4500.0,
        "delta_points": 401,
        "tau_start_s": 1e-5,
        "tau_stop_s": 1e-2,
        "tau_points": 601,
        "k": 1,
        "nbar_err": 0.2,
        "fit_amplitude": False,
        "zero_intercept": True,
    },
    "sensing": {"sql_var": 0.25, "instantaneous_squeeze": False},
    "spin": {
        "delta_ref_hz": 830.0,
        "elastic_fraction": 0.5,
        "asymmetry": 0.0,
        "coupling": "hamiltonian",
        "averaging": "xi2",
        "single_loop": True,
    },
}


def _schema():
    text = resources.files("squeezeion").joinpath("schema/run_config.schema.json").read_text()
    return json.loads(text)


SCHEMA = _schema()


def jsonable(x):
    """Plain-Python copy of ``x`` with NaN/inf mapped to None."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": jsonable(x.real), "im": jsonable(x.imag)}
    return x


def canonical_bytes(obj) -> bytes:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default filled in."""

    data: dict
    provenance: dict = field(default_factory=dict)
    source: str = ""

    def __getitem__(self, section):
        return self.data[section]

    @property
    def seed(self) -> int:
        return int(self.data["noise"]["seed"])

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_bytes(self.data)).hexdigest()

    def trap(self) -> TrapParams:
        t = self.data["trap"]
        return TrapParams(
            omega_z=t["omega_z_hz"],
            Omega_c=t["omega_c_hz"],
            omega_r=t["omega_r_hz"],
            N=int(t["n_ions"]),
            M=t["mass_kg"],
            q=t["charge_c"],
        )

    def drive(self) -> DriveParams:
        d = self.data["drive"]
        return DriveParams(
            f=d["f_rad_s"],
            phi_odf=d["phi_odf_rad"],
            delta=hz_to_rad(d["delta_hz"]),
            Gamma=d["gamma_per_s"],
            tau=d["tau_s"],
            t_pi=d["t_pi_s"],
            g=hz_to_rad(d["g_hz"]),
            theta=d["theta_rad"],
        )

    def motion(self) -> MotionalState:
        m = self.data["motion"]
        return MotionalState(nbar=m["nbar"], beta=complex(m["beta_re"], m["beta_im"]), r=m["r"])

    def noise(self) -> NoiseModel:
        n = self.data["noise"]
        return NoiseModel(sigma=n["sigma_hz"], n_samples=int(n["n_samples"]), seed=int(n["seed"]))

    def jbar(self) -> float:
        """Mean Ising strength f^2 / (2 delta_ref) the spin decay rate is quoted against."""
        return self.data["drive"]["f_rad_s"] ** 2 / (2 * hz_to_rad(self.data["spin"]["delta_ref_hz"]))

    def rates(self) -> DecoherenceRates:
        s = self.data["spin"]
        if "gamma_over_jbar" in s:
            Gamma = s["gamma_over_jbar"] * self.jbar()
        else:
            Gamma = self.data["drive"]["gamma_per_s"]
        return DecoherenceRates.from_total(Gamma, s["elastic_fraction"], s["asymmetry"])


def _merge(user: dict) -> dict:
    out = copy.deepcopy(DEFAULTS)
    for section, values in user.items():
        out.setdefault(section, {}).update(values)
    return out


def _check_invariants(cfg: RunConfig):
    """Build every domain object once so its own checks run at load time."""
    radial_confinement(cfg.trap())
    drive = cfg.drive()
    cfg.motion()
    cfg.noise()
    cfg.rates()
    s = cfg["scan"]
    if s["delta_start_hz"] >= s["delta_stop_hz"]:
        raise DomainError("scan.delta_start_hz must be below scan.delta_stop_hz")
    if s["tau_start_s"] >= s["tau_stop_s"]:
        raise DomainError("scan.tau_start_s must be below scan.tau_stop_s")
    r_pulse = drive.g * s["t_s"]
    r = cfg["motion"]["r"]
    if r_pulse > 0 and r > 0 and not math.isclose(r_pulse, r, rel_tol=1e-9):
        raise DomainError(f"inconsistent squeezing: g*t_s = {r_pulse:.6g} but motion.r = {r:.6g}")


def validate(doc: dict, source: str = "") -> RunConfig:
    """Schema-check ``doc``, fill defaults and re-check the model invariants."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        where = ".".join(map(str, err.absolute_path)) or "<root>"
        raise ConfigError(f"{where}: {err.message}")
    doc = copy.deepcopy(doc)
    provenance = doc.pop("_provenance", {})
    cfg = RunConfig(_merge(doc), provenance, source)
    _check_invariants(cfg)
    return cfg


def preset_path(name: str):
    stem = name[:-5] if name.endswith(".json") else name
    return resources.files("squeezeion").joinpath(f"presets/{stem}.json")


def read_config_text(target: str) -> tuple[str, str]:
    """Text of a config given as a file path or a shipped preset name."""
    path = Path(target)
    if path.is_file():
        return path.read_text(encoding="utf-8"), str(path)
    preset = preset_path(target)
    if preset.is_file():
        return preset.read_text(encoding="utf-8"), f"preset:{Path(str(preset)).stem}"
    raise ConfigError(f"no config file or preset named {target!r}")


def load_config(target: str | None = None, seed: int | None = None, samples: int | None = None) -> RunConfig:
    """Load, override and validate a configuration.

    ``target`` is a path or one of :data:`PRESETS`; ``None`` gives the
    defaults.  ``seed`` and ``samples`` override the noise section before
    validation, so they enter the config hash.
    """
    if target is None:
        doc, source = {}, "<defaults>"
    else:
        text, source = read_config_text(target)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{source}: not valid JSON ({err})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: configuration must be a JSON object")
    if seed is not None or samples is not None:
        doc = copy.deepcopy(doc)
        noise = doc.setdefault("noise", {})
        if seed is not None:
            noise["seed"] = seed
        if samples is not None:
            noise["n_samples"] = samples
    return validate(doc, source)


# ---------------------------------------------------------------------------
# Data input
# ---------------------------------------------------------------------------


def read_table(path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Numeric CSV with a header row; ``required`` columns must be present."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as err:
        raise ConfigError(f"cannot read data file {path}: {err.strerror}") from None
    rows = [r for r in rows if r and not r[0].startswith("#")]
    if not rows:
        raise ConfigError(f"{path}: empty data file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in header]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}")
    try:
        body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    except ValueError as err:
        raise ConfigError(f"{path}: non-numeric entry ({err})") from None
    return {h: body[:, i] for i, h in enumerate(header)}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(result: ScanResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(result.columns)
    w.writerow(names)
    cols = [result.columns[n] for n in names]
    for i in range(len(result)):
        w.writerow([format_cell(c[i]) for c in cols])
    return buf.getvalue()


def json_text(result: ScanResult) -> str:
    doc = {"columns": {k: jsonable(v) for k, v in result.columns.items()}, "metadata": jsonable(result.metadata)}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(text: str, path):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def emit_csv(result: ScanResult, path=None):
    """Header plus one row per entry; ``path=None`` writes to stdout."""
    _write(csv_text(result), path)


def emit_json(result: ScanResult, path=None):
    _write(json_text(result), path)


def timestamp() -> str:
    """UTC time from ``SOURCE_DATE_EPOCH`` (0 when unset) so reruns are byte-identical."""
    raw = os.environ.get("SOURCE_DATE_EPOCH", "0")
    try:
        epoch = int(raw)
    except ValueError:
        raise ConfigError(f"SOURCE_DATE_EPOCH must be an integer, got {raw!r}") from None
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def run_metadata(cfg: RunConfig, subcommand: str, extra: dict | None = None) -> dict:
    meta = {
        "config_hash": cfg.config_hash(),
        "config_source": cfg.source,
        "seed": cfg.seed,
        "subcommand": subcommand,
        "timestamp": timestamp(),
        "version": __version__,
    }
    if extra:
        meta["result"] = jsonable(extra)
    return meta


def sidecar_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".meta.json")


def write_sidecar(out, meta: dict):
    text = json.dumps(jsonable(meta), indent=2, sort_keys=True, allow_nan=False) + "\n"
    _write(text, sidecar_path(out))
