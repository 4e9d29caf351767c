"""Configuration, manifests, and result persistence for the experiment CLI.

Every run is reproducible from its manifest: the manifest captures the
subcommand, the full configuration with one master seed, the package
version, and content digests of everything written.  The mc results file
has a fixed schema (sample_index, e_n, i_n, s_n, identity_residual,
root_residual_max, wall_time_s) chosen so the statistical acceptance
checks are computable from that file alone.  Digests come in two flavors:
the raw file hash, and a content hash that excludes the wall_time_s
column, which is a physical measurement and the one intentionally
non-reproducible field.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .stats import SampleRecord, SummaryStats

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "parse_config",
    "ExperimentManifest",
    "write_records_csv",
    "read_records_csv",
    "write_json",
    "emit_plotdata",
    "sha256_file",
    "RESULT_COLUMNS",
]

RESULT_COLUMNS = (
    "sample_index",
    "e_n",
    "i_n",
    "s_n",
    "identity_residual",
    "root_residual_max",
    "wall_time_s",
)

FMT = "%.17g"  # lossless double round-trip


class ConfigError(ValueError):
    pass


def _positive_int(lo):
    def check(v, name):
        if not isinstance(v, int) or isinstance(v, bool) or v < lo:
            raise ConfigError(f"{name} must be an integer >= {lo}, got {v!r}")
        return v

    return check


def _positive_float(name_hint="positive"):
    def check(v, name):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
            raise ConfigError(f"{name} must be a {name_hint} number, got {v!r}")
        return float(v)

    return check


def _boolean(v, name):
    if not isinstance(v, bool):
        raise ConfigError(f"{name} must be a boolean, got {v!r}")
    return v


def _string(v, name):
    if not isinstance(v, str):
        raise ConfigError(f"{name} must be a string, got {v!r}")
    return v


COMMON_FIELDS = {
    "seed": (12345, _positive_int(0)),
    "out": ("out", _string),
    "threads": (1, _positive_int(1)),
    "quick": (False, _boolean),
}

SUBCOMMAND_FIELDS = {
    "sample": {"n": (200, _positive_int(1))},
    "mc": {
        "n": (200, _positive_int(2)),
        "samples": (2000, _positive_int(2)),
        "invariance_every": (0, _positive_int(0)),
    },
    "constants": {"tol": (1e-12, _positive_float())},
    "kacrice": {
        "n": (100, _positive_int(2)),
        "grid_points": (12, _positive_int(4)),
        "mc_samples": (200_000, _positive_int(1000)),
    },
    "minimize": {
        "n": (200, _positive_int(2)),
        "max_iter": (2000, _positive_int(1)),
    },
    "verify": {},
}

ENV_OVERRIDES = {"KOSTLAN_OUT": "out", "KOSTLAN_THREADS": "threads"}


def parse_config(subcommand: str, config_path=None, flag_overrides=None):
    """Merge defaults, config file, environment, and CLI flags.

    Precedence (low to high): defaults < file < environment < flags.
    Unknown keys in the file are rejected by name; every value passes its
    range check.  Returns (config dict, provenance dict) so callers can
    echo where each value came from.
    """
    if subcommand not in SUBCOMMAND_FIELDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    fields = dict(COMMON_FIELDS)
    fields.update(SUBCOMMAND_FIELDS[subcommand])

    config = {}
    provenance = {}
    for name, (default, check) in fields.items():
        config[name] = check(default, name) if not isinstance(default, str) else default
        provenance[name] = "default"

    if config_path is not None:
        with open(config_path, "rb") as fh:
            payload = tomllib.load(fh)
        section = payload.pop(subcommand, {})
        for other in list(payload.keys()):
            if other in SUBCOMMAND_FIELDS and isinstance(payload[other], dict):
                payload.pop(other)  # sections for other subcommands are fine
        flat = {**payload, **section}
        unknown = sorted(set(flat) - set(fields))
        if unknown:
            raise ConfigError(
                f"unknown config key(s) for {subcommand!r}: {', '.join(unknown)}"
            )
        for name, value in flat.items():
            config[name] = fields[name][1](value, name)
            provenance[name] = f"file:{config_path}"

    for env, name in ENV_OVERRIDES.items():
        if env in os.environ and name in fields:
            raw = os.environ[env]
            value = int(raw) if name == "threads" else raw
            config[name] = fields[name][1](value, name)
            provenance[name] = f"env:{env}"

    for name, value in (flag_overrides or {}).items():
        if value is None:
            continue
        if name not in fields:
            raise ConfigError(f"flag --{name} does not apply to {subcommand!r}")
        config[name] = fields[name][1](value, name)
        provenance[name] = "flag"

    return config, provenance


def echo_config(config, provenance) -> str:
    width = max(len(k) for k in config)
    return "\n".join(
        f"  {k:<{width}} = {config[k]!r:<24} ({provenance[k]})" for k in sorted(config)
    )


# ---------------------------------------------------------------------------
# manifests and digests


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ExperimentManifest:
    subcommand: str
    config: dict
    master_seed: int
    code_version: str
    started_at: str = ""
    finished_at: str = ""
    outputs: dict = field(default_factory=dict)

    @classmethod
    def start(cls, subcommand, config) -> "ExperimentManifest":
        from . import __version__

        return cls(
            subcommand=subcommand,
            config=dict(config),
            master_seed=config["seed"],
            code_version=__version__,
            started_at=datetime.now(timezone.utc).isoformat(),
        )

    def add_output(self, path, content_sha256=None):
        entry = {"sha256": sha256_file(path)}
        if content_sha256 is not None:
            entry["content_sha256"] = content_sha256
        self.outputs[Path(path).name] = entry

    def finish(self, out_dir) -> Path:
        self.finished_at = datetime.now(timezone.utc).isoformat()
        path = Path(out_dir) / "manifest.json"
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


# ---------------------------------------------------------------------------
# record persistence


def write_records_csv(records: list[SampleRecord], path) -> str:
    """Write the fixed mc schema; returns the deterministic content digest
    (all columns except wall_time_s)."""
    content = hashlib.sha256()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        content.update(",".join(RESULT_COLUMNS[:-1]).encode())
        for r in records:
            row = [
                str(r.sample_index),
                FMT % r.e_n,
                FMT % r.i_n,
                FMT % r.s_n,
                FMT % r.identity_residual,
                FMT % r.root_residual_max,
                FMT % r.wall_time_s,
            ]
            writer.writerow(row)
            content.update(("\n" + ",".join(row[:-1])).encode())
    return content.hexdigest()


def read_records_csv(path) -> list[SampleRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"unexpected results header {header}")
        for row in reader:
            e_n = float(row[1])
            records.append(
                SampleRecord(
                    sample_index=int(row[0]),
                    e_n=e_n,
                    i_n=float(row[2]),
                    s_n=float(row[3]),
                    identity_residual=float(row[4]),
                    root_residual_max=float(row[5]),
                    wall_time_s=float(row[6]),
                    failed=not math.isfinite(e_n),
                    failure_reason="" if math.isfinite(e_n) else "failed (from csv)",
                )
            )
    return records


def write_json(payload: dict, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


def summary_payload(summary: SummaryStats) -> dict:
    return {
        "mean": summary.mean,
        "k2": summary.k2,
        "k3": summary.k3,
        "k4": summary.k4,
        "k_se": list(summary.k_se),
        "ks_statistic": summary.ks_statistic,
        "p_value": summary.p_value,
        "ks_statistic_analytic": summary.ks_statistic_analytic,
        "p_value_analytic": summary.p_value_analytic,
        "tail_counts": summary.tail_counts,
        "samples_used": summary.m,
        "failures": summary.failures,
    }


# ---------------------------------------------------------------------------
# plot data


def emit_plotdata(values, n: int, out_dir, variance: float | None = None) -> list[Path]:
    """CSV series any plotting tool can consume: histogram bins of the
    standardized energies and normal QQ pairs."""
    from scipy import stats as sps

    from .stats import standardize

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x = np.sort(standardize(values, n, variance=variance))
    m = x.size

    counts, edges = np.histogram(x, bins=max(10, int(np.sqrt(m))))
    hist_path = out_dir / "energy_hist.csv"
    with open(hist_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            w.writerow([FMT % lo, FMT % hi, str(int(c))])

    qq_path = out_dir / "energy_qq.csv"
    theo = sps.norm.ppf((np.arange(1, m + 1) - 0.5) / m)
    with open(qq_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theoretical", "empirical"])
        for t, e in zip(theo, x):
            w.writerow([FMT % t, FMT % e])
    return [hist_path, qq_path]
