"""Atomic file output, run manifests and the content-addressed spectrum cache."""
import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import asdict

import numpy as np

from . import __version__
from ._jit import backend
from .spectrum import CSV_COLUMNS, SpectrumTable, enumerate_modes, homogeneous_spectrum

# root-finder tolerance used by the solver; part of the cache key
ROOT_RTOL = 4 * np.finfo(float).eps


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value") and isinstance(getattr(o, "value"), str):
        return o.value
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    if isinstance(data, str):
        data = data.encode()
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def fmt_float(v):
    return repr(float(v))


class OutputDir:
    """Collects every file written in a run so the manifest can list it."""

    def __init__(self, root):
        self.root = root
        self.files = {}
        os.makedirs(root, exist_ok=True)

    def path(self, name):
        return os.path.join(self.root, name)

    def write(self, name, data):
        atomic_write(self.path(name), data)
        self.files[name] = sha256_file(self.path(name))
        return self.path(name)

    def write_json(self, name, obj):
        return self.write(name, dumps(obj))

    def write_csv(self, name, header, rows):
        return self.write(name, csv_text(header, rows))

    def register(self, name):
        self.files[name] = sha256_file(self.path(name))

    def write_manifest(self, command, cfg, timing=None, convention_constant=1.0, warnings=()):
        """Manifest for ``command``.  Everything but ``timing`` is deterministic."""
        conf = {k: v for k, v in cfg.to_dict().items() if k not in ("out", "threads")}
        man = {
            "command": command,
            "code_version": __version__,
            "config_hash": cfg.config_hash,
            "config": conf,
            "backend": backend(),
            "convention_constant": convention_constant,
            "outputs": [{"file": k, "sha256": self.files[k]} for k in sorted(self.files)],
            "warnings": list(warnings),
            "timing": timing or {},
        }
        name = f"manifest_{command}.json"
        atomic_write(self.path(name), dumps(man))
        return man


# -- spectrum cache ----------------------------------------------------------

def spectrum_key(geometry, profile, omega_max, kind="graded", eps_r=None, tm_p0=True):
    d = {
        "kind": kind,
        "geometry": asdict(geometry),
        "profile": asdict(profile),
        "omega_max": float(omega_max),
        "root_rtol": ROOT_RTOL,
        "code_version": __version__,
    }
    if kind == "homogeneous":
        d["eps_r"] = float(eps_r)
        d["tm_p0"] = bool(tm_p0)
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


class SpectrumCache:
    """Spectrum tables stored as ``<root>/cache/spectrum-<key>.json``."""

    def __init__(self, root):
        self.dir = os.path.join(root, "cache")
        self.hits = 0
        self.misses = 0

    def _file(self, key):
        return os.path.join(self.dir, f"spectrum-{key}.json")

    def _load(self, key):
        fn = self._file(key)
        if not os.path.exists(fn):
            return None
        try:
            with open(fn) as fh:
                d = json.load(fh)
            if d.get("key") != key:
                return None
            return SpectrumTable.from_json_dict(d["table"])
        except (ValueError, KeyError, TypeError):
            return None  # corrupt entry: recompute and overwrite

    def _store(self, key, table):
        atomic_write(self._file(key), dumps({"key": key, "table": table.to_json_dict()}))

    def relpath(self, key):
        return os.path.join("cache", f"spectrum-{key}.json")

    def get(self, key, compute):
        t = self._load(key)
        if t is not None:
            self.hits += 1
            return t
        self.misses += 1
        t = compute()
        self._store(key, t)
        return t

    def graded(self, geometry, profile, omega_max, threads=1):
        key = spectrum_key(geometry, profile, omega_max)
        return key, self.get(key, lambda: enumerate_modes(geometry, profile, omega_max, threads=threads))

    def homogeneous(self, geometry, profile, eps_r, omega_max, tm_p0=True):
        key = spectrum_key(geometry, profile, omega_max, "homogeneous", eps_r, tm_p0)
        return key, self.get(key, lambda: homogeneous_spectrum(geometry, eps_r, omega_max, tm_p0, profile=profile))


def spectrum_csv_rows(table, omega_scale=1.0):
    for row in table.csv_rows():
        row = list(row)
        if omega_scale != 1.0:
            row[4] = fmt_float(float(row[4]) * omega_scale)
        yield row


__all__ = ["OutputDir", "SpectrumCache", "atomic_write", "dumps", "csv_text", "spectrum_key", "sha256_file",
           "CSV_COLUMNS", "spectrum_csv_rows"]
