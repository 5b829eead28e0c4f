"""Session configuration: a plain key=value text file."""
from __future__ import annotations

import os

DEFAULTS = {
    "work_directory": "",
    "reference_path": "",
    "calibration_offset_db": "",
    "calibration_reference_spl_db": "",
    "salience_threshold_db": "15.0",
    "hop_samples": "220",
}


def load_config(path) -> dict[str, str]:
    cfg = dict(DEFAULTS)
    if path and os.path.exists(path):
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, val = line.partition("=")
                if sep:
                    cfg[key.strip()] = val.strip()
    return cfg


def save_config(path, cfg: dict) -> None:
    lines = ["# pitchscope session config"]
    for key in DEFAULTS:
        lines.append(f"{key}={cfg.get(key, DEFAULTS[key])}")
    for key in sorted(set(cfg) - set(DEFAULTS)):
        lines.append(f"{key}={cfg[key]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
