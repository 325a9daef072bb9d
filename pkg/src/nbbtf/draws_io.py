"""Persisting posterior draws: compact columnar binary with a JSON header."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .model import PosteriorDraws

FORMAT_NAME = "nbbtf-draws"
FORMAT_VERSION = 1

_ARRAYS = ("theta", "r", "phi", "mu", "h", "kappa", "y_rep")


class DrawsFormatError(ValueError):
    """The draws file is missing, corrupt, or from an incompatible writer."""


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_draws(path, draws: PosteriorDraws, config: dict, y: np.ndarray, labels=None) -> None:
    """Write retained draws plus the input series and a validating header."""
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n_draws": int(draws.n_draws),
        "t": int(draws.theta.shape[1]),
        "config": config,
        "config_sha256": config_hash(config),
        "seconds": draws.seconds,
        "accept_rate": draws.accept_rate,
    }
    arrays = {name: getattr(draws, name) for name in _ARRAYS}
    arrays["y"] = np.asarray(y, dtype=np.int64)
    arrays["labels"] = np.asarray(
        labels if labels is not None else np.arange(1, len(arrays["y"]) + 1)
    ).astype(str)
    np.savez_compressed(Path(path), header=json.dumps(header), **arrays)


def load_draws(path) -> tuple[PosteriorDraws, dict, np.ndarray, np.ndarray]:
    """Read a draws file back; raises DrawsFormatError on anything unreadable."""
    path = Path(path)
    if not path.exists():
        raise DrawsFormatError(f"draws file not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != FORMAT_NAME:
                raise DrawsFormatError(f"not a {FORMAT_NAME} file: {path}")
            if header.get("version") != FORMAT_VERSION:
                raise DrawsFormatError(f"unsupported draws format version in {path}")
            arrays = {name: data[name] for name in _ARRAYS}
            y = data["y"]
            labels = data["labels"]
    except DrawsFormatError:
        raise
    except Exception as exc:
        raise DrawsFormatError(f"cannot read draws file {path}: {exc}") from exc
    draws = PosteriorDraws(
        seconds=float(header.get("seconds", float("nan"))),
        accept_rate=float(header.get("accept_rate", float("nan"))),
        **arrays,
    )
    return draws, header, y, labels
