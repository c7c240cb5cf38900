"""Word-level multimodal attention fusion: Python access to the C++ library."""

import json

from ._core import WordfuseError, dtw, metrics, metrics_from_confusion, mfsc, run_cli
from ._core import Model as _Model

__all__ = ["Model", "WordfuseError", "cli", "dtw", "load_model", "metrics", "metrics_from_confusion", "mfsc", "model_config",
           "run_cli"]

Model = _Model


def load_model(path):
    return _Model.load(str(path))


def model_config(model):
    return json.loads(model.config)


def cli(*args, check=True):
    """Run a `wordfuse` subcommand in-process and return its stdout."""
    code, out, err = run_cli([str(a) for a in args])
    if check and code != 0:
        raise WordfuseError(f"wordfuse {args[0] if args else ''} exited {code}: {err.strip()}")
    return out
