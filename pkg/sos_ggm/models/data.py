import json
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def data_dir():
    """Directory for cached scan datasets, created on first use"""
    path = os.environ.get("SOS_GGM_DATA_DIR") or os.path.join(os.path.dirname(os.path.dirname(__file__)), "data")
    if not os.path.exists(path):
        os.makedirs(path)
    return path


def _jsonable(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps_json(payload):
    """Stable JSON text: sorted keys, round-trip floats"""
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable, allow_nan=False)


def scan_csv(result):
    """CSV text of a scan's points with 17 significant digits"""
    return result.to_frame().to_csv(index=False, float_format=FLOAT_FORMAT)


def write_output(text, path=None, stream=None):
    """
    Write text to a file, or to stream when no path is given

    Args:
        text (str): Content to write
        path (str): Output file path
        stream: Text stream used when path is None
    """
    if path is None:
        stream.write(text)
        if not text.endswith("\n"):
            stream.write("\n")
        return
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(directory):
        os.makedirs(directory)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    logger.info("wrote %s", path)


def _scan_name(k, tau_min, tau_max, steps, solver_type):
    return f"scan_k{k}_{float(tau_min):.17g}_{float(tau_max):.17g}_{steps}_{solver_type}.json"


def load_scan(k, tau_min, tau_max, steps, solver_type="auto", workers=1):
    """
    Load a cached tau scan if it exists, otherwise run and cache it.

    Returns:
        ScanResult: Points, refined transitions and flagged values
    """
    from sos_ggm.models.phase_diagram import ScanResult, scan_tau

    path = os.path.join(data_dir(), _scan_name(k, tau_min, tau_max, steps, solver_type))
    if os.path.exists(path):
        logger.debug("using cached scan %s", path)
        with open(path, encoding="utf-8") as handle:
            return ScanResult.from_json(json.load(handle))
    result = scan_tau(k, tau_min, tau_max, steps, solver_type=solver_type, workers=workers)
    write_output(dumps_json(result.to_json()), path)
    return result
