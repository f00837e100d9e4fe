"""Filesystem utilities for safe-admittance."""

from pathlib import Path

import pandas as pd

from safe_admittance.errors import LogFormatError
from safe_admittance.models import MetricsRecord, TrajectoryLog

FLOAT_FORMAT = "%.17g"


def ensure_out_dir(path: Path) -> Path:
    """Create the output directory if needed.

    Args:
        path: Directory to create

    Returns:
        The same path, for chaining
    """
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_trajectory(log: TrajectoryLog, path: Path) -> Path:
    """Write a trajectory log as CSV with full double precision.

    Args:
        log: Trajectory to write
        path: Destination CSV file

    Returns:
        The written path
    """
    log.frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_trajectory(path: Path) -> TrajectoryLog:
    """Read a trajectory CSV written by write_trajectory.

    Args:
        path: CSV file

    Returns:
        Parsed trajectory log

    Raises:
        LogFormatError: if the file is empty, has no header or holds non-numeric data
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip", skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise LogFormatError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise LogFormatError(f"{path} is not a trajectory CSV: {exc}") from exc
    if frame.empty:
        raise LogFormatError(f"{path} has a header but no rows")
    numeric = frame.apply(pd.api.types.is_numeric_dtype)
    if not numeric.all():
        bad = numeric.index[~numeric][0]
        raise LogFormatError(f"{path} holds non-numeric values in column '{bad}'")
    return TrajectoryLog(frame.astype(float), scenario=path.stem)


def write_key_values(pairs: list[tuple[str, str]], path: Path) -> Path:
    """Write a flat key = value text block.

    Args:
        pairs: Ordered (key, value) pairs
        path: Destination file

    Returns:
        The written path
    """
    path.write_text("".join(f"{key} = {value}\n" for key, value in pairs))
    return path


def metrics_pairs(record: MetricsRecord) -> list[tuple[str, str]]:
    """Flatten a metrics record into key-value pairs."""
    pairs = [("channel", record.channel)]
    for name in ("ise", "iae", "itse", "itae"):
        pairs.append((name, f"{getattr(record.indices, name):.17g}"))
    for i, axis in enumerate(record.per_axis, 1):
        pairs += [(f"ise_{i}", f"{axis.ise:.17g}"), (f"iae_{i}", f"{axis.iae:.17g}")]
    pairs += [
        ("rms_u", f"{record.rms_u:.17g}"),
        ("tv_u", f"{record.tv_u:.17g}"),
        ("switches", str(record.switches)),
    ]
    return pairs


def write_metrics_rows(rows: list[dict], path: Path) -> Path:
    """Write one CSV row per run.

    Args:
        rows: Dictionaries sharing the same keys
        path: Destination CSV file

    Returns:
        The written path
    """
    pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
