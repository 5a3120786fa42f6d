import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ('Time', 'phiAvg', 'residual', 'newton_iters', 'ratio', 'fallback')
ORACLE_HEADER = ('Time', 'phiAvg', 'lambda', 'stretch_a', 'stretch_b')
SWEEP_HEADER = ('depth', 'iterations', 'time_steps', 'wall_time', 'phiAvg')


def format_value(value: Any) -> str:
    """Shortest round-tripping text for floats, plain text otherwise; None becomes empty."""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='UTF8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows([format_value(v) for v in row] for row in rows)
    logger.info(f"Wrote {path}")
    return path


def read_csv(path: Union[str, Path]):
    with open(path, encoding='UTF8', newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, [row for row in reader]


def write_trajectory(path: Union[str, Path], trajectory) -> Path:
    """CSV of per-step records; the first two columns are ``Time,phiAvg``."""
    return write_csv(path, TRAJECTORY_HEADER, (
        (r.time, r.phi_avg, r.residual, r.newton_iterations, r.ratio, r.fallback) for r in trajectory
    ))


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: Union[str, Path], data: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + '\n')
    logger.info(f"Wrote {path}")
    return path
