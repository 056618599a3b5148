"""Reading and writing the toolkit's files: instance JSON, traces, and atomically written CSV/JSON outputs."""
import json
import math
import os
import tempfile
from typing import Any, Dict

import numpy as np
import pandas as pd

from sata.core import Instance


class InstanceFormatError(ValueError):
    """An instance file does not follow the documented JSON layout."""


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    robots = []
    for i in inst.robots:
        primitives = []
        for m in range(1, inst.primitive_count(i) + 1):
            targets = [{"target": j, "weight": inst.weights[(i, m, j)]} for j in inst.targets if (i, m, j) in inst.weights]
            primitives.append({"id": m, "targets": targets})
        robots.append({"id": i, "primitives": primitives})
    return {"robots": robots, "target_count": inst.target_count}


def instance_from_dict(data: Dict[str, Any]) -> Instance:
    """Builds an Instance from the JSON layout.

    |P^i| is the number of listed primitives unless a robot gives an explicit "primitive_count". Primitive ids
    are kept as written so that validate_instance can report ids beyond |P^i|.
    """
    try:
        robots = sorted(data["robots"], key=lambda robot: int(robot["id"]))
        target_count = int(data["target_count"])
        primitives_per_robot = []
        weights = {}
        for robot in robots:
            robot_id = int(robot["id"])
            primitives_per_robot.append(int(robot.get("primitive_count", len(robot["primitives"]))))
            for primitive in robot["primitives"]:
                for edge in primitive.get("targets", []):
                    weights[(robot_id, int(primitive["id"]), int(edge["target"]))] = float(edge["weight"])
    except (KeyError, TypeError, ValueError) as error:
        raise InstanceFormatError(f"Malformed instance data: {error!r}") from error

    if [int(robot["id"]) for robot in robots] != list(range(1, len(robots) + 1)):
        raise InstanceFormatError("Robot ids must be exactly 1..|R|.")
    return Instance(len(robots), tuple(primitives_per_robot), target_count, weights)


def load_instance(path: str) -> Instance:
    full_file_path = os.path.abspath(path)
    with open(full_file_path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as error:
            raise InstanceFormatError(f"{full_file_path} is not valid JSON: {error}") from error
    return instance_from_dict(data)


def dump_instance(inst: Instance, path: str):
    write_text_atomically(path, json.dumps(instance_to_dict(inst), indent=2))


def write_text_atomically(path: str, text: str):
    """Writes to a temporary file in the destination directory, then renames it over the destination."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temporary_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(handle, "w") as f:
            f.write(text)
        os.replace(temporary_path, path)
    except BaseException:
        if os.path.exists(temporary_path):
            os.remove(temporary_path)
        raise


def write_csv_atomically(frame: pd.DataFrame, path: str):
    write_text_atomically(path, frame.to_csv(index=False, lineterminator="\n"))


def _json_default(value):
    # numpy scalars and containers reach here from DataFrames and traces.
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable.")


def _finite_only(value: Any) -> Any:
    """Replaces inf and NaN with None so every emitted document is standard JSON."""
    if isinstance(value, dict):
        return {key: _finite_only(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_only(item) for item in value]
    if isinstance(value, (np.ndarray, np.generic)):
        return _finite_only(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _dumps(payload: Any) -> str:
    return json.dumps(_finite_only(payload), indent=2, sort_keys=True, default=_json_default, allow_nan=False)


def write_json_atomically(payload: Any, path: str):
    write_text_atomically(path, _dumps(payload))


def to_json(payload: Any) -> str:
    return _dumps(payload)
