"""JSON (de)serialisation of configurations, graphs and classes, plus run manifests."""

from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .graph import PeriodicEdge, PeriodicGraph
from .optimizer import GraphClass
from .torus import Basis, Configuration


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serialisable")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True, default=_plain) + "\n"


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InvalidInputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc


def basis_from_dict(data: dict) -> Basis:
    try:
        V = np.array(data["basis"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError("expected a 'basis' entry with d rows of d numbers") from exc
    if "d" in data and V.shape != (data["d"], data["d"]):
        raise InvalidInputError(f"basis shape {V.shape} does not match d={data['d']}")
    return Basis(V)


def config_to_dict(config: Configuration) -> dict:
    return {
        "d": config.d,
        "basis": config.basis.vectors.tolist(),
        "centers": config.centers.tolist(),
        "radius": config.radius,
    }


def config_from_dict(data: dict) -> Configuration:
    basis = basis_from_dict(data)
    try:
        centers = np.array(data["centers"], dtype=float)
        radius = float(data.get("radius", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError("configuration needs 'centers' (fractional) and 'radius'") from exc
    return Configuration(basis, centers, radius)


def graph_to_dict(g: PeriodicGraph) -> dict:
    return {
        "n": g.n,
        "edges": [
            {"k": e.k, "j": e.j, "shift": list(e.shift), "gap": e.gap, "length": e.length}
            for e in g.edges
        ],
    }


def graph_from_dict(data: dict) -> PeriodicGraph:
    try:
        edges = tuple(
            PeriodicEdge(int(e["k"]), int(e["j"]), tuple(int(v) for v in e["shift"]),
                         float(e.get("gap", float("nan"))), float(e.get("length", float("nan"))))
            for e in data["edges"]
        )
        return PeriodicGraph(int(data["n"]), edges)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError("graph file needs 'n' and 'edges' with k, j, shift") from exc


def class_from_dict(data: dict) -> GraphClass:
    try:
        return GraphClass.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InvalidInputError("class file needs 'adjacency': [[{'j':..., 'shift':[...]}]]") from exc


@dataclass
class RunManifest:
    argv: list[str]
    inputs: dict[str, str] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    started: float = field(default_factory=time.perf_counter)

    def add_input(self, path) -> None:
        try:
            digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        except OSError as exc:
            raise InvalidInputError(f"cannot read {path}: {exc.strerror}") from exc
        self.inputs[str(path)] = digest

    def to_dict(self) -> dict:
        import mpmath
        import scipy

        from . import __version__

        return {
            "command": self.argv,
            "inputs_sha256": self.inputs,
            "tolerances": self.tolerances,
            "versions": {
                "densepack": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "mpmath": mpmath.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": time.perf_counter() - self.started,
        }


def write_output(path, payload: dict, manifest: RunManifest | None) -> None:
    """Write ``payload`` to ``path`` and the manifest to ``path + '.manifest.json'``.

    The data file only references the manifest by name, so repeated runs
    produce byte-identical data files.
    """
    path = Path(path)
    if manifest is not None:
        side = path.with_name(path.name + ".manifest.json")
        payload = {**payload, "manifest": side.name}
        side.write_text(dumps(manifest.to_dict()))
    path.write_text(dumps(payload))
