"""
Write results to CSV and JSON files, and read them back.

Sweep output is a CSV of raw trial measurements, a plot-ready CSV of
per-size means, and a JSON report of the fit. Social graphs and their
sessions can also be dumped to JSON, for inspection or to reload later.
"""

import csv
import dataclasses
from fractions import Fraction
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

from django.core.serializers.json import DjangoJSONEncoder
import numpy as np

from .model import SocialGraph
from .sessions import DisseminationSession


__all__ = (
    'dump_json',
    'dumps',
    'graph_from_dict',
    'graph_to_dict',
    'load_json',
    'read_csv',
    'ReportEncoder',
    'sessions_from_dict',
    'sessions_to_dict',
    'write_csv',
)


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ReportEncoder(DjangoJSONEncoder):
    """
    JSON encoder that also understands numpy values, fractions and dataclasses.

        >>> json.dumps({'a': np.int64(3), 'b': Fraction(3, 2)}, cls=ReportEncoder)
        '{"a": 3, "b": 1.5}'
    """
    def default(self, o: Any) -> Any:
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Fraction):
            return float(o)
        if isinstance(o, Path):
            return str(o)
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            return dataclasses.asdict(o)
        return super().default(o)


def _finite(value: Any) -> Any:
    """
    JSON has no NaN or infinity, so write them as null.
    """
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


def dumps(data: Any) -> str:
    """
    Indented JSON text of data, with non-finite floats as null.

        >>> print(dumps({'load': float('inf')}))
        {
          "load": null
        }
    """
    encoded = json.loads(json.dumps(data, cls=ReportEncoder))
    return json.dumps(_finite(encoded), indent=2, ensure_ascii=False, allow_nan=False)


def dump_json(data: Any, path: PathLike) -> Path:
    """
    Write data to a UTF-8 JSON file, replacing any existing file.

    Returns:
        Path to file written.
    """
    path = Path(path)
    with open(path, 'wt', encoding='utf-8') as fp:
        fp.write(dumps(data))
        fp.write('\n')
    logger.info("Wrote %s", path)
    return path


def load_json(path: PathLike) -> Any:
    with open(path, 'rt', encoding='utf-8') as fp:
        return json.load(fp)


def write_csv(path: PathLike, fieldnames: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """
    Write rows of dictionaries to a CSV file, with a header line.

    Floats are written in their shortest round-tripping form.
    """
    path = Path(path)
    with open(path, 'wt', encoding='utf-8', newline='') as fp:
        writer = csv.DictWriter(fp, fieldnames=fieldnames, extrasaction='ignore')
        writer.writeheader()
        count = 0
        for row in rows:
            writer.writerow({key: _cell(value) for key, value in row.items()})
            count += 1
    logger.info("Wrote %s rows to %s", count, path)
    return path


def _cell(value: Any) -> Any:
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    if value is None:
        return ''
    return value


def read_csv(path: PathLike) -> list:
    """
    Read CSV file written by `write_csv()`, as a list of string dictionaries.
    """
    with open(path, 'rt', encoding='utf-8', newline='') as fp:
        return list(csv.DictReader(fp))


def graph_to_dict(graph: SocialGraph) -> Dict[str, Any]:
    """
    Plain-data form of a social graph.
    """
    return {
        'n': graph.n,
        'nodes': [
            {
                'friends': graph.friends[node],
                'anchors': graph.anchor_points[node],
                'anchor_nodes': graph.anchor_nodes[node],
            }
            for node in range(graph.n)
        ],
    }


def sessions_to_dict(sessions: Sequence[DisseminationSession]) -> List[Dict[str, Any]]:
    """
    Plain-data form of dissemination sessions, one dictionary each.
    """
    return [
        {
            'source': session.source,
            'destinations': session.destinations,
            'anchor_subset': session.anchor_subset,
            'anchor_nodes': session.anchor_nodes,
            'rate': session.rate,
        }
        for session in sessions
    ]


def sessions_from_dict(data: Iterable[Mapping[str, Any]]) -> List[DisseminationSession]:
    """
    Rebuild sessions from `sessions_to_dict()` output.

    Raises:
        SessionError:
            If a session has no destinations.
    """
    return [
        DisseminationSession(
            source=int(item['source']),
            destinations=np.asarray(item['destinations'], dtype=np.int64),
            anchor_subset=np.asarray(item['anchor_subset'], dtype=np.float64).reshape(-1, 2),
            anchor_nodes=np.asarray(item['anchor_nodes'], dtype=np.int64),
            rate=float(item.get('rate', 1.0)),
        )
        for item in data
    ]


def graph_from_dict(data: Mapping[str, Any]) -> SocialGraph:
    """
    Rebuild a social graph from `graph_to_dict()` output, eg. loaded JSON.
    """
    nodes = data['nodes']
    anchors = tuple(np.asarray(node['anchors'], dtype=np.float64).reshape(-1, 2) for node in nodes)
    return SocialGraph(
        friends=tuple(np.asarray(node['friends'], dtype=np.int64) for node in nodes),
        anchor_points=anchors,
        anchor_nodes=tuple(np.asarray(node['anchor_nodes'], dtype=np.int64) for node in nodes),
        degrees=np.array([len(points) for points in anchors], dtype=np.int64),
    )
