"""
Recorded tracker inputs.

A sequence file is line-oriented text. Header lines start with ``#``; the
first one names the format version. Data rows, in processing order::

    I t wx wy wz ax ay az
    F t frame_id r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz
    B t request_id status r00 ... r22 tx ty tz

``F`` rows carry the true camera-from-world pose of the frame; ``B`` rows a
backend response at its delivery time. Floats are written in their shortest
round-trip form so a self-recorded file replays bit for bit.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from django.conf import settings
from django.core.exceptions import ValidationError

from backend.messages import PoseResponse, ResponseStatus
from geom.exceptions import GeometryError
from geom.transforms import Pose
from motion.exceptions import MotionError
from motion.frames import FrameEvent
from motion.imu import ImuSample

from .config import ExperimentConfig
from .exceptions import SequenceFormatError, SequenceVersionError
from .runner import ExperimentRunner, FrameTruth, TrackingSession, build_tracker

logger = logging.getLogger(__name__)

FORMAT_NAME = 'viotrack-sequence'
FORMAT_VERSION = 1

IMU_ROW = 'I'
FRAME_ROW = 'F'
RESPONSE_ROW = 'B'
ROW_FIELDS = {IMU_ROW: 7, FRAME_ROW: 14, RESPONSE_ROW: 15}


def _floats(values):
    return ' '.join(repr(float(v)) for v in values)


class SequenceWriter:
    """Receives the inputs of a running tracker and writes them as sequence rows."""

    def __init__(self, stream):
        self.stream = stream
        self.rows = 0

    def header(self, cfg, start=0.0):
        lines = [
            f'{FORMAT_NAME} {FORMAT_VERSION}',
            f'start {start!r}',
            f'imu_rate {cfg.imu_rate!r}',
            f'frame_rate {cfg.frame_rate!r}',
            f'seed {cfg.seed}',
            f'script {cfg.script.name}',
            f'config {json.dumps(cfg.as_dict(), sort_keys=True)}',
        ]
        self.stream.write(''.join(f'# {line}\n' for line in lines))

    def imu(self, sample):
        self.stream.write(f'{IMU_ROW} {sample.t!r} {_floats(sample.omega)} {_floats(sample.accel)}\n')
        self.rows += 1

    def frame(self, frame):
        self.stream.write(f'{FRAME_ROW} {frame.t!r} {frame.frame_id} {_floats(frame.true_cam_from_world.to_row())}\n')
        self.rows += 1

    def response(self, t, response):
        status = ResponseStatus(response.status).value
        self.stream.write(f'{RESPONSE_ROW} {t!r} {response.request_id} {status} {_floats(response.pose.to_row())}\n')
        self.rows += 1


@dataclass
class SequenceRow:
    kind: str
    t: float
    line_number: int
    item: object


@dataclass
class SequenceRecord:
    header: dict
    rows: list = field(default_factory=list)
    config: Optional[ExperimentConfig] = None

    @property
    def frames(self):
        return [row.item for row in self.rows if row.kind == FRAME_ROW]


def _parse_row(tokens, line_number):
    kind = tokens[0]
    if kind not in ROW_FIELDS:
        raise SequenceFormatError(line_number, f'unknown row type {kind!r}')
    if len(tokens) != ROW_FIELDS[kind] + 1:
        raise SequenceFormatError(
            line_number, f'{kind} row needs {ROW_FIELDS[kind]} fields, got {len(tokens) - 1}',
        )
    if kind == RESPONSE_ROW and tokens[3] not in ResponseStatus.values:
        raise SequenceFormatError(line_number, f'unknown response status {tokens[3]!r}')
    try:
        t = float(tokens[1])
        if not math.isfinite(t):
            raise ValueError(f'timestamp {tokens[1]!r} is not finite')
        if kind == IMU_ROW:
            values = [float(v) for v in tokens[2:]]
            return SequenceRow(kind, t, line_number, ImuSample(t, values[:3], values[3:]))
        if kind == FRAME_ROW:
            pose = Pose.from_row(tokens[3:])
            return SequenceRow(kind, t, line_number, FrameEvent(t, int(tokens[2]), pose))
        return SequenceRow(
            kind, t, line_number, (int(tokens[2]), ResponseStatus(tokens[3]), Pose.from_row(tokens[4:])),
        )
    except (ValueError, GeometryError) as exc:
        raise SequenceFormatError(line_number, str(exc)) from exc


def parse_sequence(lines):
    """Parse sequence text given as an iterable of lines; header entries keep their line numbers."""
    header = {}
    header_lines = {}
    rows = []
    start = None
    last_t = None
    last_imu_t = None
    versioned = False
    for line_number, line in enumerate(lines, start=1):
        text = line.strip()
        if not versioned:
            parts = text.lstrip('#').split()
            if not text.startswith('#') or len(parts) != 2 or parts[0] != FORMAT_NAME:
                raise SequenceVersionError(f'not a {FORMAT_NAME} file')
            if parts[1] != str(FORMAT_VERSION):
                raise SequenceVersionError(f'format version {parts[1]} is not supported (expected {FORMAT_VERSION})')
            versioned = True
            continue
        if not text:
            continue
        if text.startswith('#'):
            if rows:
                raise SequenceFormatError(line_number, 'header line after data rows')
            key, _, value = text[1:].strip().partition(' ')
            if not key:
                raise SequenceFormatError(line_number, 'empty header line')
            header[key] = value.strip()
            header_lines[key] = line_number
            if key == 'start':
                try:
                    start = float(header['start'])
                except ValueError:
                    raise SequenceFormatError(line_number, f'invalid start time {value!r}') from None
            continue

        row = _parse_row(text.split(), line_number)
        if start is not None and row.t < start:
            raise SequenceFormatError(line_number, f'timestamp {row.t} precedes the sequence start {start}')
        if last_t is not None and row.t < last_t:
            raise SequenceFormatError(line_number, f'timestamp {row.t} goes back from {last_t}')
        if row.kind == IMU_ROW:
            if last_imu_t is not None and row.t <= last_imu_t:
                raise SequenceFormatError(line_number, f'IMU timestamp {row.t} does not advance from {last_imu_t}')
            last_imu_t = row.t
        last_t = row.t
        rows.append(row)

    if not versioned:
        raise SequenceVersionError(f'not a {FORMAT_NAME} file')
    record = SequenceRecord(header=header, rows=rows)
    record.config = _sequence_config(record, header_lines)
    return record


def _header_value(record, header_lines, key, cast, default):
    if key not in record.header:
        return default
    try:
        return cast(record.header[key])
    except ValueError:
        raise SequenceFormatError(header_lines[key], f'invalid {key} {record.header[key]!r}') from None


def _sequence_config(record, header_lines):
    """The run configuration embedded in the header, or one built from settings and the header values."""
    if 'config' in record.header:
        try:
            return ExperimentConfig.from_dict(json.loads(record.header['config']))
        except (ValueError, KeyError, TypeError, MotionError, ValidationError) as exc:
            raise SequenceFormatError(header_lines['config'], f'invalid embedded config: {exc}') from exc

    frame_rate = _header_value(record, header_lines, 'frame_rate', float, settings.VIOTRACK['FRAME_RATE'])
    last_t = record.rows[-1].t if record.rows else 0.0
    try:
        return ExperimentConfig.from_settings(
            script=record.header.get('script', 'trans-easy'),
            frame_rate=frame_rate,
            imu_rate=_header_value(record, header_lines, 'imu_rate', float, None),
            seed=_header_value(record, header_lines, 'seed', int, None),
            duration=last_t + 1.0 / frame_rate,
        )
    except (MotionError, ValidationError) as exc:
        raise SequenceFormatError(header_lines.get('script', 1), f'invalid header: {exc}') from exc


def read_sequence(path):
    with open(path, encoding='utf-8') as stream:
        return parse_sequence(stream)


def replay_record(record):
    """Run a fresh tracker over the recorded inputs and score it against the recorded frames."""
    cfg = record.config
    session = TrackingSession(build_tracker(cfg), FrameTruth(record.frames))
    for row in record.rows:
        if row.kind == IMU_ROW:
            session.on_imu(row.item)
        elif row.kind == FRAME_ROW:
            session.on_frame(row.item)
        else:
            request_id, status, pose = row.item
            t0 = session.issued.get(request_id, row.t)
            session.on_response(row.t, PoseResponse(request_id, t0, pose, status))
    return session.report(cfg)


def replay_sequence(path):
    record = read_sequence(path)
    logger.info('Replaying %d rows from %s', len(record.rows), path)
    return replay_record(record)


def record_sequence(cfg, path):
    """Run ``cfg`` and write its tracker inputs to ``path``; returns the run's report."""
    with open(path, 'w', encoding='utf-8') as stream:
        writer = SequenceWriter(stream)
        report = ExperimentRunner(cfg, recorder=writer).run()
    logger.info('Recorded %d rows to %s', writer.rows, path)
    return report
