"""CSV and JSON renderings of experiment reports."""

import csv
import json
import logging
import math

logger = logging.getLogger(__name__)

CSV = 'csv'
JSON = 'json'
FORMAT_CHOICES = [(CSV, 'CSV'), (JSON, 'JSON')]

SUMMARY_HEADER = ['script', 'frame_rate', 'backend', 'pos_mm', 'orient_deg', 'proj_px']
SERIES_HEADER = ['t', 'pos_mm', 'orient_deg', 'proj_px']


def _number(value):
    """Fixed six decimals; missing values become empty cells."""
    if value is None or math.isnan(value):
        return ''
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f'{value:.6f}'


def summary_row(report):
    return [
        report.script,
        f'{report.frame_rate:g}',
        report.backend,
        _number(report.mean_pos_mm),
        _number(report.mean_orient_deg),
        _number(report.mean_proj_px),
    ]


def write_summary(reports, stream):
    """One row per report; reports without frames contribute nothing."""
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(SUMMARY_HEADER)
    for report in reports:
        if report.frame_count:
            writer.writerow(summary_row(report))


def write_series(report, stream):
    """Per-frame errors; frames the tracker could not score have empty cells."""
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(SERIES_HEADER)
    for frame in report.frames:
        if frame.scored:
            writer.writerow([repr(frame.t), _number(frame.pos_mm), _number(frame.orient_deg), _number(frame.proj_px)])
        else:
            writer.writerow([repr(frame.t), '', '', ''])


def write_json(reports, stream):
    data = [report.as_dict() for report in reports]
    json.dump(data[0] if len(data) == 1 else data, stream, indent=2, sort_keys=True)
    stream.write('\n')


def emit_report(report, fmt, path, series_path=None):
    """Write ``report`` (or a list of reports) to ``path`` and optionally its per-frame series."""
    reports = report if isinstance(report, (list, tuple)) else [report]
    if fmt not in dict(FORMAT_CHOICES):
        raise ValueError(f'Unknown report format {fmt!r}')
    with open(path, 'w', encoding='utf-8', newline='') as stream:
        if fmt == CSV:
            write_summary(reports, stream)
        else:
            write_json(reports, stream)
    logger.info('Wrote %s report to %s', fmt, path)
    if series_path is not None:
        if len(reports) != 1:
            raise ValueError('A series file holds exactly one report')
        with open(series_path, 'w', encoding='utf-8', newline='') as stream:
            write_series(reports[0], stream)
        logger.info('Wrote per-frame series to %s', series_path)
