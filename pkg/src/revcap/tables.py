"""CSV / JSON rendering of result rows, and the matching CSV reader."""
import csv
import io
import json
import math

SIG_DIGITS = 12


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIG_DIGITS}g}")
    return value


def render(header, rows, fmt_name="csv"):
    """Render ``rows`` (sequences aligned with ``header``) as text."""
    if fmt_name == "json":
        lines = [
            json.dumps({k: _json_value(v) for k, v in zip(header, row)}, sort_keys=False)
            for row in rows
        ]
        return "[\n" + ",\n".join(lines) + "\n]\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _parse(cell):
    if cell == "":
        return None
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


def parse_csv(text):
    """Parse text produced by :func:`render` back into a list of dicts."""
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse(v) for k, v in row.items()} for row in reader]


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read())
