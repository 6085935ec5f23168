from pathlib import Path

from eventlog.csv_log import parse_csv
from eventlog.model import EventLogError
from eventlog.xes import parse_xes


def load_log(path, log_format=None, **options):
    """Load an event log from a .xes or .csv file."""
    path = Path(path)
    log_format = (log_format or path.suffix.lstrip(".")).lower()
    with open(path, "rb") as f:
        if log_format == "xes":
            options.pop("mapping", None)
            options.pop("timestamp_format", None)
            return parse_xes(f, **options)
        if log_format == "csv":
            return parse_csv(f, **options)
    raise EventLogError(f"unsupported log format {log_format!r} for {path}")
