"""Dataset ingestion and the package's own record formats."""

from .csvio import CsvScene, parse_trajectory_csv, read_lane_file, write_lane_file
from .records import (
    SCHEMA_VERSION,
    read_records,
    write_records,
)

__all__ = [
    "CsvScene",
    "SCHEMA_VERSION",
    "parse_trajectory_csv",
    "read_lane_file",
    "read_records",
    "write_lane_file",
    "write_records",
]
