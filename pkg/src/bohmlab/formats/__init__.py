"""Output tables."""

from bohmlab.formats.tables import read_csv, write_csv, write_json

__all__ = ["read_csv", "write_csv", "write_json"]
