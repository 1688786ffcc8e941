"""CSV output protocol"""

from __future__ import annotations

import csv
from typing import Dict, TextIO

from ..types import Table

__all__ = ["write_csv"]


def write_csv(f: TextIO, data: Table, args: Dict) -> None:
    """Write a table as CSV, preceded by a ``# <header>`` comment line if given."""
    header = args.get("header")
    if header:
        f.write(f"# {header}\n")
    writer = csv.DictWriter(f, data.fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(data.records)
