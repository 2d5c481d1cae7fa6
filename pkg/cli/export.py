# Import libraries
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def fmt(value: Any) -> str:
    """Numbers with 17 significant digits; everything else as text."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def json_text(document: BaseModel | dict | list) -> str:
    if isinstance(document, BaseModel):
        document = document.model_dump(mode="json")
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def columns(header: Sequence[str], *arrays: Sequence[Any]) -> tuple[list[str], list[list[Any]]]:
    """Pack equal-length columns into (header, rows)."""
    return list(header), [list(row) for row in zip(*arrays)]


def export_plot_data(
    out_dir: str | Path,
    tables: dict[str, tuple[Sequence[str], Iterable[Sequence[Any]]]] | None = None,
    documents: dict[str, BaseModel | dict | list] | None = None,
) -> list[Path]:
    """
    Write CSV tables and JSON documents for one or more pipeline stages.

    Args:
        out_dir (str | Path): Target directory, created on the first write.
        tables (dict | None): File name -> (header, rows).
        documents (dict | None): File name -> pydantic model or plain JSON data.

    Returns:
        list[Path]: Files written, in name order. Nothing is created when both
            mappings are empty.
    """
    tables = tables or {}
    documents = documents or {}
    if not tables and not documents:
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(tables):
        header, rows = tables[name]
        path = out / name
        path.write_text(csv_text(header, rows), encoding="utf-8")
        written.append(path)
    for name in sorted(documents):
        path = out / name
        path.write_text(json_text(documents[name]), encoding="utf-8")
        written.append(path)
    logger.info(f"Wrote {len(written)} file(s) to {out}")
    return written
