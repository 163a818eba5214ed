from collections.abc import Sequence

import pandas as pd
from pydantic import BaseModel

from src.verify.harness import CountReport

COUNT_REPORT_COLUMNS = ["x", "exact_count", "density", "main_term", "residual", "envelope", "normalized_residual"]


def reports_to_frame(reports: Sequence[CountReport]) -> pd.DataFrame:
    """CountReports as a DataFrame with the verify CSV columns; density is its value."""
    records = [
        {
            "x": r.x,
            "exact_count": r.exact_count,
            "density": r.density.value,
            "main_term": r.main_term,
            "residual": r.residual,
            "envelope": r.envelope,
            "normalized_residual": r.normalized_residual,
        }
        for r in reports
    ]
    return pd.DataFrame.from_records(records, columns=COUNT_REPORT_COLUMNS)


def rows_to_frame(rows: Sequence[BaseModel]) -> pd.DataFrame:
    """Any list of flat result rows (Lemma 1 cells, powerful checks) as a DataFrame."""
    if not rows:
        return pd.DataFrame()
    return pd.DataFrame.from_records([row.model_dump() for row in rows], columns=list(type(rows[0]).model_fields))


def summarize_reports(reports: Sequence[CountReport]) -> dict:
    """Largest normalized residual and whether |residual| / x shrinks from the first x to the last."""
    frame = reports_to_frame(reports).sort_values("x")
    relative = (frame["residual"].abs() / frame["x"]).tolist()
    return {
        "max_normalized_residual": float(frame["normalized_residual"].max()),
        "relative_residual_decreasing": len(relative) < 2 or relative[-1] < relative[0],
    }
