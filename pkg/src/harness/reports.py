"""
Run Reports
Success rate, query order statistics, quality means and the success CDF
"""
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import pandas as pd

from src.attacks.outcome import AttackOutcome
from src.core.errors import EmptyInputError
from src.harness.runner import OUTCOMES_FILE, RunResult
from src.metrics.quality import SSIM_MODE

logger = logging.getLogger(__name__)

STATS_FILE = "stats.csv"
CDF_FILE = "cdf.csv"
FLOAT_FORMAT = "%.6f"

PathLike = Union[str, Path]


@dataclass(frozen=True)
class RunStats:
    """
    Batch summary. Success rate and query totals cover every run; query
    order statistics and quality means cover successes only.
    """
    runs: int
    successes: int
    success_rate: float
    queries_max: Optional[int]
    queries_median: Optional[float]
    queries_min: Optional[int]
    queries_total: int
    queries_mean_all: float
    l0_mean: Optional[float]
    psnr_mean: Optional[float]
    ssim_mean: Optional[float]
    ssim_mode: str = SSIM_MODE

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _as_record(row: Union[AttackOutcome, RunResult, Dict[str, Any]]) -> Dict[str, Any]:
    if isinstance(row, (AttackOutcome, RunResult)):
        return row.to_record()
    return row


def _mean(series: pd.Series) -> Optional[float]:
    values = pd.to_numeric(series, errors="coerce").dropna()
    if values.empty:
        return None
    return float(values.mean())


def aggregate(rows: Iterable[Union[AttackOutcome, RunResult, Dict[str, Any]]]) -> Tuple[RunStats, pd.DataFrame]:
    """
    RunStats plus a CDF table of (queries, cumulative success rate).

    Raises:
        EmptyInputError: no outcomes given
    """
    records = [_as_record(row) for row in rows]
    if not records:
        raise EmptyInputError("cannot aggregate zero outcomes")

    df = pd.DataFrame(records)
    runs = len(df)
    wins = df[df["status"] == "success"]
    # "inf" PSNR strings become float infinity
    psnr = wins["psnr"].map(lambda v: math.inf if v == "inf" else v)

    stats = RunStats(
        runs=runs,
        successes=len(wins),
        success_rate=len(wins) / runs,
        queries_max=int(wins["queries"].max()) if not wins.empty else None,
        queries_median=float(wins["queries"].median()) if not wins.empty else None,
        queries_min=int(wins["queries"].min()) if not wins.empty else None,
        queries_total=int(df["queries"].sum()),
        queries_mean_all=float(df["queries"].mean()),
        l0_mean=_mean(wins["l0"]),
        psnr_mean=_mean(psnr),
        ssim_mean=_mean(wins["ssim"]),
    )

    counts = wins["queries"].value_counts().sort_index()
    cdf = pd.DataFrame({
        "queries": counts.index.astype(int),
        "success_rate": counts.cumsum().to_numpy() / runs,
    })
    return stats, cdf.reset_index(drop=True)


def read_outcomes(out_dir: PathLike) -> List[Dict[str, Any]]:
    path = Path(out_dir) / OUTCOMES_FILE
    with open(path, "r") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_reports(out_dir: PathLike, cost_per_1000: Optional[float] = None) -> RunStats:
    """Write stats.csv and cdf.csv next to the outcomes file"""
    out_dir = Path(out_dir)
    stats, cdf = aggregate(read_outcomes(out_dir))
    row = stats.to_dict()
    if cost_per_1000 is not None:
        row["estimated_cost"] = stats.queries_total * cost_per_1000 / 1000.0
    pd.DataFrame([row]).to_csv(out_dir / STATS_FILE, index=False, float_format=FLOAT_FORMAT)
    cdf.to_csv(out_dir / CDF_FILE, index=False, float_format=FLOAT_FORMAT)
    logger.info("success rate %.3f over %d runs", stats.success_rate, stats.runs)
    return stats
