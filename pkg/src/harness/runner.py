"""
Batch Runner
Runs one attack over a qualified manifest with per-image seeds, resumable JSON-lines output
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple, Union

from src.attacks.outcome import AttackOutcome, FailureReason
from src.core.errors import BudgetExhaustedError, EvaderError
from src.core.image import save_png
from src.harness.dataset import CorpusItem
from src.harness.specs import AttackSpec, OracleFactory
from src.oracle.detectors import CachedOracle, MeteredOracle
from src.oracle.verdict import Verdict

logger = logging.getLogger(__name__)

OUTCOMES_FILE = "outcomes.jsonl"
TRAJECTORY_FILE = "trajectory.jsonl"
ADVERSARIAL_DIR = "adversarial"

PathLike = Union[str, Path]


@dataclass
class RunResult:
    """Outcome of one image within a batch"""
    image_id: str
    index: int
    seed: int
    outcome: AttackOutcome

    def to_record(self) -> Dict[str, Any]:
        return {"image_id": self.image_id, "index": self.index, "seed": self.seed, **self.outcome.to_record()}


def derive_seed(base_seed: int, index: int) -> int:
    return base_seed ^ index


def completed_ids(out_dir: PathLike) -> Set[str]:
    """Image ids already present in an outcomes file"""
    path = Path(out_dir) / OUTCOMES_FILE
    if not path.exists():
        return set()
    with open(path, "r") as f:
        return {json.loads(line)["image_id"] for line in f if line.strip()}


def _run_one(attack: AttackSpec, oracle_factory: OracleFactory, budget: Optional[int], cache: bool,
             index: int, item: CorpusItem, verdict: Verdict, seed: int) -> RunResult:
    metered = None
    try:
        metered = MeteredOracle(oracle_factory(item.image, item.mask), budget=budget)
        # cache hits never reach the meter
        oracle = CachedOracle(metered) if cache else metered
        outcome = attack.run(item.image, item.mask, oracle, seed, verdict)
        outcome.queries = metered.ledger.used
    except BudgetExhaustedError as exc:
        logger.warning("%s: %s", item.image_id, exc)
        outcome = AttackOutcome.failure(FailureReason.BUDGET_EXHAUSTED, queries=metered.ledger.used,
                                        params={"attack": attack.attack, "seed": seed}, detail=str(exc))
    except EvaderError as exc:
        logger.warning("%s failed: %s", item.image_id, exc)
        used = metered.ledger.used if metered is not None else 0
        outcome = AttackOutcome.failure(FailureReason.ERROR, queries=used,
                                        params={"attack": attack.attack, "seed": seed},
                                        detail=f"{type(exc).__name__}: {exc}")
    return RunResult(image_id=item.image_id, index=index, seed=seed, outcome=outcome)


def run_experiment(manifest: List[Tuple[CorpusItem, Verdict]], attack: AttackSpec,
                   oracle_factory: OracleFactory, base_seed: int = 0,
                   out_dir: Optional[PathLike] = None, parallel: int = 1,
                   budget: Optional[int] = None, cache: bool = False) -> List[RunResult]:
    """
    Attack every qualified image and append one JSON line per outcome.

    Images already recorded under out_dir are skipped. Per-image errors
    become failure rows; the batch never aborts on them. With `cache` set,
    repeated images within one attack are answered without a query.
    """
    done = completed_ids(out_dir) if out_dir is not None else set()
    if out_dir is not None:
        _drop_orphan_trajectory(Path(out_dir), done)
    pending = [(index, item, verdict) for index, (item, verdict) in enumerate(manifest)
               if item.image_id not in done]
    if done:
        logger.info("resuming: %d of %d images already recorded", len(manifest) - len(pending), len(manifest))

    def task(entry):
        index, item, verdict = entry
        return _run_one(attack, oracle_factory, budget, cache, index, item, verdict, derive_seed(base_seed, index))

    results = []
    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        # map yields in submission order, so the file order is deterministic
        for result in pool.map(task, pending):
            if out_dir is not None:
                _append(Path(out_dir), result)
            logger.info("%s: %s after %d queries", result.image_id, result.outcome.status.value,
                        result.outcome.queries)
            results.append(result)
    return results


def _line_image_id(line: str) -> Optional[str]:
    try:
        return json.loads(line)["image_id"]
    except (ValueError, KeyError):
        # torn write
        return None


def _drop_orphan_trajectory(out_dir: Path, done: Set[str]) -> None:
    """Remove trajectory lines of images whose outcome row was never written"""
    path = out_dir / TRAJECTORY_FILE
    if not path.exists():
        return
    with open(path, "r") as f:
        lines = [line for line in f if line.strip()]
    kept = [line for line in lines if _line_image_id(line) in done]
    if len(kept) != len(lines):
        logger.info("dropping %d trajectory lines of unfinished images", len(lines) - len(kept))
        with open(path, "w") as f:
            f.writelines(kept)


def _append(out_dir: Path, result: RunResult) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    record = result.to_record()
    outcome = result.outcome
    if outcome.adversarial is not None:
        (out_dir / ADVERSARIAL_DIR).mkdir(exist_ok=True)
        image_path = out_dir / ADVERSARIAL_DIR / f"{result.image_id}.png"
        save_png(outcome.adversarial, image_path)
        record["adversarial_path"] = str(Path(ADVERSARIAL_DIR) / image_path.name)
    if outcome.trajectory:
        with open(out_dir / TRAJECTORY_FILE, "a") as f:
            for point in outcome.trajectory:
                f.write(json.dumps({"image_id": result.image_id, **point.to_dict()}, sort_keys=True) + "\n")
    with open(out_dir / OUTCOMES_FILE, "a") as f:
        f.write(json.dumps(record, sort_keys=True) + "\n")
