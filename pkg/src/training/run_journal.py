"""
Run Journal - JSON-based persistent record of training runs.
Every train run appends its report next to the checkpoint, so multi-seed
and sweep results accumulate on disk.
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

JOURNAL_NAME = "runs.json"


class RunJournal:
    """
    Persistent run journal using one JSON file.

    Each entry: id, timestamp, label, config digest and dict, seed,
    per-epoch records, best epoch, best val mse, test metrics, parameter count.
    """

    def __init__(self, path: str, logger=None):
        """
        Args:
            path: Journal file, or a directory that will hold runs.json
            logger: Optional logger
        """
        self.logger = logger or logging.getLogger(__name__)
        path = Path(path)
        self.path = path / JOURNAL_NAME if path.is_dir() or not path.suffix else path
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.runs: List[Dict] = self._load_json(self.path, [])
        self.logger.debug(f"RunJournal {self.path}: {len(self.runs)} previous runs")

    def _load_json(self, filepath: Path, default):
        try:
            if filepath.exists():
                with open(filepath, 'r') as f:
                    return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            self.logger.warning(f"Failed to load {filepath}: {e}")
        return default

    def _save_json(self, filepath: Path, data) -> bool:
        try:
            with open(filepath, 'w') as f:
                json.dump(data, f, indent=2, default=str)
            return True
        except OSError as e:
            self.logger.error(f"Failed to save {filepath}: {e}")
            return False

    def log_run(self, report: Dict, config: Dict, digest: str, label: str = "train",
                checkpoint: Optional[str] = None) -> Dict:
        """Append one run (report as produced by TrainReport.to_dict()) and persist."""
        entry = {
            "id": len(self.runs) + 1,
            "timestamp": datetime.now().isoformat(),
            "label": label,
            "config_digest": digest,
            "seed": config.get("train", {}).get("seed"),
            "checkpoint": checkpoint,
            "config": config,
            **report,
        }
        self.runs.append(entry)
        self._save_json(self.path, self.runs)
        test = report.get("test") or {}
        self.logger.info(f"Run {entry['id']} journaled ({label}, best epoch {report.get('best_epoch')}, "
                         f"test mse {test.get('mse', float('nan')):.6f})")
        return entry

    def runs_for(self, digest: Optional[str] = None, label: Optional[str] = None) -> List[Dict]:
        return [r for r in self.runs
                if (digest is None or r.get("config_digest") == digest)
                and (label is None or r.get("label") == label)]

    def summary(self, label: Optional[str] = None) -> Dict:
        """Mean/std of test metrics over journaled runs."""
        return summarize_metrics([r.get("test") for r in self.runs_for(label=label) if r.get("test")])


def summarize_metrics(results: List[Dict[str, float]]) -> Dict:
    """Mean and population std of each metric over a list of metric dicts."""
    if not results:
        return {"runs": 0}
    out: Dict = {"runs": len(results)}
    for key in sorted(results[0]):
        values = np.array([r[key] for r in results], dtype=np.float64)
        out[key] = {"mean": float(values.mean()), "std": float(values.std())}
    return out
