import json
import logging
import os
from datetime import datetime
from typing import Dict, List, Optional

from utils.config import get_settings

logger = logging.getLogger(__name__)


class ReportStore:
    """Keeps a history of verification runs in the data directory"""

    def __init__(self, data_dir: Optional[str] = None):
        self.data_dir = data_dir or get_settings().data_dir
        self.history_file = os.path.join(self.data_dir, "report_history.json")
        self._ensure_data_directory()
        self._load_history()

    def _ensure_data_directory(self):
        """Create the data directory on first use"""
        os.makedirs(self.data_dir, exist_ok=True)

    def _load_history(self):
        try:
            if os.path.exists(self.history_file):
                with open(self.history_file, 'r') as f:
                    self.history = json.load(f)
            else:
                self.history = []
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("Could not read %s, starting a fresh history: %s", self.history_file, e)
            self.history = []

    def _save_history(self):
        """Write the run list back to report_history.json"""
        try:
            with open(self.history_file, 'w') as f:
                json.dump(self.history, f, indent=2)
        except OSError as e:
            logger.error("Error saving history: %s", e)

    def add_entry(self, report: Dict, command: str, report_path: Optional[str] = None) -> Dict:
        """Record a finished verification run"""
        entry = {
            "id": max((e["id"] for e in self.history), default=0) + 1,
            "command": command,
            "mode": report["mode"],
            "ok": report["ok"],
            "instances": report["instances"],
            "failures": len(report.get("failures", [])),
            "params": report.get("params", {}),
            "report_path": report_path,
            "timestamp": datetime.now().isoformat(),
        }
        self.history.append(entry)
        self._save_history()
        return entry

    def get_history(self) -> List[Dict]:
        """Stored runs in the order they were recorded"""
        return self.history

    def get_entry(self, entry_id: int) -> Dict:
        """One stored run; empty dict when the id is unknown"""
        for entry in self.history:
            if entry["id"] == entry_id:
                return entry
        return {}

    def delete_entry(self, entry_id: int) -> bool:
        """Delete a history entry and the report file it points to"""
        for i, entry in enumerate(self.history):
            if entry["id"] == entry_id:
                self._remove_file(entry.get("report_path"))
                self.history.pop(i)
                self._save_history()
                return True
        return False

    def clear_history(self):
        """Drop every stored run along with its report file"""
        for entry in self.history:
            self._remove_file(entry.get("report_path"))
        self.history = []
        self._save_history()

    def _remove_file(self, path: Optional[str]):
        if not path:
            return
        try:
            if os.path.exists(path):
                os.remove(path)
        except OSError as e:
            logger.warning("Could not remove %s: %s", path, e)
