import json
import logging
import os
import threading
from datetime import datetime
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


class RunRegistry:
    """Progress of CLI runs, persisted to a JSON file"""

    def __init__(self, registry_file: str):
        self.registry_file = registry_file
        self.runs: Dict[str, Any] = {}
        self._lock = threading.Lock()
        self._load_runs()

    def _load_runs(self):
        if os.path.exists(self.registry_file):
            try:
                with open(self.registry_file, "r", encoding="utf-8") as f:
                    self.runs = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                logger.warning(f"[!] Ignoring unreadable run registry {self.registry_file}: {str(e)}")
                self.runs = {}

    def _save_runs(self):
        try:
            directory = os.path.dirname(os.path.abspath(self.registry_file))
            os.makedirs(directory, exist_ok=True)
            with open(self.registry_file, "w", encoding="utf-8") as f:
                json.dump(self.runs, f, indent=2)
        except OSError as e:
            logger.warning(f"[!] Could not save run registry: {str(e)}")

    def create_run(self, run_id: str, command: str, config_path: str) -> Dict[str, Any]:
        run = {
            "run_id": run_id,
            "command": command,
            "config_path": config_path,
            "status": "started",
            "progress": {
                "current_step": "started",
                "steps_completed": [],
                "percentage": 0,
            },
            "created_at": datetime.now().isoformat(),
            "updated_at": datetime.now().isoformat(),
            "reports": [],
            "error": None,
        }
        with self._lock:
            self.runs[run_id] = run
            self._save_runs()
        return run

    def update_progress(self, run_id: str, step: str, percentage: int, reports: Optional[List[str]] = None):
        with self._lock:
            if run_id in self.runs:
                run = self.runs[run_id]
                run["progress"]["current_step"] = step
                run["progress"]["percentage"] = percentage
                if step not in run["progress"]["steps_completed"]:
                    run["progress"]["steps_completed"].append(step)
                if reports:
                    run["reports"] = list(reports)
                run["updated_at"] = datetime.now().isoformat()
                run["status"] = "running" if percentage < 100 else "completed"
                self._save_runs()

    def set_error(self, run_id: str, error: str):
        with self._lock:
            if run_id in self.runs:
                run = self.runs[run_id]
                run["error"] = error
                run["status"] = "failed"
                run["updated_at"] = datetime.now().isoformat()
                self._save_runs()

    def get_run(self, run_id: str) -> Optional[Dict[str, Any]]:
        return self.runs.get(run_id)

    def get_all_runs(self) -> Dict[str, Any]:
        return self.runs.copy()
