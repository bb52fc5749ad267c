"""
VALFRAM Validation Toolkit Configuration
Statistical validation of activity-based transport models (steps A1-B3)
"""

import logging
import os
import sys
from pathlib import Path
from typing import Dict, Any

# Load environment variables from .env file
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    print("⚠️  python-dotenv not installed. Install with: pip install python-dotenv", file=sys.stderr)
    print("⚠️  Falling back to system environment variables", file=sys.stderr)

TOOL_VERSION = "1.0.0"

# Project Structure
PROJECT_ROOT = Path(__file__).parent
OUTPUT_DIR = Path(os.getenv("VALFRAM_OUTPUT_DIR", str(PROJECT_ROOT / "output")))


def _env_int(name: str, default: int) -> int:
    """Integer environment setting; unparsable text falls back to the default with a warning"""
    raw = os.getenv(name, str(default))
    try:
        return int(raw)
    except ValueError:
        print(f"⚠️  Warning: {name}={raw!r} is not an integer, using {default}", file=sys.stderr)
        return default


# Runtime settings
RUNTIME = {
    "log_level": os.getenv("VALFRAM_LOG_LEVEL", "INFO").upper(),
    "log_format": "%(asctime)s %(levelname)-7s %(name)s: %(message)s",
    # max_concurrency handed to the LangGraph run
    "workers": _env_int("VALFRAM_WORKERS", 4),
}

# Step defaults - grid size, n-gram profile and time partitioning
DEFAULT_STEP_CONFIG = {
    "grid_rows": 32,
    "grid_cols": 32,
    "ngram_k": 11,        # longest observed schedule
    "ngram_P": 0.9,
    "hour_bins": [[h * 3600, (h + 1) * 3600] for h in range(24)],
    "min_samples": 5,
    "kde_bandwidth": None,  # Scott's rule
}

# The six validation steps and the statistics each one emits
VALFRAM_STEPS = {
    "A1": {
        "name": "Activities in time",
        "task": "KS distance of start times and durations per activity type",
        "data": "travel diaries",
        "statistics": ["ks_duration", "ks_start"],
    },
    "A2": {
        "name": "Activities in space",
        "task": "RMSE of sampled bivariate ECDFs per activity type, KDE heat maps",
        "data": "space-aware travel diaries",
        "statistics": ["ecdf_rmse"],
    },
    "A3": {
        "name": "Structure of activities",
        "task": "chi-square of activity counts per schedule and of n-gram profiles",
        "data": "travel diaries",
        "statistics": ["chi2_count", "chi2_ngram"],
    },
    "B1": {
        "name": "Trips in time",
        "task": "chi-square of modes per hour bin, KS distance of travel times per mode",
        "data": "travel diaries",
        "statistics": ["chi2_mode_hour", "ks_travel_time"],
    },
    "B2": {
        "name": "Trips in space",
        "task": "RMSE between normalized O-D matrices over their joint support",
        "data": "origin-destination matrices",
        "statistics": ["d_od"],
    },
    "B3": {
        "name": "Mode for target activity",
        "task": "chi-square of arriving modes per target activity type",
        "data": "travel diaries",
        "statistics": ["chi2_mode_target"],
    },
}

STEP_ORDER = ["A1", "A2", "A3", "B1", "B2", "B3"]

# Synthetic population used when `generate` runs without a spec file.
# Days open at home and close with sleep; nothing leaves `sleep` but the end.
DEFAULT_GENERATOR_SPEC = {
    "seed": 20160901,
    "population": 1000,
    "chain": {
        "none": {"home": 1.0},
        "home": {"work": 0.5, "school": 0.2, "leisure": 0.15, "shop": 0.15},
        "work": {"sleep": 0.6, "leisure": 0.25, "shop": 0.15},
        "school": {"sleep": 0.6, "leisure": 0.3, "shop": 0.1},
        "leisure": {"sleep": 0.8, "shop": 0.15, "leisure": 0.05},
        "shop": {"sleep": 0.75, "leisure": 0.2, "shop": 0.05},
        "sleep": {"none": 1.0},
    },
    # (mean_s, sd_s) truncated to the day
    "start_time": {
        "home": [0, 900],
        "sleep": [79200, 3600],
        "work": [28800, 3600],
        "school": [28800, 1800],
        "leisure": [61200, 7200],
        "shop": [57600, 7200],
    },
    # (log_mean, log_sd) of seconds
    "duration": {
        "home": [10.13, 0.15],
        "sleep": [10.13, 0.15],
        "work": [10.27, 0.2],
        "school": [9.98, 0.2],
        "leisure": [8.59, 0.4],
        "shop": [7.78, 0.4],
    },
    "mode_choice": {
        # home opens the day, no trip arrives there
        "home": {"car": 0.5, "public_transport": 0.5},
        "sleep": {"car": 0.45, "public_transport": 0.55},
        "work": {"car": 0.6, "public_transport": 0.4},
        "school": {"car": 0.2, "public_transport": 0.8},
        "leisure": {"car": 0.5, "public_transport": 0.5},
        "shop": {"car": 0.7, "public_transport": 0.3},
    },
    # [weight, [x, y], sd_m] components in projected meters
    "location_mixture": {
        "home": [[0.6, [2000.0, 3000.0], 1500.0], [0.4, [8000.0, 6000.0], 2000.0]],
        "sleep": [[0.6, [2000.0, 3000.0], 1500.0], [0.4, [8000.0, 6000.0], 2000.0]],
        "work": [[1.0, [5000.0, 5000.0], 1000.0]],
        "school": [[0.5, [3000.0, 7000.0], 800.0], [0.5, [7000.0, 2000.0], 800.0]],
        "leisure": [[1.0, [5000.0, 4000.0], 2500.0]],
        "shop": [[0.7, [4500.0, 5500.0], 1200.0], [0.3, [9000.0, 9000.0], 900.0]],
    },
    "travel_time": {
        "car": [7.09, 0.5],
        "public_transport": [7.5, 0.4],
    },
}

# Output formatting
OUTPUT_CONFIG = {
    "report_formats": ["json", "csv"],
    "grid_formats": ["csv", "pgm"],
    "pgm_maxval": 255,
    "json_indent": 2,
    "top_ngram_discrepancies": 10,
}


def get_step_info(step: str) -> Dict[str, Any]:
    """Get the description of a validation step"""
    return VALFRAM_STEPS.get(step, {})


def configure_logging(level: str = None) -> logging.Logger:
    """Send toolkit logs to stderr; stdout stays reserved for reports"""
    logging.basicConfig(
        level=getattr(logging, (level or RUNTIME["log_level"]), logging.INFO),
        format=RUNTIME["log_format"],
        stream=sys.stderr,
    )
    return logging.getLogger("valfram")


def validate_config() -> bool:
    """Validate that the environment-derived configuration is usable"""
    ok = True
    if not isinstance(logging.getLevelName(RUNTIME["log_level"]), int):
        print(f"⚠️  Warning: VALFRAM_LOG_LEVEL={RUNTIME['log_level']} is not a logging level", file=sys.stderr)
        ok = False
    if RUNTIME["workers"] < 1:
        print("⚠️  Warning: VALFRAM_WORKERS must be at least 1", file=sys.stderr)
        ok = False
    return ok
