import os
import sys
import logging

from dotenv import load_dotenv

load_dotenv()  # picks up a local .env when present

TOOL_NAME = "fibercert"
TOOL_VERSION = "1.0.0"
REPORT_SCHEMA = "fibercert-report/1"

# Multiplication tables are stored densely; the regular representation makes
# |G| x |G| polynomial blocks, so the catalog stops here.
MAX_CATALOG_ORDER = 64

# 𝔽_p kernels convolve in int64; keep p^2 * length well inside 2^63.
MAX_PRIME = 1 << 20


def _int_list(raw):
    return [int(part) for part in raw.replace(" ", "").split(",") if part]


def _optional_float(raw):
    return float(raw) if raw not in (None, "") else None


# ── env ──
DEFAULT_MAX_ORDER = int(os.getenv("FIBERCERT_MAX_ORDER", 12))
DEFAULT_PRIMES = _int_list(os.getenv("FIBERCERT_PRIMES", "2,3,5"))
DEFAULT_JOBS = int(os.getenv("FIBERCERT_JOBS", 1))
FALLBACK_PRIME = int(os.getenv("FIBERCERT_FALLBACK_PRIME", 5))
CROSSCHECK_MAX_ORDER = int(os.getenv("FIBERCERT_CROSSCHECK_MAX_ORDER", 12))
DEFAULT_TIME_LIMIT = _optional_float(os.getenv("FIBERCERT_TIME_LIMIT"))
LOG_LEVEL = os.getenv("FIBERCERT_LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("FIBERCERT_LOG_FILE")


def configure_logging(level=None, log_file=None):
    """Install the shared log format; reports go to stdout, logs to stderr."""
    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = log_file or LOG_FILE
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )
    return logging.getLogger(TOOL_NAME)
