# Settings for the affine_twist project
#
# Every value here can be overridden from the [defaults] section of
# affine_twist.cfg, and most of them again from the command line.

import configparser
import logging
import os

BOT_NAME = "affine_twist"

JOB_MODULES = ["affine_twist.jobs"]

# Package data: golden operators, singular vectors, fusion tables, BP series
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")

# Project file looked up when no --config is given
CONFIG_FILE = "affine_twist.cfg"

# Truncation order in q used when the caller gives none
DEFAULT_TRUNCATION = 24

# Degree bound of epsilon expansions used for z -> 1 limits
EPS_DEGREE = 4
# Adaptive evaluation raises the degree by EPS_DEGREE_STEP up to this bound
EPS_DEGREE_MAX = 10
EPS_DEGREE_STEP = 2

# Extra q-orders carried while evaluating quotients; doubled on each retry
TRUNCATION_GUARD = 4
GUARD_RETRIES = 4

# Order of the cyclotomic field the CLI reports phases in
CYCLOTOMIC_ORDER = 12

# Digits demanded by mlde_fit beyond the number of unknowns
FIT_SAFETY_MARGIN = 5

# Depth bound of the normal-ordering engine
PBW_DEPTH_BOUND = 6

# Parameter bound for the U(L0) reductions
UL0_PARAMETER_BOUND = 4

LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"

FEEDS = {
    "stdout": {
        "format": "json",
        "indent": 2,
    },
    "csv": {
        "format": "csv",
        "overwrite": True,
    },
}

logger = logging.getLogger(__name__)


def _coerce(value, default):
    if isinstance(default, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def get_settings(path=None):
    """
    Collect the UPPERCASE constants of this module, overridden by the
    [defaults] section of the project file when one exists.
    """
    settings = {name: value for name, value in globals().items() if name.isupper()}
    path = path or CONFIG_FILE
    if not os.path.exists(path):
        logger.debug(f"No project file at {path}; using built-in settings")
        return settings

    parser = configparser.ConfigParser()
    parser.read(path)
    if parser.has_section("defaults"):
        for key, raw in parser.items("defaults"):
            name = key.upper()
            if name not in settings:
                logger.warning(f"Ignoring unknown setting {key!r} in {path}")
                continue
            settings[name] = _coerce(raw, settings[name])
    logger.debug(f"Loaded settings overrides from {path}")
    return settings
