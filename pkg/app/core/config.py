import os
from dataclasses import dataclass
from dotenv import load_dotenv

from app.utils.logs import logger

load_dotenv()

# Variables lues au démarrage, avec leur valeur par défaut
DEFAULTS = {
    "TRANSITFLUX_EDGE_LIMIT": "24",
    "TRANSITFLUX_PATH_CAP": "1000000",
    "TRANSITFLUX_COST_CAP": "10000",
    "TRANSITFLUX_JOBS": "1",
    "TRANSITFLUX_BUDGET_SECS": "60",
    "TRANSITFLUX_ITER_CAP": "10000",
    "TRANSITFLUX_CYCLE_WINDOW": "64",
    "TRANSITFLUX_RESTARTS": "64",
}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    log_level: str
    edge_limit: int
    path_cap: int
    cost_cap: int
    jobs: int
    budget_secs: float
    iter_cap: int
    cycle_window: int
    restarts: int
    seed: int


def _read_int(name: str) -> int:
    return int(os.getenv(name, DEFAULTS[name]))


def validate_environment() -> bool:
    """Vérifie que les variables d'environnement (nombres, niveau de log) sont exploitables."""
    invalid_vars = []
    for name in DEFAULTS:
        raw = os.getenv(name, DEFAULTS[name])
        try:
            value = float(raw) if name == "TRANSITFLUX_BUDGET_SECS" else int(raw)
        except ValueError:
            invalid_vars.append(name)
            continue
        if value <= 0:
            invalid_vars.append(name)

    try:
        int(os.getenv("TRANSITFLUX_SEED", "0"))
    except ValueError:
        invalid_vars.append("TRANSITFLUX_SEED")

    if os.getenv("TRANSITFLUX_LOG_LEVEL", "INFO").upper() not in LOG_LEVELS:
        invalid_vars.append("TRANSITFLUX_LOG_LEVEL")

    if invalid_vars:
        error_msg = f"Variables d'environnement invalides : {', '.join(invalid_vars)}"
        logger.error(error_msg)
        raise RuntimeError(error_msg)

    logger.debug("✅ Variables d'environnement valides")
    return True


def get_settings() -> Settings:
    validate_environment()
    return Settings(
        log_level=os.getenv("TRANSITFLUX_LOG_LEVEL", "INFO").upper(),
        edge_limit=_read_int("TRANSITFLUX_EDGE_LIMIT"),
        path_cap=_read_int("TRANSITFLUX_PATH_CAP"),
        cost_cap=_read_int("TRANSITFLUX_COST_CAP"),
        jobs=_read_int("TRANSITFLUX_JOBS"),
        budget_secs=float(os.getenv("TRANSITFLUX_BUDGET_SECS", DEFAULTS["TRANSITFLUX_BUDGET_SECS"])),
        iter_cap=_read_int("TRANSITFLUX_ITER_CAP"),
        cycle_window=_read_int("TRANSITFLUX_CYCLE_WINDOW"),
        restarts=_read_int("TRANSITFLUX_RESTARTS"),
        seed=int(os.getenv("TRANSITFLUX_SEED", "0")),
    )
