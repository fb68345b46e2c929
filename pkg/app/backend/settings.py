"""
Process-level settings read from the environment
"""
import os


def default_workers() -> int:
    """Worker count used when a run does not name one"""
    raw = os.getenv("WORDPERC_WORKERS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def log_level() -> str:
    return os.getenv("WORDPERC_LOG_LEVEL", "WARNING").upper()


def max_word_length() -> int:
    """Oracle guard on the word length L"""
    return int(os.getenv("WORDPERC_MAX_WORD_LENGTH", "14"))


def memory_budget_bits() -> int:
    """Oracle guard on 2 * (#vertices) * 2^L"""
    return int(os.getenv("WORDPERC_MEMORY_BUDGET_BITS", str(2**31)))


def service_port() -> int:
    return int(os.getenv("PORT", "8000"))
