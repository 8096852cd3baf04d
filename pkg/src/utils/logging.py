import logging
import sys

def setup_logging(level="INFO", fmt='%(asctime)s - %(name)s - %(levelname)s - %(message)s'):
    if isinstance(level, str):
        level = getattr(logging, level.upper())
    logging.basicConfig(
        level=level,
        format=fmt,
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )
    return logging.getLogger("hdinfer")
