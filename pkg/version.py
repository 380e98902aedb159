# version.py
# Date: 2026-10-19
# Version: 1.0.0

VERSION = "1.0.0"

def get_version() -> str:
    return VERSION
