import os
import sys
from dotenv import load_dotenv

# Ensure we can import from src
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

# Load env before imports that might need it (AMD_THREADS, AMD_LOG_LEVEL, AMD_LOG_FILE)
load_dotenv()

from src.logger import setup_logger
from src.cli.runner import run


def main() -> int:
    setup_logger()
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
