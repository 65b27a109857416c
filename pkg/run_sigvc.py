"""
Entry script for the SIG-VC toolkit
Run from project root: python run_sigvc.py <subcommand> [options]
"""

import sys
import os

# Add project root to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Load environment variables from .env file
from dotenv import load_dotenv
load_dotenv()

# Single-threaded numerics unless the caller asks otherwise
os.environ.setdefault("TF_NUM_INTRAOP_THREADS", "1")
os.environ.setdefault("TF_NUM_INTEROP_THREADS", "1")

from sigvc.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
