"""
Evader entry point
Run `python evader.py --help` for the subcommands
"""
import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
