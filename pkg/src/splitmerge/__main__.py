"""Allow ``python -m splitmerge``."""

from .harness.cli import entry

if __name__ == "__main__":
    entry()
