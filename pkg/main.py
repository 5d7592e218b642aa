"""Точка входа: python main.py <команда> [флаги]. Команды описаны в interface/cli.py."""

import sys

from interface.cli import main

if __name__ == "__main__":
    sys.exit(main())
