import sys

from jointparse.commands import main

if __name__ == "__main__":
    sys.exit(main())
