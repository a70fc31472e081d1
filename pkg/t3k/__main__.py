"""Main entry point for the command line."""
from t3k.cli import main

if __name__ == "__main__":
    main()
