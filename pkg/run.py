from main_file import main_run
import asyncio
import sys

if __name__ == "__main__":
    sys.exit(asyncio.run(main_run()))
