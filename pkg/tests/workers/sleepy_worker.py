"""Worker that never answers in time."""
import sys
import time

for _ in sys.stdin:
    time.sleep(30)
