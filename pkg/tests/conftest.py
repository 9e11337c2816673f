import os
import sys

# Set environment variables early
os.environ.setdefault("CPNC_LOG_LEVEL", "WARNING")

# Ensure current dir is on sys.path
sys.path.insert(0, os.path.abspath("."))
