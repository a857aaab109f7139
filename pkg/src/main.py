#!/usr/bin/env python3
"""
Main entry point for the paired-comparison ranking tool.
This script configures logging and runs the command-line interface
(fit, sweep and gof) over a paired-comparison data set.
"""

import os
import sys
import logging
from dotenv import load_dotenv

# Add the src directory to the Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

# Load environment variables from .env file
load_dotenv()

# Configure logging
handlers = [logging.StreamHandler()]
log_file = os.getenv("PAIRED_COMPARISON_LOG_FILE", "paired_comparison.log")
if log_file:
    handlers.append(logging.FileHandler(log_file))

logging.basicConfig(
    level=os.getenv("PAIRED_COMPARISON_LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=handlers
)

logger = logging.getLogger(__name__)

def main(argv=None):
    """Run the paired-comparison command line and exit with its status."""
    try:
        logger.info("Starting paired-comparison analysis")

        # Import here so the environment is loaded before configuration is read
        from paired_comparison.cli.commands import run

        sys.exit(run(argv))
    except SystemExit:
        raise
    except Exception as e:
        logger.error(f"Error running analysis: {e}")
        sys.exit(1)

if __name__ == "__main__":
    main()
