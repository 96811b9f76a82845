#!/usr/bin/env python3
"""
Main entry point for ensembench.

Runs the experiment command-line interface from a source checkout.
"""

import sys
import os

# Add the src directory to the Python path so we can import our modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from ensembench.main import main

if __name__ == "__main__":
    sys.exit(main())
