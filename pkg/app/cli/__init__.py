#!/usr/bin/env python3
"""RMSup CLI package.

Run with:
    python -m app.cli --help
"""
