"""Placeholder; populated later in the build."""
