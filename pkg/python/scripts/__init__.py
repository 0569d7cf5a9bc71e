"""nsdual maintenance scripts."""
