"""2+1-D gauge-field conductivity simulator."""
