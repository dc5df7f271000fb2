"""Noise schedules, forward process, DDPM reverse steps and Repaint."""
