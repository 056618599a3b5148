"""Simultaneous action and target assignment for multi-robot, multi-target tracking."""
