"""
Tests for the carousel bandit simulator.
"""
