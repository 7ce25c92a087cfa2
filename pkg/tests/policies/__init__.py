"""
Tests for the policy implementations.
"""
