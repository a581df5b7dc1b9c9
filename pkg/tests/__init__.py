"""
Test package for anytime-reach.
"""
