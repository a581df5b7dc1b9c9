"""
Command line subcommands for anytime-reach.
"""
