"""
Subcommands of the `ptmchain` command.
"""
