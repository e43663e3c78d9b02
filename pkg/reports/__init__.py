"""Record types, batch execution and rendering for the command-line front end."""
