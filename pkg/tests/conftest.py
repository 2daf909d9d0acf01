"""Marks the tests directory so `import helpers` resolves for all modules."""
