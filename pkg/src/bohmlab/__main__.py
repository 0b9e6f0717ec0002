"""Entry point for running bohmlab as a module.

Allows running with: python -m bohmlab
"""

from bohmlab.cli import app

if __name__ == "__main__":
    app()
