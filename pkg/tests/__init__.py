"""Tests for bohmlab."""
