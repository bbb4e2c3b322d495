"""Tests for lungsound."""
